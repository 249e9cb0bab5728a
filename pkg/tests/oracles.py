"""Independent reference implementations used to cross-check the package.

Everything here is re-derived from the documented algorithms without importing
the modules under test, so agreement is meaningful.
"""

from __future__ import annotations

import zlib

import numpy as np

DIM = 256


def oracle_embedding(text: str, dim: int = DIM) -> np.ndarray:
    s = "^" + text.strip().casefold() + "$"
    v = np.zeros(dim)
    for i in range(len(s) - 2):
        v[zlib.crc32(s[i:i + 3].encode("utf-8")) % dim] += 1.0
    norm = np.linalg.norm(v)
    return v / norm


def oracle_cosine(a: str, b: str) -> float:
    return float(oracle_embedding(a) @ oracle_embedding(b))


def oracle_retrieval_order(rationales: list[str], feedbacks: list[int],
                           query: str) -> list[int]:
    """Full ranking of case indices: descending cosine, then higher feedback,
    then insertion order.

    Similarities use a single matrix-vector product, matching the numeric
    contraction the ranking is defined over; per-row dot products can differ
    by one ulp and artificially break exact mathematical ties.
    """
    sims = np.stack([oracle_embedding(r) for r in rationales]) @ oracle_embedding(query)
    return sorted(range(len(rationales)),
                  key=lambda i: (-sims[i], -feedbacks[i], i))


def oracle_grounding_choice(element_texts: list[str], target: str) -> tuple[int, float]:
    """Best element index for a target description: highest cosine, lowest
    index on ties."""
    sims = np.stack([oracle_embedding(t) for t in element_texts]) @ oracle_embedding(target)
    best = max(range(len(sims)), key=lambda i: (sims[i], -i))
    return best, float(sims[best])


def walk_node_count(doc: dict) -> int:
    """Count snapshot nodes reachable from the root by a raw JSON walk,
    independent of the parser."""
    by_id = {n["id"]: n for n in doc["nodes"]}
    seen = set()
    stack = [0]
    while stack:
        nid = stack.pop()
        if nid in seen:
            raise ValueError(f"node {nid} reached twice")
        seen.add(nid)
        stack.extend(by_id[nid]["children"])
    return len(seen)
