"""Resolving semantic UI target descriptions to concrete element indices.

Pure embedding-similarity matching over element descriptors: no text
generation and no extra DOM traversal happens at this stage.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .dom_model import UiElement
from .errors import EmptyElements, UnresolvedTarget


@dataclass(frozen=True)
class GroundedTarget:
    ui_description: str
    element_index: int
    node_id: int
    similarity: float


@dataclass(frozen=True)
class GroundingFailure:
    ui_description: str
    best_similarity: float
    best_index: int | None


@dataclass
class GroundingConfig:
    sigma_min: float = 0.15

    def __post_init__(self):
        if not 0.0 <= self.sigma_min <= 1.0:
            raise ValueError("sigma_min must be in [0, 1]")


def element_embedding_text(element: UiElement) -> str:
    """The text an element is represented by on the matching side: the
    target-matching descriptor, with the section name appended when present."""
    if element.section:
        return f"{element.target_descriptor} - {element.section}"
    return element.target_descriptor


@dataclass
class EmbeddingTable:
    elements: list[UiElement]
    matrix: np.ndarray  # one unit-norm row per element


class ElementEmbeddingCache:
    """One embedding per element descriptor, computed once per snapshot and
    reused across all targets and cases in a session."""

    def __init__(self, embedder):
        self.embedder = embedder
        self._tables: dict[tuple[str, ...], EmbeddingTable] = {}
        self._lock = threading.Lock()

    def table_for(self, elements: list[UiElement]) -> EmbeddingTable:
        key = tuple(element_embedding_text(e) for e in elements)
        # Serialized so concurrent sessions never embed the same table twice.
        with self._lock:
            if key not in self._tables:
                if elements:
                    matrix = np.stack([self.embedder.embed(t) for t in key])
                else:
                    matrix = np.zeros((0, getattr(self.embedder, "dim", 0)))
                self._tables[key] = EmbeddingTable(elements=list(elements),
                                                  matrix=matrix)
            return self._tables[key]


def cache_element_embeddings(elements: list[UiElement], embedder) -> EmbeddingTable:
    cache = ElementEmbeddingCache(embedder)
    return cache.table_for(elements)


def ground_case(
    case,
    elements: list[UiElement],
    cfg: GroundingConfig,
    embedder,
    cache: ElementEmbeddingCache | None = None,
) -> list[GroundedTarget]:
    """Ground every target of a case to its highest-cosine element.

    Ties break to the lowest element index; a target whose best similarity is
    below cfg.sigma_min fails, and all failures are reported together.
    """
    targets = case.targets
    if not targets:
        return []
    if not elements:
        raise EmptyElements("cannot ground targets against an empty element list")
    table = (cache or ElementEmbeddingCache(embedder)).table_for(elements)

    grounded: list[GroundedTarget] = []
    failures: list[GroundingFailure] = []
    for target in targets:
        query = embedder.embed(target.ui_description)
        sims = table.matrix @ query
        best = int(np.argmax(sims))  # first occurrence wins ties: lowest index
        best_sim = float(np.clip(sims[best], -1.0, 1.0))
        if best_sim < cfg.sigma_min:
            failures.append(
                GroundingFailure(target.ui_description, best_sim, best)
            )
            continue
        element = table.elements[best]
        grounded.append(
            GroundedTarget(
                ui_description=target.ui_description,
                element_index=element.index,
                node_id=element.node_id,
                similarity=best_sim,
            )
        )
    if failures:
        raise UnresolvedTarget(failures)
    return grounded
