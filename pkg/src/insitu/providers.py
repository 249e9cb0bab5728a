"""Pluggable text-generation, embedding, and search clients.

Every capability ships with a deterministic offline mock so the whole pipeline
runs without network access. Mock outputs are byte-identical across runs and
platforms: the embedder hashes character trigrams with crc32, and generation /
search responses come from fixture files keyed by input digests.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import EmptyText, MalformedResponse, ProviderUnavailable, SchemaError

MOCK_EMBEDDING_DIM = 256

# Slot names each prompt template requires.
TEMPLATE_SLOTS: dict[str, frozenset[str]] = {
    "knowledge_summary": frozenset(
        {"page_title", "page_url", "documents", "element_listing"}
    ),
    "handbook_generation": frozenset(
        {"n", "page_title", "page_url", "interface_knowledge", "element_listing"}
    ),
    "fallback_case": frozenset(
        {"challenge", "page_title", "page_url", "interface_knowledge", "element_listing"}
    ),
    "judge": frozenset(
        {"user_need", "interface_name", "generated_assistance", "annotated_assistance"}
    ),
}

DESIGN_SPACE_TEXT = """\
Available DOM assistance subtypes:
  Insert (add new assistance content):
    insert.overlay_tip     - floating tip anchored to a target element
    insert.widget          - self-contained floating widget panel
    insert.inline_control  - new interactive control placed next to a target
  Mutate (adapt existing elements):
    mutate.style           - change visual styling to direct attention
    mutate.representation  - switch a control's input modality
    mutate.reframe         - rewrite a label or description for clarity
  Recompose (reorganize existing elements):
    recompose.reorder      - change sibling order within a container
    recompose.group        - cluster related elements under a labeled container
    recompose.layout       - reposition whole interface regions
Removal is never an option; deemphasize with mutate.style instead."""

HANDBOOK_PROMPT = """\
Generate N={n} in-situ assistance pairs for the web interface.
Page: {page_title} ({page_url})
Interface Knowledge: {interface_knowledge}
UI Elements:
{element_listing}

Use the page title, URL, knowledge, and available UI elements to infer the
interface's purpose, the actions it supports, and likely sources of user
challenges in navigating the interface. Generate diverse and representative
assistance targeting those challenges, selecting the appropriate assistance
subtype for each.

{design_space}

Common challenge types to reason about:
  - Meaning: the user does not know what a term, field, control, or output means.
  - Location: the user cannot find the right field, feature, or control.
  - Procedure: the user knows the goal but not the steps or interaction pattern.
  - Behavior: the user does not understand why the interface produced a result.
  - Direction: the user completed a step but does not know what to do next.
  - Capability: the user wants something the tool may hide, lack, or make awkward.
Cover the types that genuinely fit this UI.

Return a JSON array of objects with this schema:
{{
  "assistance": "[Action] [target] to [outcome]",
  "whyItHelps": "Users who [need] can [intervention], [outcome].",
  "domSubtype": one of insert.overlay_tip | insert.widget | insert.inline_control
    | mutate.style | mutate.representation | mutate.reframe
    | recompose.reorder | recompose.group | recompose.layout,
  "configuration": {{...subtype-specific execution configuration...}},
  "targets": [{{"uiDescription": "exact element label from UI element list"}}]
}}"""

FALLBACK_PROMPT = """\
A user of the web interface below is stuck and asked for help:
User challenge: {challenge}
Page: {page_title} ({page_url})
Interface Knowledge: {interface_knowledge}
UI Elements:
{element_listing}

{design_space}

Produce exactly one assistance case that resolves the challenge. The
whyItHelps field must restate the user's challenge so the case can be found
again from similar requests. Return ONLY a single JSON object with the same
schema as handbook generation (assistance, whyItHelps, domSubtype,
configuration, targets)."""

KNOWLEDGE_PROMPT = """\
Summarize what this web interface is and how it is used.
Page: {page_title} ({page_url})
Source documents:
{documents}
UI Elements:
{element_listing}

Return a markdown summary with exactly these four section headings:
## What it is
## Features
## Supported interactions
## Unsupported interactions"""

JUDGE_PROMPT = """\
You are evaluating whether a UI assistance suggestion resolves a user's challenge.

User Need: "{user_need}"
Interface: "{interface_name}"
Generated Assistance: "{generated_assistance}"
Reference Assistance: "{annotated_assistance}"

Evaluate whether the generated assistance would resolve the user with their
stated challenges and needs. Do not directly compare it against any reference
answer or ground truth.

Score 0-10:
  10    = Directly and fully addresses the need
  8-9   = Addresses the need well with minor gaps
  6-7   = Mostly addresses the need but misses some important detail
  3-5   = Partially addresses the need
  1-2   = Tangentially related but not helpful
  0     = Does not address the need

Return ONLY valid JSON with the exact structure:
{{
  "score": <number between 0 and 10>,
  "reasoning": "<brief explanation>"
}}"""

_PROMPTS = {
    "knowledge_summary": KNOWLEDGE_PROMPT,
    "handbook_generation": HANDBOOK_PROMPT,
    "fallback_case": FALLBACK_PROMPT,
    "judge": JUDGE_PROMPT,
}


@dataclass(frozen=True)
class GenerationRequest:
    template_id: str
    context: dict[str, str]
    response_schema_id: str

    def __post_init__(self):
        if self.template_id not in TEMPLATE_SLOTS:
            raise SchemaError(f"unknown template_id: {self.template_id!r}")
        missing = TEMPLATE_SLOTS[self.template_id] - set(self.context)
        if missing:
            raise SchemaError(
                f"template {self.template_id} missing slots: {sorted(missing)}"
            )

    def render(self) -> str:
        ctx = dict(self.context)
        ctx.setdefault("design_space", DESIGN_SPACE_TEXT)
        return _PROMPTS[self.template_id].format(**ctx)


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str
    snippet: str

    def __post_init__(self):
        if not self.url:
            raise SchemaError("search result url must be non-empty")


class ProviderMetrics:
    """Atomic call counters, shared across clients so routing tests can observe
    exactly which capabilities a code path touched."""

    def __init__(self):
        self._lock = threading.Lock()
        self.embed_calls = 0
        self.generate_calls = 0
        self.search_calls = 0

    def count_embed(self):
        with self._lock:
            self.embed_calls += 1

    def count_generate(self):
        with self._lock:
            self.generate_calls += 1

    def count_search(self):
        with self._lock:
            self.search_calls += 1

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {
                "embed_calls": self.embed_calls,
                "generate_calls": self.generate_calls,
                "search_calls": self.search_calls,
            }


def mock_embedding(text: str, dim: int = MOCK_EMBEDDING_DIM) -> np.ndarray:
    """Hashed character-trigram counts: case-fold, wrap in boundary markers,
    crc32 each trigram into one of `dim` buckets, count, L2-normalize."""
    folded = text.strip().casefold()
    if not folded:
        raise EmptyText("cannot embed blank text")
    padded = f"^{folded}$"
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        bucket = zlib.crc32(padded[i : i + 3].encode("utf-8")) % dim
        counts[bucket] += 1.0
    return counts / np.linalg.norm(counts)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.clip(np.dot(u, v), -1.0, 1.0))


def context_digest(context: dict[str, str]) -> str:
    canon = json.dumps(context, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def query_digest(query: str) -> str:
    return hashlib.sha256(query.encode("utf-8")).hexdigest()[:16]


class MockEmbeddingClient:
    dim = MOCK_EMBEDDING_DIM

    def __init__(self, metrics: ProviderMetrics | None = None, latency_ms: float = 0.0):
        self.metrics = metrics or ProviderMetrics()
        self.latency_ms = latency_ms

    def embed(self, text: str) -> np.ndarray:
        self.metrics.count_embed()
        if self.latency_ms > 0:
            time.sleep(self.latency_ms / 1000.0)
        return mock_embedding(text, self.dim)


class MockGenerationClient:
    """Canned responses from a fixtures directory, keyed by
    (template_id, digest of context); an optional synthesizer callable covers
    contexts with no fixture (used by the eval harness for fallback and judge
    calls on arbitrary inputs)."""

    def __init__(
        self,
        fixtures_dir: str | Path | None = None,
        latency_ms: float = 0.0,
        synthesizer: Callable[[GenerationRequest], object] | None = None,
        metrics: ProviderMetrics | None = None,
    ):
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.latency_ms = latency_ms
        self.synthesizer = synthesizer
        self.metrics = metrics or ProviderMetrics()

    def generate(self, req: GenerationRequest) -> str:
        self.metrics.count_generate()
        if self.latency_ms > 0:
            time.sleep(self.latency_ms / 1000.0)
        if self.fixtures_dir is not None:
            exact = self.fixtures_dir / f"{req.template_id}-{context_digest(req.context)}.json"
            if exact.exists():
                return exact.read_text(encoding="utf-8")
            default = self.fixtures_dir / f"{req.template_id}.default.json"
            if default.exists():
                return default.read_text(encoding="utf-8")
        if self.synthesizer is not None:
            out = self.synthesizer(req)
            return out if isinstance(out, str) else json.dumps(out, ensure_ascii=False)
        raise ProviderUnavailable(
            f"no fixture for template {req.template_id} "
            f"(digest {context_digest(req.context)})"
        )


class MockSearchClient:
    def __init__(self, fixtures_dir: str | Path | None = None,
                 metrics: ProviderMetrics | None = None):
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.metrics = metrics or ProviderMetrics()

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        if not query.strip():
            raise SchemaError("search query must be non-empty")
        if not 1 <= max_results <= 20:
            raise SchemaError("max_results must be in [1, 20]")
        self.metrics.count_search()
        if self.fixtures_dir is None:
            return []
        path = self.fixtures_dir / f"search-{query_digest(query)}.json"
        if not path.exists():
            return []
        raw = json.loads(path.read_text(encoding="utf-8"))
        results = [SearchResult(**item) for item in raw]
        return results[:max_results]


def seed_generation_fixture(fixtures_dir: str | Path, template_id: str,
                            context: dict[str, str] | None, payload: object) -> Path:
    """Write a canned generation response. context=None seeds the template default."""
    fixtures_dir = Path(fixtures_dir)
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    if context is None:
        path = fixtures_dir / f"{template_id}.default.json"
    else:
        path = fixtures_dir / f"{template_id}-{context_digest(context)}.json"
    text = payload if isinstance(payload, str) else json.dumps(payload, ensure_ascii=False)
    path.write_text(text, encoding="utf-8")
    return path


def seed_search_fixture(fixtures_dir: str | Path, query: str,
                        results: list[dict[str, str]]) -> Path:
    fixtures_dir = Path(fixtures_dir)
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    path = fixtures_dir / f"search-{query_digest(query)}.json"
    path.write_text(json.dumps(results, ensure_ascii=False), encoding="utf-8")
    return path


def parse_json_response(text: str) -> object:
    """Parse a provider response that must be valid JSON, tolerating code fences."""
    stripped = text.strip()
    if stripped.startswith("```"):
        stripped = stripped.strip("`")
        if stripped.startswith("json"):
            stripped = stripped[4:]
    try:
        return json.loads(stripped)
    except json.JSONDecodeError as e:
        raise MalformedResponse(f"response is not valid JSON: {e}") from e


@dataclass
class ProviderConfig:
    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    fixtures_dir: str = ""
    latency_ms: float = 0.0


KNOWN_KINDS = {
    "mock",
    "openai-compatible",
    "anthropic-compatible",
    "gemini-compatible",
    "tavily-compatible",
}


@dataclass
class ProviderSet:
    """The bundle every pipeline stage receives: one client per capability plus
    the shared call counters."""

    embedder: MockEmbeddingClient
    generator: MockGenerationClient
    searcher: MockSearchClient
    metrics: ProviderMetrics

    @classmethod
    def offline(
        cls,
        gen_fixtures_dir: str | Path | None = None,
        search_fixtures_dir: str | Path | None = None,
        gen_latency_ms: float = 0.0,
        embed_latency_ms: float = 0.0,
        synthesizer: Callable[[GenerationRequest], object] | None = None,
    ) -> "ProviderSet":
        metrics = ProviderMetrics()
        return cls(
            embedder=MockEmbeddingClient(metrics=metrics, latency_ms=embed_latency_ms),
            generator=MockGenerationClient(
                fixtures_dir=gen_fixtures_dir,
                latency_ms=gen_latency_ms,
                synthesizer=synthesizer,
                metrics=metrics,
            ),
            searcher=MockSearchClient(fixtures_dir=search_fixtures_dir, metrics=metrics),
            metrics=metrics,
        )


def build_provider_set(configs: dict[str, ProviderConfig]) -> ProviderSet:
    """Instantiate clients from configuration. Network-backed kinds are wired
    here and fail with ProviderUnavailable at call time if unreachable."""
    metrics = ProviderMetrics()
    for name, cfg in configs.items():
        if cfg.kind not in KNOWN_KINDS:
            raise SchemaError(f"unknown provider kind for {name}: {cfg.kind!r}")

    from . import remote  # deferred: remote depends on this module

    emb = configs.get("embedding", ProviderConfig())
    gen = configs.get("generation", ProviderConfig())
    srch = configs.get("search", ProviderConfig())
    embedder = (
        MockEmbeddingClient(metrics=metrics, latency_ms=emb.latency_ms)
        if emb.kind == "mock"
        else remote.RemoteEmbeddingClient(emb, metrics)
    )
    generator = (
        MockGenerationClient(
            fixtures_dir=gen.fixtures_dir or None,
            latency_ms=gen.latency_ms,
            metrics=metrics,
        )
        if gen.kind == "mock"
        else remote.RemoteGenerationClient(gen, metrics)
    )
    searcher = (
        MockSearchClient(fixtures_dir=srch.fixtures_dir or None, metrics=metrics)
        if srch.kind == "mock"
        else remote.RemoteSearchClient(srch, metrics)
    )
    return ProviderSet(embedder=embedder, generator=generator, searcher=searcher,
                       metrics=metrics)
