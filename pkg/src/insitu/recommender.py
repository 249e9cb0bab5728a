"""Hybrid routing between handbook retrieval and on-the-fly generation.

The retrieval threshold is read strictly: a top score must exceed tau for the
handbook case to be reused; a score exactly at the boundary falls back to
generation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .dom_model import DomSnapshot, UiElement, extract_interactables, format_element_listing
from .errors import (
    MalformedResponse,
    NoAssistanceAvailable,
    ProviderUnavailable,
    UnknownElementIndex,
)
from .handbook import AssistanceCase, HandbookIndex, Rejection, validate_case
from .knowledge import InterfaceKnowledge
from .providers import GenerationRequest, ProviderSet, parse_json_response

METHODS = ("generate_only", "handbook_only", "hybrid")


@dataclass
class RecommenderConfig:
    k: int = 3
    tau: float = 0.5
    method: str = "hybrid"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [-1, 1]")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass
class RecommendationSet:
    candidates: list[tuple[AssistanceCase, float | None]]
    path: str  # "retrieved" | "generated"
    timings: dict[str, float] = field(default_factory=dict)
    generation_calls: int = 0


def user_element_hint(
    challenge: str, selected: list[int], elements: list[UiElement]
) -> str:
    """Fold user-picked element descriptors into the query text."""
    if not selected:
        return challenge
    by_index = {e.index: e for e in elements}
    picked = []
    for idx in selected:
        if idx not in by_index:
            raise UnknownElementIndex(f"element index {idx} not in snapshot")
        picked.append(by_index[idx].target_descriptor)
    return f"{challenge} | about: {'; '.join(picked)}"


def _generate_fallback(
    challenge: str,
    knowledge: InterfaceKnowledge,
    elements: list[UiElement],
    element_listing: str,
    providers: ProviderSet,
) -> tuple[AssistanceCase, int]:
    """One fallback generation with a single retry on malformed output.
    Returns the case and the number of generation calls made."""
    request = GenerationRequest(
        template_id="fallback_case",
        context={
            "challenge": challenge,
            "page_title": knowledge.title,
            "page_url": knowledge.url,
            "interface_knowledge": knowledge.doc_summary,
            "element_listing": element_listing,
        },
        response_schema_id="assistance_case",
    )
    calls = 0
    last_reason = ""
    for _ in range(2):
        text = providers.generator.generate(request)
        calls += 1
        try:
            raw = parse_json_response(text)
        except MalformedResponse as e:
            last_reason = str(e)
            continue
        result = validate_case(raw, elements, origin="fallback_generated")
        if isinstance(result, Rejection):
            last_reason = f"{result.reason}: {result.detail}"
            continue
        return result, calls
    raise NoAssistanceAvailable(f"fallback generation failed: {last_reason}") from None


def recommend(
    challenge: str,
    snapshot: DomSnapshot,
    idx: HandbookIndex,
    knowledge: InterfaceKnowledge,
    cfg: RecommenderConfig,
    providers: ProviderSet,
) -> RecommendationSet:
    """Route a challenge to retrieval or generation and return top candidates.

    Hybrid: reuse the handbook when the best retrieval score strictly exceeds
    tau; otherwise synthesize a new case, add it to the handbook, and pad the
    response with the best retrieved cases up to k.
    """
    if not challenge.strip():
        raise ValueError("challenge must be non-empty")
    timings = {"retrieval": 0.0, "generation": 0.0, "grounding": 0.0}

    retrieved: list[tuple[AssistanceCase, float]] = []
    if cfg.method != "generate_only":
        t0 = time.monotonic()
        retrieved = idx.retrieve(challenge, cfg.k, providers.embedder)
        timings["retrieval"] = (time.monotonic() - t0) * 1000.0

    if cfg.method == "handbook_only" or (
        cfg.method == "hybrid" and retrieved and retrieved[0][1] > cfg.tau
    ):
        if not retrieved:
            raise NoAssistanceAvailable("handbook is empty")
        return RecommendationSet(
            candidates=[(case, score) for case, score in retrieved],
            path="retrieved",
            timings=timings,
            generation_calls=0,
        )

    elements = extract_interactables(snapshot)
    listing = format_element_listing(elements)
    t0 = time.monotonic()
    try:
        case, calls = _generate_fallback(challenge, knowledge, elements, listing, providers)
    except ProviderUnavailable:
        if retrieved:
            # Generator down: degrade to the low-confidence retrievals.
            timings["generation"] = (time.monotonic() - t0) * 1000.0
            return RecommendationSet(
                candidates=[(case, score) for case, score in retrieved],
                path="retrieved",
                timings=timings,
                generation_calls=0,
            )
        raise NoAssistanceAvailable("generation unavailable and handbook empty") from None
    timings["generation"] = (time.monotonic() - t0) * 1000.0

    if cfg.method == "hybrid":
        idx.add_case(case, providers.embedder)
    candidates: list[tuple[AssistanceCase, float | None]] = [(case, None)]
    candidates.extend(retrieved[: cfg.k - 1])
    return RecommendationSet(
        candidates=candidates,
        path="generated",
        timings=timings,
        generation_calls=calls,
    )
