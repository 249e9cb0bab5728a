"""The Assistance Handbook: generation, validation, indexing, and persistence.

A handbook is a set of pre-computed assistance cases for one interface. Each
case's rationale is embedded once; retrieval is an exact exhaustive cosine
search over those vectors (at handbook scale an index structure would buy
nothing).
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .delivery import SUBTYPES, validate_config
from .dom_model import UiElement
from .errors import (
    CorruptStore,
    MalformedResponse,
    NotFound,
    UnknownCaseId,
    ZeroValidCases,
)
from .knowledge import InterfaceKnowledge
from .providers import GenerationRequest, ProviderSet, parse_json_response

log = logging.getLogger(__name__)

CATEGORIES = ("WHAT", "WHERE", "HOW", "WHY", "NEXT", "CAN")
# The generation prompt reasons in these aliases; stored under the short names.
CATEGORY_ALIASES = {
    "Meaning": "WHAT",
    "Location": "WHERE",
    "Procedure": "HOW",
    "Behavior": "WHY",
    "Direction": "NEXT",
    "Capability": "CAN",
}

DEDUP_THRESHOLD = 0.98
HANDBOOK_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class UiTarget:
    ui_description: str


@dataclass
class AssistanceCase:
    case_id: str
    assistance: str
    rationale: str
    subtype: str
    targets: list[UiTarget]
    configuration: dict
    category: str | None = None
    rationale_embedding: np.ndarray | None = None
    feedback: int = 0
    origin: str = "handbook_generated"


@dataclass(frozen=True)
class Rejection:
    index: int
    reason: str
    detail: str = ""


@dataclass
class HandbookBuildResult:
    cases: list[AssistanceCase]
    rejections: list[Rejection]


def _case_id_for(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return "c" + hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def validate_case(
    raw: object,
    elements: list[UiElement],
    origin: str = "handbook_generated",
) -> AssistanceCase | Rejection:
    """Validate one raw generated case against the closed subtype set, the
    element list (exact target-descriptor match), and the subtype's
    configuration schema. Returns the case or a Rejection with the reason."""
    if not isinstance(raw, dict):
        return Rejection(-1, "MissingField", "case is not an object")
    for required in ("assistance", "whyItHelps", "domSubtype", "configuration", "targets"):
        if required not in raw:
            return Rejection(-1, "MissingField", required)
    subtype = raw["domSubtype"]
    if subtype not in SUBTYPES:
        return Rejection(-1, "UnknownSubtype", str(subtype))
    raw_targets = raw["targets"]
    if not isinstance(raw_targets, list):
        return Rejection(-1, "MissingField", "targets must be a list")
    if not raw_targets and subtype != "insert.widget":
        return Rejection(-1, "MissingField", f"{subtype} requires at least one target")
    descriptors = {e.target_descriptor for e in elements}
    targets: list[UiTarget] = []
    for t in raw_targets:
        desc = t.get("uiDescription") if isinstance(t, dict) else None
        if not desc:
            return Rejection(-1, "MissingField", "target.uiDescription")
        if desc not in descriptors:
            return Rejection(-1, "UnlistedTarget", desc)
        targets.append(UiTarget(ui_description=desc))
    violations = validate_config(subtype, raw["configuration"],
                                 n_targets=len(targets) or None)
    if violations:
        return Rejection(-1, "BadConfiguration", "; ".join(violations))
    if not str(raw["assistance"]).strip() or not str(raw["whyItHelps"]).strip():
        return Rejection(-1, "MissingField", "assistance/whyItHelps must be non-empty")
    category = raw.get("category")
    if category is not None:
        category = CATEGORY_ALIASES.get(category, category)
        if category not in CATEGORIES:
            category = None
    return AssistanceCase(
        case_id=_case_id_for(raw),
        assistance=str(raw["assistance"]),
        rationale=str(raw["whyItHelps"]),
        subtype=subtype,
        targets=targets,
        configuration=dict(raw["configuration"]),
        category=category,
        origin=origin,
    )


def generate_handbook(
    knowledge: InterfaceKnowledge,
    elements: list[UiElement],
    n: int,
    providers: ProviderSet,
    element_listing: str | None = None,
) -> HandbookBuildResult:
    """Prompt the generator for n candidate cases and keep the valid ones."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if element_listing is None:
        element_listing = "\n".join(e.descriptor for e in elements)
    request = GenerationRequest(
        template_id="handbook_generation",
        context={
            "n": str(n),
            "page_title": knowledge.title,
            "page_url": knowledge.url,
            "interface_knowledge": knowledge.doc_summary,
            "element_listing": element_listing,
        },
        response_schema_id="assistance_case_list",
    )
    candidates = None
    for attempt in range(2):  # one retry on a malformed response
        text = providers.generator.generate(request)
        try:
            candidates = parse_json_response(text)
            break
        except MalformedResponse:
            if attempt == 1:
                raise
    if not isinstance(candidates, list):
        raise MalformedResponse("handbook generation must return a JSON array")

    cases: list[AssistanceCase] = []
    rejections: list[Rejection] = []
    for i, raw in enumerate(candidates):
        result = validate_case(raw, elements)
        if isinstance(result, Rejection):
            rejection = Rejection(index=i, reason=result.reason, detail=result.detail)
            rejections.append(rejection)
            log.warning("rejected handbook candidate %d: %s (%s)",
                        i, rejection.reason, rejection.detail)
        elif len(cases) < n:
            cases.append(result)
    if not cases:
        raise ZeroValidCases(f"all {len(candidates)} candidates were rejected")
    return HandbookBuildResult(cases=cases, rejections=rejections)


class HandbookIndex:
    """Cases plus a row-aligned matrix of unit-norm rationale embeddings."""

    def __init__(self, cases: list[AssistanceCase] | None = None,
                 vectors: np.ndarray | None = None, dim: int = 256):
        self.cases: list[AssistanceCase] = list(cases or [])
        if vectors is None:
            vectors = np.zeros((0, dim))
        self.vectors = vectors
        self.dim = vectors.shape[1] if vectors.size else dim
        self.retrieval_calls = 0  # observable for method-isolation checks

    def __len__(self) -> int:
        return len(self.cases)

    @classmethod
    def build(cls, cases: list[AssistanceCase], embedder) -> "HandbookIndex":
        dim = getattr(embedder, "dim", 256)
        if not cases:
            return cls(dim=dim)
        vectors = np.stack([embedder.embed(c.rationale) for c in cases])
        for case, row in zip(cases, vectors):
            case.rationale_embedding = row
        return cls(cases=cases, vectors=vectors, dim=dim)

    def retrieve(self, query: str, k: int, embedder) -> list[tuple[AssistanceCase, float]]:
        """Top-k cases by cosine against the rationale embeddings, descending.

        Exact score ties break by higher feedback tally, then insertion order.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        self.retrieval_calls += 1
        if not self.cases:
            return []
        q = embedder.embed(query)
        sims = self.vectors @ q
        order = sorted(
            range(len(self.cases)),
            key=lambda i: (-sims[i], -self.cases[i].feedback, i),
        )
        return [
            (self.cases[i], float(np.clip(sims[i], -1.0, 1.0)))
            for i in order[:k]
        ]

    def add_case(self, case: AssistanceCase, embedder) -> bool:
        """Append a validated case; drops near-duplicates (rationale cosine
        above the dedup threshold). Returns False when dropped."""
        vec = embedder.embed(case.rationale)
        if len(self.cases):
            if float(np.max(self.vectors @ vec)) > DEDUP_THRESHOLD:
                return False
        case.rationale_embedding = vec
        self.cases.append(case)
        self.vectors = np.vstack([self.vectors, vec]) if self.vectors.size else vec[None, :]
        return True

    def record_feedback(self, case_id: str, delta: int) -> int:
        if delta not in (-1, 1):
            raise ValueError("feedback delta must be -1 or +1")
        case = self.case_by_id(case_id)
        case.feedback += delta
        return case.feedback

    def case_by_id(self, case_id: str) -> AssistanceCase:
        for case in self.cases:
            if case.case_id == case_id:
                return case
        raise UnknownCaseId(case_id)


def build_index(cases: list[AssistanceCase], embedder) -> HandbookIndex:
    return HandbookIndex.build(cases, embedder)


def _encode_embedding(vec: np.ndarray | None) -> str | None:
    if vec is None:
        return None
    # Full float64 so a load reproduces the exact pre-save rankings.
    return base64.b64encode(vec.astype("<f8").tobytes()).decode("ascii")


def _decode_embedding(data: str | None) -> np.ndarray | None:
    if data is None:
        return None
    return np.frombuffer(base64.b64decode(data), dtype="<f8").astype(np.float64)


def index_to_canonical_json(index: HandbookIndex) -> str:
    doc = {
        "schema_version": HANDBOOK_SCHEMA_VERSION,
        "cases": [
            {
                "case_id": c.case_id,
                "assistance": c.assistance,
                "rationale": c.rationale,
                "subtype": c.subtype,
                "targets": [{"ui_description": t.ui_description} for t in c.targets],
                "configuration": c.configuration,
                "category": c.category,
                "rationale_embedding": _encode_embedding(c.rationale_embedding),
                "feedback": c.feedback,
                "origin": c.origin,
            }
            for c in index.cases
        ],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def index_from_json(text: str) -> HandbookIndex:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptStore(f"handbook.json is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("schema_version") != HANDBOOK_SCHEMA_VERSION:
        raise CorruptStore(
            f"unknown handbook schema version: {doc.get('schema_version') if isinstance(doc, dict) else None}"
        )
    cases = []
    for raw in doc["cases"]:
        cases.append(
            AssistanceCase(
                case_id=raw["case_id"],
                assistance=raw["assistance"],
                rationale=raw["rationale"],
                subtype=raw["subtype"],
                targets=[UiTarget(ui_description=t["ui_description"]) for t in raw["targets"]],
                configuration=raw["configuration"],
                category=raw.get("category"),
                rationale_embedding=_decode_embedding(raw.get("rationale_embedding")),
                feedback=raw.get("feedback", 0),
                origin=raw.get("origin", "handbook_generated"),
            )
        )
    vectors = (
        np.stack([c.rationale_embedding for c in cases])
        if cases and all(c.rationale_embedding is not None for c in cases)
        else None
    )
    return HandbookIndex(cases=cases, vectors=vectors)


class HandbookStore:
    """Persistence next to the interface knowledge:
    <data_dir>/interfaces/<interface_id>/handbook.json."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)

    def _path(self, interface_id: str) -> Path:
        return self.data_dir / "interfaces" / interface_id / "handbook.json"

    def save(self, interface_id: str, index: HandbookIndex) -> None:
        path = self._path(interface_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(index_to_canonical_json(index), encoding="utf-8")

    def load(self, interface_id: str) -> HandbookIndex:
        path = self._path(interface_id)
        if not path.exists():
            raise NotFound(f"no handbook stored for interface {interface_id}")
        return index_from_json(path.read_text(encoding="utf-8"))

    def exists(self, interface_id: str) -> bool:
        return self._path(interface_id).exists()
