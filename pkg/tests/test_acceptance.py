"""Acceptance gate for the engine.

Each test covers one release criterion and prints a single PASS/FAIL line so
the whole gate can be read off a `pytest -s` run at a glance. Criteria P1-P8
exercise the package end to end: plan reversibility, retrieval exactness
against independent oracles, routing, latency architecture, grounding,
handbook lifecycle, and the eval CLI.
"""

from __future__ import annotations

import json
import random
import time
from functools import lru_cache
from types import SimpleNamespace

import numpy as np
import pytest
from click.testing import CliRunner

from insitu.cli import main
from insitu.delivery import apply_sim, compile_plan, plan_from_dict, revert_sim
from insitu.dom_model import parse_snapshot, snapshot_equal
from insitu.evalkit import judge_resolution, load_dataset, prepare_engine, run_eval
from insitu.grounding import (
    ElementEmbeddingCache,
    GroundingConfig,
    element_embedding_text,
    ground_case,
)
from insitu.handbook import (
    HandbookIndex,
    generate_handbook,
    index_from_json,
    index_to_canonical_json,
    validate_case,
)
from insitu.knowledge import InterfaceKnowledge
from insitu.providers import MockEmbeddingClient, ProviderSet, seed_generation_fixture
from insitu.recommender import RecommenderConfig, recommend

from genutil import WORDS, random_case_and_grounding, random_snapshot
from oracles import oracle_embedding


def report(label: str, ok: bool, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"\n{label}: {'PASS' if ok else 'FAIL'}{suffix}", flush=True)
    assert ok, f"{label}{suffix}"


def roundtrip_identity(snapshot, case, grounded) -> tuple[bool, bool]:
    """(reverts to identity, kept every pre-existing node) for one plan."""
    plan = compile_plan(case, grounded, snapshot)
    mutated, record = apply_sim(snapshot, plan)
    original_ids = {n.node_id for n in snapshot.nodes}
    kept = original_ids <= {n.node_id for n in mutated.nodes}
    result = revert_sim(mutated, record)
    identical = not result.tampered and snapshot_equal(snapshot, result.snapshot)
    return identical, kept


def test_p1_subtype_totality(golden_cases, voyager_snapshot, voyager_elements):
    start = time.monotonic()
    embedder = MockEmbeddingClient()
    subtypes = set()
    clean = 0
    for raw in golden_cases:
        case = validate_case(raw, voyager_elements)
        assert not hasattr(case, "reason"), raw["domSubtype"]
        subtypes.add(case.subtype)
        grounded = ground_case(case, voyager_elements, GroundingConfig(),
                               embedder)
        identical, kept = roundtrip_identity(voyager_snapshot, case, grounded)
        clean += identical and kept
    elapsed = time.monotonic() - start
    ok = clean == 9 and len(subtypes) == 9 and elapsed < 5.0
    report("P1 subtype totality", ok,
           f"{clean}/9 subtypes revert to identity in {elapsed:.2f}s")


def test_p2_reversibility_property():
    start = time.monotonic()
    rng = random.Random(20260824)
    clean = 0
    for _ in range(200):
        snapshot = random_snapshot(rng)
        case, grounded = random_case_and_grounding(rng, snapshot)
        identical, kept = roundtrip_identity(snapshot, case, grounded)
        clean += identical and kept
    elapsed = time.monotonic() - start
    ok = clean == 200 and elapsed < 30.0
    report("P2 reversibility property", ok,
           f"{clean}/200 random plans revert, no node removed, {elapsed:.2f}s")


@lru_cache(maxsize=None)
def _reference_vec(text: str) -> np.ndarray:
    return oracle_embedding(text)


class _CachingEmbedder:
    """Memoizing wrapper so 500 draws over a shared rationale pool stay fast."""

    def __init__(self):
        self._inner = MockEmbeddingClient()
        self.dim = self._inner.dim
        self._seen: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        if text not in self._seen:
            self._seen[text] = self._inner.embed(text)
        return self._seen[text]


def test_p3_retrieval_oracle_equivalence(voyager_elements):
    start = time.monotonic()
    embedder = _CachingEmbedder()
    rng = random.Random(500)
    pool = [" ".join(rng.choices(WORDS, k=rng.randint(3, 9)))
            for _ in range(300)]
    matched = 0
    for _ in range(500):
        n = rng.randint(1, 200)
        rationales = rng.choices(pool, k=n)  # duplicates force exact ties
        feedbacks = [rng.randint(-2, 2) for _ in range(n)]
        cases = []
        for i, rationale in enumerate(rationales):
            raw = {
                "assistance": f"case {i}",
                "whyItHelps": rationale,
                "domSubtype": "insert.overlay_tip",
                "configuration": {"tip_text": "t", "placement": "below"},
                "targets": [{"uiDescription": "[button] Undo"}],
            }
            cases.append(validate_case(raw, voyager_elements))
        index = HandbookIndex.build(cases, embedder)
        for case, fb in zip(index.cases, feedbacks):
            case.feedback = fb
        query = " ".join(rng.choices(WORDS, k=rng.randint(2, 6)))
        got = [index.cases.index(c) for c, _ in index.retrieve(query, n, embedder)]
        sims = np.stack([_reference_vec(r) for r in rationales]) @ _reference_vec(query)
        want = sorted(range(n), key=lambda i: (-sims[i], -feedbacks[i], i))
        matched += got == want
    elapsed = time.monotonic() - start
    ok = matched == 500 and elapsed < 60.0
    report("P3 retrieval oracle equivalence", ok,
           f"{matched}/500 draws match brute force exactly, {elapsed:.2f}s")


class _PinnedIndex(HandbookIndex):
    def __init__(self, scored):
        super().__init__()
        self._scored = scored

    def retrieve(self, query, k, embedder):
        return self._scored[:k]


def test_p4_routing_law(voyager_snapshot, voyager_elements):
    knowledge = InterfaceKnowledge(
        interface_id="abc", url="https://demo.local/voyager",
        title="Data Voyager", doc_summary="s", element_inventory=[],
        screenshot_ref=None, built_at="", degraded=True)

    def synthesizer(req):
        return {
            "assistance": "tip", "whyItHelps": f"answers: {req.context['challenge']}",
            "domSubtype": "insert.overlay_tip",
            "configuration": {"tip_text": "t", "placement": "below"},
            "targets": [{"uiDescription": "[button] Undo"}],
        }

    sweep = [1.0, 0.9, 0.51, 0.5 + 1e-9, 0.5, 0.5 - 1e-9, 0.3, 0.0, -0.4]
    lawful = 0
    for score in sweep:
        pset = ProviderSet.offline(synthesizer=synthesizer)
        case = validate_case(synthesizer(SimpleNamespace(context={"challenge": "x"})),
                             voyager_elements)
        idx = _PinnedIndex([(case, score)])
        recommend("some challenge", voyager_snapshot, idx, knowledge,
                  RecommenderConfig(method="hybrid"), pset)
        generated = pset.metrics.generate_calls > 0
        lawful += generated == (score <= 0.5)
    ok = lawful == len(sweep)
    report("P4 routing law", ok,
           f"{lawful}/{len(sweep)} scores route correctly, boundary 0.5 generates")


def test_p5_latency_architecture(fixtures_dir, tmp_path):
    start = time.monotonic()
    records = load_dataset(fixtures_dir / "eval" / "latency_dataset.jsonl")
    assert len(records) == 50

    def run(method, sub):
        engine = prepare_engine(records, fixtures_dir / "eval" / "handbooks",
                                tmp_path / sub, gen_latency_ms=4000.0,
                                embed_latency_ms=5.0)
        return run_eval(records, method, engine, seed=5)

    slow = run("generate_only", "g")
    fast = run("hybrid", "h")
    elapsed = time.monotonic() - start
    ratio = fast.latency_ms["mean"] / slow.latency_ms["mean"]
    ok = (ratio <= 0.1 and fast.fallback_rate is not None
          and fast.fallback_rate <= 0.05 and elapsed < 300.0)
    report("P5 latency architecture", ok,
           f"hybrid/generate mean ratio {ratio:.4f}, "
           f"fallback rate {fast.fallback_rate:.3f}, {elapsed:.1f}s")


def test_p6_grounding_accuracy(fixtures_dir, voyager_elements):
    doc = json.loads((fixtures_dir / "grounding_queries.json").read_text())
    snapshot = parse_snapshot((fixtures_dir / doc["snapshot"]).read_text())
    pset = ProviderSet.offline()
    cache = ElementEmbeddingCache(pset.embedder)
    texts = [element_embedding_text(e) for e in voyager_elements]
    matrix = np.stack([_reference_vec(t) for t in texts])
    by_kind = {"exact": [0, 0], "paraphrase": [0, 0]}
    for entry in doc["queries"]:
        case = SimpleNamespace(
            targets=[SimpleNamespace(ui_description=entry["query"])])
        got = ground_case(case, voyager_elements, GroundingConfig(),
                          pset.embedder, cache)[0]
        sims = matrix @ _reference_vec(entry["query"])
        oracle_best = max(range(len(sims)), key=lambda i: (sims[i], -i))
        tally = by_kind[entry["kind"]]
        tally[1] += 1
        tally[0] += (got.element_index == oracle_best == entry["expected_index"]
                     and got.node_id == entry["expected_node_id"])
    exact, paraphrase = by_kind["exact"], by_kind["paraphrase"]
    gen_calls = pset.metrics.generate_calls
    ok = (exact == [20, 20] and paraphrase == [10, 10] and gen_calls == 0
          and snapshot.url == "https://demo.local/voyager")
    report("P6 grounding accuracy", ok,
           f"exact {exact[0]}/20, paraphrase {paraphrase[0]}/10, "
           f"{gen_calls} generation calls")


def test_p7_handbook_lifecycle(fixtures_dir, tmp_path, voyager_snapshot,
                               voyager_elements):
    candidates = json.loads(
        (fixtures_dir / "handbook_candidates_120.json").read_text())
    seed_generation_fixture(tmp_path, "handbook_generation", None, candidates)
    knowledge = InterfaceKnowledge(
        interface_id="abc", url="https://demo.local/voyager",
        title="Data Voyager", doc_summary="s", element_inventory=[],
        screenshot_ref=None, built_at="", degraded=True)

    def synthesizer(req):
        return {
            "assistance": "Generated tip",
            "whyItHelps": req.context["challenge"],
            "domSubtype": "insert.overlay_tip",
            "configuration": {"tip_text": "t", "placement": "below"},
            "targets": [{"uiDescription": "[button] Undo"}],
        }

    pset = ProviderSet.offline(gen_fixtures_dir=tmp_path,
                               synthesizer=synthesizer)
    result = generate_handbook(knowledge, voyager_elements, 120, pset)
    stored_ok = len(result.cases) == 117
    reasons_ok = (len(result.rejections) == 3
                  and all(r.reason for r in result.rejections))

    embedder = MockEmbeddingClient()
    index = HandbookIndex.build(result.cases, embedder)
    text = index_to_canonical_json(index)
    roundtrip_ok = index_to_canonical_json(index_from_json(text)) == text

    challenge = "zz qq entirely novel warp coil challenge"
    rec = recommend(challenge, voyager_snapshot, index, knowledge,
                    RecommenderConfig(method="hybrid"), pset)
    top, score = index.retrieve(challenge, 1, embedder)[0]
    reuse_ok = (rec.path == "generated"
                and top.origin == "fallback_generated"
                and score == pytest.approx(1.0))
    ok = stored_ok and reasons_ok and roundtrip_ok and reuse_ok
    report("P7 handbook lifecycle", ok,
           f"{len(result.cases)} kept / {len(result.rejections)} rejected, "
           f"roundtrip byte-identical {roundtrip_ok}, fallback reusable {reuse_ok}")


def test_p8_eval_methodology(fixtures_dir, tmp_path):
    runner = CliRunner()
    dataset = str(fixtures_dir / "eval" / "eval_dataset.jsonl")
    reports = {}
    for method, judge in [("hybrid", "on"), ("handbook", "off"),
                          ("generate", "off")]:
        out = tmp_path / f"{method}.json"
        result = runner.invoke(main, [
            "eval", "--dataset", dataset, "--method", method,
            "--judge", judge, "--seed", "11",
            "--data-dir", str(tmp_path / method), "--out", str(out)])
        assert result.exit_code == 0, result.output
        reports[method] = json.loads(out.read_text())

    hybrid = reports["hybrid"]
    scores = [r["resolution_score"] for r in hybrid["per_record"]]
    shape_ok = (hybrid["n_records"] == 24
                and set(hybrid["latency_ms"]) == {"mean", "p50", "p95"}
                and "success_rate" in hybrid
                and hybrid["fallback_rate"] is not None
                and len(scores) == 24
                and all(s is not None and 0.0 <= s <= 10.0 for s in scores))
    clamp_ok = judge_resolution(
        "c", "a", "ref", "Demo",
        ProviderSet.offline(synthesizer=lambda r: '{"score": 42, "reasoning": "x"}'),
    )[0] == 10.0
    isolation_ok = (
        reports["handbook"]["provider_calls"]["generate_calls"] == 0
        and reports["generate"]["retrieval_calls"] == 0
        and reports["generate"]["fallback_rate"] is None)
    ok = shape_ok and clamp_ok and isolation_ok
    report("P8 eval methodology", ok,
           f"report shape {shape_ok}, clamping {clamp_ok}, "
           f"method isolation {isolation_ok}")
