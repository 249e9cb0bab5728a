import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insitu.errors import (
    EmptyText,
    MalformedResponse,
    ProviderUnavailable,
    SchemaError,
)
from insitu.providers import (
    GenerationRequest,
    MockEmbeddingClient,
    MockGenerationClient,
    MockSearchClient,
    ProviderConfig,
    ProviderSet,
    build_provider_set,
    cosine,
    mock_embedding,
    parse_json_response,
    seed_generation_fixture,
    seed_search_fixture,
)

from oracles import oracle_embedding

TEXTS = st.text(min_size=1, max_size=120).filter(lambda s: s.strip())


class TestMockEmbedding:
    @settings(max_examples=200, deadline=None)
    @given(text=TEXTS)
    def test_matches_independent_oracle(self, text):
        np.testing.assert_array_equal(mock_embedding(text), oracle_embedding(text))

    @given(text=TEXTS)
    def test_unit_norm(self, text):
        assert np.linalg.norm(mock_embedding(text)) == pytest.approx(1.0)

    def test_case_folding(self):
        np.testing.assert_array_equal(mock_embedding("Sort Data"),
                                      mock_embedding("sort data"))

    def test_blank_rejected(self):
        with pytest.raises(EmptyText):
            mock_embedding("   ")

    def test_deterministic(self):
        a = mock_embedding("the export button")
        b = mock_embedding("the export button")
        assert a.tobytes() == b.tobytes()

    @given(a=TEXTS, b=TEXTS)
    def test_cosine_bounds(self, a, b):
        assert -1.0 <= cosine(mock_embedding(a), mock_embedding(b)) <= 1.0

    def test_similar_texts_closer_than_unrelated(self):
        q = mock_embedding("where is the export button")
        near = mock_embedding("where is the export control")
        far = mock_embedding("zzz qqq vvv")
        assert cosine(q, near) > cosine(q, far)


class TestGenerationRequest:
    def test_unknown_template(self):
        with pytest.raises(SchemaError):
            GenerationRequest("mystery", {}, "x")

    def test_missing_slots(self):
        with pytest.raises(SchemaError):
            GenerationRequest("judge", {"user_need": "help"}, "judge_score")

    def test_render_fills_template(self):
        req = GenerationRequest(
            "judge",
            {"user_need": "find sort", "interface_name": "Demo",
             "generated_assistance": "tip", "annotated_assistance": "ref"},
            "judge_score",
        )
        text = req.render()
        assert 'User Need: "find sort"' in text
        assert "Score 0-10" in text


class TestMockClients:
    def test_fixture_lookup_and_default(self, tmp_path):
        ctx = {"user_need": "a", "interface_name": "b",
               "generated_assistance": "c", "annotated_assistance": "d"}
        seed_generation_fixture(tmp_path, "judge", ctx, {"score": 8, "reasoning": "ok"})
        seed_generation_fixture(tmp_path, "judge", None, {"score": 5, "reasoning": "dflt"})
        client = MockGenerationClient(fixtures_dir=tmp_path)
        req = GenerationRequest("judge", ctx, "judge_score")
        assert json.loads(client.generate(req))["score"] == 8
        other = GenerationRequest("judge", {**ctx, "user_need": "zzz"}, "judge_score")
        assert json.loads(client.generate(other))["score"] == 5

    def test_no_fixture_raises(self, tmp_path):
        client = MockGenerationClient(fixtures_dir=tmp_path)
        req = GenerationRequest(
            "judge",
            {"user_need": "a", "interface_name": "b",
             "generated_assistance": "c", "annotated_assistance": "d"},
            "judge_score",
        )
        with pytest.raises(ProviderUnavailable):
            client.generate(req)

    def test_synthesizer_covers_missing_fixtures(self):
        client = MockGenerationClient(synthesizer=lambda r: {"score": 7})
        req = GenerationRequest(
            "judge",
            {"user_need": "a", "interface_name": "b",
             "generated_assistance": "c", "annotated_assistance": "d"},
            "judge_score",
        )
        assert json.loads(client.generate(req)) == {"score": 7}

    def test_search_fixture_and_miss(self, tmp_path):
        seed_search_fixture(tmp_path, "Demo tutorial", [
            {"url": "https://x", "title": "Docs", "snippet": "how to"},
        ])
        client = MockSearchClient(fixtures_dir=tmp_path)
        assert len(client.search("Demo tutorial", 5)) == 1
        assert client.search("unseeded query", 5) == []

    def test_search_validation(self):
        client = MockSearchClient()
        with pytest.raises(SchemaError):
            client.search("", 5)
        with pytest.raises(SchemaError):
            client.search("x", 0)

    def test_metrics_counters(self):
        pset = ProviderSet.offline(synthesizer=lambda r: {"score": 1})
        pset.embedder.embed("text")
        pset.searcher.search("q", 3)
        req = GenerationRequest(
            "judge",
            {"user_need": "a", "interface_name": "b",
             "generated_assistance": "c", "annotated_assistance": "d"},
            "judge_score",
        )
        pset.generator.generate(req)
        assert pset.metrics.snapshot() == {
            "embed_calls": 1, "generate_calls": 1, "search_calls": 1,
        }


class TestParseJsonResponse:
    def test_plain(self):
        assert parse_json_response('{"a": 1}') == {"a": 1}

    def test_code_fence(self):
        assert parse_json_response('```json\n{"a": 1}\n```') == {"a": 1}

    def test_malformed(self):
        with pytest.raises(MalformedResponse):
            parse_json_response("not json at all")


class TestBuildProviderSet:
    def test_default_is_mock(self):
        pset = build_provider_set({})
        assert isinstance(pset.embedder, MockEmbeddingClient)

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            build_provider_set({"generation": ProviderConfig(kind="quantum")})

    def test_remote_kinds_wire_up(self):
        pset = build_provider_set({
            "generation": ProviderConfig(kind="openai-compatible",
                                         endpoint="http://127.0.0.1:1",
                                         api_key_env="MISSING_KEY"),
        })
        req = GenerationRequest(
            "judge",
            {"user_need": "a", "interface_name": "b",
             "generated_assistance": "c", "annotated_assistance": "d"},
            "judge_score",
        )
        with pytest.raises(ProviderUnavailable):
            pset.generator.generate(req)
