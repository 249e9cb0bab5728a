import json

import pytest
from fastapi.testclient import TestClient

from insitu.config import EngineConfig
from insitu.delivery import apply_sim, plan_from_dict, revert_sim
from insitu.dom_model import serialize_snapshot, snapshot_equal
from insitu.errors import InterfaceNotReady, NotFound, UnknownCaseId
from insitu.knowledge import interface_id_for
from insitu.providers import ProviderSet, seed_generation_fixture
from insitu.service import Engine, create_app

URL = "https://demo.local/voyager"


def handbook_candidates(voyager_elements, n=6):
    out = []
    for i, e in enumerate(voyager_elements[:n]):
        out.append({
            "assistance": f"Show a tip on {e.target_descriptor}",
            "whyItHelps": f"Users who cannot interpret {e.target_descriptor} "
                          f"read note {i} in place.",
            "domSubtype": "insert.overlay_tip",
            "configuration": {"tip_text": f"note {i}", "placement": "below"},
            "targets": [{"uiDescription": e.target_descriptor}],
        })
    return out


def fallback_synthesizer(req):
    if req.template_id != "fallback_case":
        raise AssertionError(req.template_id)
    first = next(
        line for line in req.context["element_listing"].splitlines()
        if line.startswith("#")
    )
    target = first.split(" ", 1)[1]
    return {
        "assistance": "Show a generated tip",
        "whyItHelps": f"Answers: {req.context['challenge']}",
        "domSubtype": "insert.overlay_tip",
        "configuration": {"tip_text": "generated", "placement": "below"},
        "targets": [{"uiDescription": target}],
    }


@pytest.fixture()
def engine(tmp_path, voyager_elements):
    gen_dir = tmp_path / "gen"
    seed_generation_fixture(gen_dir, "handbook_generation", None,
                            handbook_candidates(voyager_elements))
    pset = ProviderSet.offline(gen_fixtures_dir=gen_dir,
                               synthesizer=fallback_synthesizer)
    cfg = EngineConfig(data_dir=str(tmp_path / "data"), handbook_size=6)
    return Engine(cfg, providers=pset)


class TestLifecycle:
    def test_build_and_status(self, engine, voyager_snapshot):
        job_id, interface_id = engine.init_interface(
            URL, "Data Voyager", voyager_snapshot, background=False)
        assert interface_id == interface_id_for(URL)
        status = engine.interface_status(interface_id)
        assert status["status"] == "degraded"  # no search fixtures
        assert status["handbook_size"] == 6

    def test_reuse_from_store_without_provider_calls(self, engine,
                                                     voyager_snapshot,
                                                     tmp_path,
                                                     voyager_elements):
        engine.init_interface(URL, "Data Voyager", voyager_snapshot,
                              background=False)
        pset = ProviderSet.offline()  # no fixtures: a rebuild would fail
        second = Engine(EngineConfig(data_dir=str(tmp_path / "data")),
                        providers=pset)
        _, interface_id = second.init_interface(URL, "Data Voyager",
                                                voyager_snapshot)
        assert second.interface_status(interface_id)["handbook_size"] == 6
        assert pset.metrics.snapshot() == {
            "embed_calls": 0, "generate_calls": 0, "search_calls": 0}

    def test_unknown_interface(self, engine):
        with pytest.raises(NotFound):
            engine.interface_status("0000000000000000")

    def test_assist_before_ready(self, engine, voyager_snapshot):
        state_id = interface_id_for(URL)
        with pytest.raises(NotFound):
            engine.assist(state_id, "help", voyager_snapshot)


class TestAssist:
    def test_retrieved_path_end_to_end(self, engine, voyager_snapshot,
                                       voyager_elements):
        _, interface_id = engine.init_interface(URL, "Data Voyager",
                                                voyager_snapshot,
                                                background=False)
        challenge = f"Users who cannot interpret {voyager_elements[1].target_descriptor} read note 1 in place."
        result = engine.assist(interface_id, challenge, voyager_snapshot)
        assert result["path"] == "retrieved"
        assert 1 <= len(result["candidates"]) <= 3
        top = result["candidates"][0]
        assert top["case"]["assistance"].startswith("Show a tip on")
        mutated, record = apply_sim(voyager_snapshot,
                                    plan_from_dict(top["plan"]))
        reverted = revert_sim(mutated, record)
        assert snapshot_equal(voyager_snapshot, reverted.snapshot)
        assert set(result["timings"]) >= {"retrieval", "generation",
                                          "grounding", "total"}

    def test_generated_path_persists_handbook(self, engine, voyager_snapshot,
                                              tmp_path):
        _, interface_id = engine.init_interface(URL, "Data Voyager",
                                                voyager_snapshot,
                                                background=False)
        result = engine.assist(interface_id,
                               "zzz qqq totally novel challenge vvv",
                               voyager_snapshot)
        assert result["path"] == "generated"
        stored = json.loads(
            (tmp_path / "data" / "interfaces" / interface_id /
             "handbook.json").read_text())
        origins = [c["origin"] for c in stored["cases"]]
        assert "fallback_generated" in origins

    def test_selected_elements_steer_retrieval(self, engine, voyager_snapshot,
                                               voyager_elements):
        _, interface_id = engine.init_interface(URL, "Data Voyager",
                                                voyager_snapshot,
                                                background=False)
        pick = voyager_elements[2]
        result = engine.assist(
            interface_id, f"cannot interpret {pick.target_descriptor}",
            voyager_snapshot, selected_elements=[pick.index])
        assert result["candidates"]

    def test_session_continuity(self, engine, voyager_snapshot):
        _, interface_id = engine.init_interface(URL, "Data Voyager",
                                                voyager_snapshot,
                                                background=False)
        first = engine.assist(interface_id, "novel thing one",
                              voyager_snapshot)
        second = engine.assist(interface_id, "novel thing two",
                               voyager_snapshot,
                               session_id=first["session_id"])
        assert second["session_id"] == first["session_id"]

    def test_feedback_roundtrip(self, engine, voyager_snapshot):
        _, interface_id = engine.init_interface(URL, "Data Voyager",
                                                voyager_snapshot,
                                                background=False)
        result = engine.assist(interface_id, "note 0", voyager_snapshot)
        case_id = result["candidates"][0]["case"]["case_id"]
        assert engine.feedback(case_id, 1) == 1
        with pytest.raises(UnknownCaseId):
            engine.feedback("c000000000000", 1)


class TestHttp:
    @pytest.fixture()
    def client(self, engine):
        return TestClient(create_app(engine))

    def _init(self, client, voyager_snapshot, engine):
        body = {"url": URL, "title": "Data Voyager",
                "snapshot": json.loads(serialize_snapshot(voyager_snapshot))}
        resp = client.post("/v1/interfaces", json=body)
        assert resp.status_code == 202
        interface_id = resp.json()["interface_id"]
        engine.wait_for_build(interface_id)
        return interface_id

    def test_full_flow(self, client, engine, voyager_snapshot):
        interface_id = self._init(client, voyager_snapshot, engine)
        status = client.get(f"/v1/interfaces/{interface_id}").json()
        assert status["handbook_size"] == 6

        snapshot_doc = json.loads(serialize_snapshot(voyager_snapshot))
        resp = client.post("/v1/assist", json={
            "interface_id": interface_id, "challenge": "note 0",
            "snapshot": snapshot_doc,
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["candidates"][0]["plan"]["ops"]

        case_id = body["candidates"][0]["case"]["case_id"]
        resp = client.post("/v1/feedback", json={"case_id": case_id,
                                                 "rating": 1})
        assert resp.json() == {"ok": True, "feedback": 1}

        resp = client.get(f"/v1/interfaces/{interface_id}/handbook")
        assert resp.status_code == 200
        assert json.loads(resp.content)["schema_version"] == 1

    def test_error_mapping(self, client, engine, voyager_snapshot):
        assert client.get("/v1/interfaces/ffffffffffffffff").status_code == 404
        resp = client.post("/v1/assist", json={"interface_id": "x"})
        assert resp.status_code == 400
        resp = client.post("/v1/feedback", json={"case_id": "c0", "rating": 1})
        assert resp.status_code == 404
        interface_id = self._init(client, voyager_snapshot, engine)
        resp = client.post("/v1/assist", json={
            "interface_id": interface_id, "challenge": "x",
            "snapshot": {"bad": "shape"},
        })
        assert resp.status_code == 400
