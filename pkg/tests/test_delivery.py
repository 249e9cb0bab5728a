import random
from types import SimpleNamespace

import pytest

from insitu.delivery import (
    ALLOWED_STYLE_PROPERTIES,
    SUBTYPES,
    apply_sim,
    compile_plan,
    plan_from_dict,
    plan_to_dict,
    revert_sim,
    validate_config,
)
from insitu.dom_model import ASSIST_TAG_ATTR, snapshot_equal
from insitu.errors import CompileError, UngroundedTarget
from insitu.grounding import GroundedTarget, GroundingConfig, ground_case
from insitu.handbook import validate_case
from insitu.providers import MockEmbeddingClient

from genutil import random_case_and_grounding, random_snapshot


def grounded_for(elements, *descriptors):
    out = []
    for d in descriptors:
        e = next(x for x in elements if x.target_descriptor == d)
        out.append(GroundedTarget(ui_description=d, element_index=e.index,
                                  node_id=e.node_id, similarity=1.0))
    return out


def make_case(subtype, configuration, case_id="c000000000001"):
    return SimpleNamespace(case_id=case_id, subtype=subtype,
                           configuration=configuration, targets=[])


class TestValidateConfig:
    def test_unknown_subtype(self):
        assert validate_config("insert.popup", {}) == ["UnknownSubtype:insert.popup"]

    def test_overlay_tip_requires_text(self):
        assert "MissingField:tip_text" in validate_config("insert.overlay_tip", {})
        assert validate_config("insert.overlay_tip",
                               {"tip_text": "hi", "placement": "below"}) == []

    def test_overlay_tip_bad_placement(self):
        violations = validate_config("insert.overlay_tip",
                                     {"tip_text": "hi", "placement": "inside"})
        assert violations == ["BadPlacement:inside"]

    def test_inline_control_nested_detail_accepted(self):
        config = {"detail": {"controlType": "toggle", "label": "Night mode",
                             "action": "emit_event"}}
        assert validate_config("insert.inline_control", config) == []

    def test_inline_control_unknown_type(self):
        violations = validate_config(
            "insert.inline_control",
            {"controlType": "dial", "label": "x", "action": "go"})
        assert "UnknownControlType:dial" in violations

    def test_widget_needs_controls(self):
        assert "EmptyControls" in validate_config(
            "insert.widget", {"title": "W", "controls": []})

    def test_widget_unknown_action(self):
        violations = validate_config("insert.widget", {
            "title": "W", "controls": [{"label": "Do", "action": "teleport"}]})
        assert "UnknownAction:teleport" in violations

    def test_widget_emit_event_needs_name(self):
        violations = validate_config("insert.widget", {
            "title": "W",
            "controls": [{"label": "Do", "action": {"type": "emit_event"}}]})
        assert "MissingField:emit_event.name" in violations

    def test_style_property_allowlist(self):
        violations = validate_config("mutate.style",
                                     {"properties": {"display": "none"}})
        assert violations == ["DisallowedProperty:display"]
        for prop in ALLOWED_STYLE_PROPERTIES:
            assert validate_config("mutate.style",
                                   {"properties": {prop: "x"}}) == []

    def test_representation_switch_closed_set(self):
        assert validate_config("mutate.representation",
                               {"from_modality": "text",
                                "to_modality": "slider"}) == []
        assert validate_config("mutate.representation",
                               {"from_modality": "slider",
                                "to_modality": "text"}) != []

    def test_reframe_list_length(self):
        assert validate_config("mutate.reframe", {"new_text": ["a", "b"]},
                               n_targets=2) == []
        assert validate_config("mutate.reframe", {"new_text": ["a", "b"]},
                               n_targets=3) == ["BadOrder:new_text-length"]

    def test_reorder_order_permutation(self):
        assert validate_config("recompose.reorder", {"order": [1, 0]},
                               n_targets=2) == []
        assert validate_config("recompose.reorder", {"order": [0, 2]},
                               n_targets=2) == ["BadOrder:order"]

    def test_group_too_small(self):
        assert validate_config("recompose.group", {"group_label": "G"},
                               n_targets=1) == ["GroupTooSmall"]

    def test_cross_parent_reorder(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Auto",
                                "[button] Add filter")
        violations = validate_config("recompose.reorder", {}, n_targets=2,
                                     grounded=grounded,
                                     snapshot=voyager_snapshot)
        assert "CrossParentReorder" in violations


class TestCompile:
    def test_requires_grounding(self):
        with pytest.raises(UngroundedTarget):
            compile_plan(make_case("mutate.reframe", {"new_text": "x"}), [],
                         None)

    def test_invalid_config_rejected(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Undo")
        with pytest.raises(CompileError):
            compile_plan(make_case("insert.overlay_tip", {}), grounded,
                         voyager_snapshot)

    def test_plan_id_deterministic(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Undo")
        case = make_case("insert.overlay_tip", {"tip_text": "t"})
        a = compile_plan(case, grounded, voyager_snapshot)
        b = compile_plan(case, grounded, voyager_snapshot)
        assert a.plan_id == b.plan_id
        assert [op.seq for op in a.ops] == list(range(len(a.ops)))

    def test_overlay_offset_below_target(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Undo")
        plan = compile_plan(
            make_case("insert.overlay_tip",
                      {"tip_text": "t", "placement": "below"}),
            grounded, voyager_snapshot)
        [op] = plan.ops
        node = voyager_snapshot.node(grounded[0].node_id)
        dx, dy = op.payload["spec"]["offset"]["dx"], op.payload["spec"]["offset"]["dy"]
        assert dx == node.bbox.x
        assert dy == node.bbox.y + node.bbox.height + 8.0

    def test_reorder_already_ordered_is_nonempty(self, voyager_snapshot,
                                                 voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Auto",
                                "[button] Area")
        plan = compile_plan(make_case("recompose.reorder", {}), grounded,
                            voyager_snapshot)
        assert len(plan.ops) == 1
        payload = plan.ops[0].payload
        assert payload["old_position"] == payload["new_position"]

    def test_group_creates_labeled_container(self, voyager_snapshot,
                                             voyager_elements):
        grounded = grounded_for(voyager_elements, "[input] Minimum horsepower",
                                "[input] Maximum horsepower")
        plan = compile_plan(
            make_case("recompose.group", {"group_label": "Range"}),
            grounded, voyager_snapshot)
        assert plan.ops[0].op_kind == "create_node"
        spec = plan.ops[0].payload["spec"]
        assert spec["attrs"]["class"] == "insitu-group"
        assert spec["children"][0]["text"] == "Range"
        assert [op.op_kind for op in plan.ops[1:]] == ["move_node", "move_node"]

    def test_wire_roundtrip(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Undo")
        plan = compile_plan(make_case("insert.overlay_tip", {"tip_text": "t"}),
                            grounded, voyager_snapshot)
        again = plan_from_dict(plan_to_dict(plan))
        assert plan_to_dict(again) == plan_to_dict(plan)


class TestApplyRevert:
    def test_golden_cases_revert_to_identity(self, golden_cases,
                                             voyager_snapshot,
                                             voyager_elements):
        embedder = MockEmbeddingClient()
        seen = set()
        for raw in golden_cases:
            case = validate_case(raw, voyager_elements)
            assert not hasattr(case, "reason")
            seen.add(case.subtype)
            grounded = ground_case(case, voyager_elements, GroundingConfig(),
                                   embedder)
            plan = compile_plan(case, grounded, voyager_snapshot)
            mutated, record = apply_sim(voyager_snapshot, plan)
            result = revert_sim(mutated, record)
            assert not result.tampered
            assert snapshot_equal(voyager_snapshot, result.snapshot)
        assert seen == set(SUBTYPES)

    def test_applied_nodes_carry_tag(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[button] Undo")
        plan = compile_plan(make_case("insert.overlay_tip", {"tip_text": "t"}),
                            grounded, voyager_snapshot)
        mutated, _ = apply_sim(voyager_snapshot, plan)
        tagged = [n for n in mutated.nodes
                  if n.attributes.get(ASSIST_TAG_ATTR, "").startswith(plan.plan_id)]
        assert tagged

    def test_no_preexisting_node_removed(self, voyager_snapshot,
                                         voyager_elements):
        original_ids = {n.node_id for n in voyager_snapshot.nodes}
        grounded = grounded_for(voyager_elements, "[button] Add filter",
                                "[button] Bookmark this view")
        plan = compile_plan(make_case("recompose.layout", {}), grounded,
                            voyager_snapshot)
        mutated, _ = apply_sim(voyager_snapshot, plan)
        assert original_ids <= {n.node_id for n in mutated.nodes}

    def test_revert_is_idempotent(self, voyager_snapshot, voyager_elements):
        grounded = grounded_for(voyager_elements, "[text] Marks")
        plan = compile_plan(make_case("mutate.reframe", {"new_text": "Shapes"}),
                            grounded, voyager_snapshot)
        mutated, record = apply_sim(voyager_snapshot, plan)
        once = revert_sim(mutated, record)
        twice = revert_sim(once.snapshot, record)
        assert not twice.tampered
        assert snapshot_equal(voyager_snapshot, twice.snapshot)

    def test_tamper_detected_and_best_effort_restore(self, voyager_snapshot,
                                                     voyager_elements):
        grounded = grounded_for(voyager_elements, "[text] Marks")
        plan = compile_plan(make_case("mutate.reframe", {"new_text": "Shapes"}),
                            grounded, voyager_snapshot)
        mutated, record = apply_sim(voyager_snapshot, plan)
        mutated.node(grounded[0].node_id).text = "externally edited"
        result = revert_sim(mutated, record)
        assert result.tampered
        assert result.snapshot.node(grounded[0].node_id).text == "Marks"

    def test_style_attribute_restored_verbatim(self, voyager_snapshot,
                                               voyager_elements):
        snap = voyager_snapshot.copy()
        e = next(x for x in voyager_elements if x.label == "Undo")
        snap.node(e.node_id).attributes["style"] = " color : red ; "
        grounded = grounded_for(voyager_elements, "[button] Undo")
        plan = compile_plan(
            make_case("mutate.style", {"properties": {"outline": "1px solid"}}),
            grounded, snap)
        mutated, record = apply_sim(snap, plan)
        result = revert_sim(mutated, record)
        assert result.snapshot.node(e.node_id).attributes["style"] == " color : red ; "
        assert snapshot_equal(snap, result.snapshot)


def test_seeded_random_plans_revert_to_identity():
    rng = random.Random(20260824)
    for _ in range(60):
        snapshot = random_snapshot(rng)
        case, grounded = random_case_and_grounding(rng, snapshot)
        try:
            plan = compile_plan(case, grounded, snapshot)
        except CompileError:
            # random target picks can violate subtype preconditions
            # (cross-parent reorder, nested group members); that is a valid
            # rejection, not a failure
            continue
        mutated, record = apply_sim(snapshot, plan)
        original_ids = {n.node_id for n in snapshot.nodes}
        assert original_ids <= {n.node_id for n in mutated.nodes}
        result = revert_sim(mutated, record)
        assert not result.tampered
        assert snapshot_equal(snapshot, result.snapshot), case.subtype
