import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_plan
from urbanplanner.golden import golden_corpus, golden_item
from urbanplanner.parser import (
    NoPlanFound,
    PlanParseError,
    PlanStructureError,
    PlanSyntaxError,
    extract_plan_text,
    loads_relaxed,
    parse_relaxed,
)
from urbanplanner.plan import Plan, ResourceRef, TaskType, TimeSpec, UnknownTaskType, serialize_strict, validate


def test_item_5_single_node():
    plan = parse_relaxed(golden_item(5).plan_text)
    (t,) = plan.tasks
    assert t.task is TaskType.BUS_ARRIVAL and t.id == 0 and t.dep == (-1,)
    assert t.args == {"bus_stop": "83139", "service_no": 15, "task_specific": "next"}


def test_empty_list_parses_and_fails_validation():
    plan = parse_relaxed("[]")
    assert plan == Plan(())
    assert [v.message for v in validate(plan).violations] == ["plan must contain ≥ 1 task"]


def test_refs_and_times_promoted():
    t = golden_item(31).plan.by_id[0]
    assert t.args["location_gps_list"] == ResourceRef(5)
    assert t.args["time"] == TimeSpec.from_ref(ResourceRef(4))
    assert golden_item(10).plan.by_id[0].args["time"] == TimeSpec.relative(2, "hour")


def test_time_like_text_outside_time_stays_text():
    t = golden_item(8).plan.by_id[0]
    assert t.args["task_specific"] == ("2km",)


def test_misplaced_args_folded():
    # item 20 closes args before input/domain
    t = golden_item(20).plan.by_id[0]
    assert t.args["domain"] == "parking" and t.args["input"] == "history_steps"


def test_alias_applied():
    plan = parse_relaxed("[{task: arrval_time_estimation, id: 0, dep: [-1], args: {}}]")
    assert plan.tasks[0].task is TaskType.ARRIVAL_TIME_ESTIMATION


def test_unknown_task_names_offender():
    with pytest.raises(UnknownTaskType) as err:
        parse_relaxed("[{task: teleport, id: 0}]")
    assert err.value.name == "teleport"


def test_syntax_error_has_byte_offset_and_expected():
    text = "[{task: 'bus_arrival', id: 0,"
    with pytest.raises(PlanSyntaxError) as err:
        parse_relaxed(text)
    assert err.value.offset == len(text.encode())
    assert err.value.expected


def test_byte_offset_counts_multibyte_characters():
    text = "[{task: 'é', id: 0 ]"
    with pytest.raises(PlanSyntaxError) as err:
        parse_relaxed(text)
    assert err.value.offset == len(text[: err.value.position].encode())
    assert err.value.offset > err.value.position


def test_structure_errors():
    with pytest.raises(PlanStructureError):
        parse_relaxed("{task: map_mapping}")
    with pytest.raises(PlanStructureError):
        parse_relaxed("[{task: map_mapping}]")
    with pytest.raises(PlanStructureError):
        parse_relaxed("[{task: map_mapping, id: x}]")
    with pytest.raises(PlanStructureError):
        parse_relaxed("[{task: map_mapping, id: 0, args: {a: 1}, a: 2}]")


def test_relaxed_dialect_features():
    value = loads_relaxed("""[ {a: 'x', "b": "y\\n", c: [1, 2.5, -3,], d: bare_word, e: <resource>-2, }, ]""")
    assert value == [{"a": "x", "b": "y\n", "c": [1, 2.5, -3], "d": "bare_word", "e": "<resource>-2"}]


def test_extract_with_prose():
    text = "Sure! Here is the plan: [{task: bus_arrival, id: 0, dep: [-1], args: {bus_stop: '1'}}] Hope it helps."
    assert extract_plan_text(text) == "[{task: bus_arrival, id: 0, dep: [-1], args: {bus_stop: '1'}}]"


def test_extract_skips_unparseable_region():
    plan = "[{task: map_mapping, id: 0, dep: [-1], args: {location_name_list: ['NTU']}}]"
    text = f"Numbers [1, 2, 3] first, then {plan}."
    assert extract_plan_text(text) == plan


def test_extract_bare_plan_unchanged():
    assert extract_plan_text(golden_item(5).plan_text) == golden_item(5).plan_text


def test_extract_nothing():
    with pytest.raises(NoPlanFound):
        extract_plan_text("no brackets at all")


def test_golden_strict_round_trip():
    for item in golden_corpus():
        plan = item.plan
        assert parse_relaxed(serialize_strict(plan)) == plan


def test_strict_is_one_line_json():
    s = serialize_strict(golden_item(5).plan)
    assert "\n" not in s
    assert json.loads(s)[0]["task"] == "bus_arrival"


def test_random_plans_round_trip():
    rng = random.Random(3)
    for _ in range(1000):
        p = random_plan(rng, max_tasks=6)
        assert parse_relaxed(serialize_strict(p)) == p


def test_depth_limit():
    with pytest.raises(PlanSyntaxError):
        loads_relaxed("[" * 200 + "]" * 200)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=120))
def test_arbitrary_text_never_crashes(text):
    try:
        plan = parse_relaxed(text)
    except (PlanParseError, UnknownTaskType):
        return
    assert parse_relaxed(serialize_strict(plan)) == plan


def _respace(text: str, rng: random.Random) -> str:
    out, quote = [], None
    for ch in text:
        out.append(ch)
        if quote:
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch in "[]{},:":
            out.append(rng.choice(["", " ", "\n", "\t ", "  \r\n"]))
    return "".join(out)


def test_whitespace_between_tokens_is_ignored():
    rng = random.Random(5)
    for item in golden_corpus():
        for _ in range(5):
            assert parse_relaxed(_respace(item.plan_text, rng)) == item.plan
