import itertools
import random

import pytest

from oracles import random_plan, relabel
from urbanplanner.golden import golden_item
from urbanplanner.parser import parse_relaxed
from urbanplanner.plan import (
    CycleError,
    Plan,
    ResourceRef,
    TaskNode,
    TaskType,
    TimeSpec,
    UnknownTaskType,
    canonicalize,
    depths,
    find_cycle,
    serialize_strict,
    topo_order,
    validate,
)


def node(task, tid, dep=(-1,), **args):
    return TaskNode(TaskType(task), tid, tuple(dep), args)


def test_thirteen_types_numbered_in_order():
    assert len(TaskType) == 13
    assert [t.number for t in TaskType] == list(range(1, 14))
    assert TaskType.MAP_MAPPING.number == 10


def test_lookup_applies_aliases_and_rejects_unknown():
    assert TaskType.lookup("arrval_time_estimation") is TaskType.ARRIVAL_TIME_ESTIMATION
    assert TaskType.lookup(" Map Mapping ") is TaskType.MAP_MAPPING
    with pytest.raises(UnknownTaskType) as err:
        TaskType.lookup("teleport")
    assert err.value.name == "teleport"


@pytest.mark.parametrize(
    "text,expected",
    [
        ("0", "0"),
        ("2h", "2h"),
        ("1w", "1w"),
        ("30m", "30m"),
        ("7PM", "7PM"),
        ("7pm", "7PM"),
        ("5:30PM", "5:30PM"),
        ("<resource>-4", "<resource>-4"),
    ],
)
def test_timespec_round_trip(text, expected):
    assert str(TimeSpec.parse(text)) == expected


def test_timespec_rejects_garbage_and_zero_magnitude():
    assert TimeSpec.parse("soon") is None
    assert TimeSpec.parse("0h") is None
    assert TimeSpec.parse("13PM") is None
    with pytest.raises(ValueError):
        TimeSpec.relative(0, "hour")


def test_timespec_seconds_and_hour24():
    assert TimeSpec.parse("1w").seconds == 7 * 86400
    assert TimeSpec.parse("7PM").hour24 == 19
    assert TimeSpec.parse("12AM").hour24 == 0
    assert TimeSpec.parse("12PM").hour24 == 12


def test_resource_ref_form():
    assert str(ResourceRef(12)) == "<resource>-12"
    assert ResourceRef.parse(" <resource>-3 ") == ResourceRef(3)
    assert ResourceRef.parse("resource-3") is None


def test_effective_deps_union_refs():
    p = Plan((node("map_mapping", 2), node("arrival_time_estimation", 1, (2,)),
              node("time_series_prediction", 0, (1,), location_gps_list=ResourceRef(2), time=TimeSpec.from_ref(ResourceRef(1)))))
    assert p.effective_deps[0] == {1, 2}


def test_golden_item_2_warns_on_undeclared_ref():
    result = validate(golden_item(2).plan)
    assert result.ok
    assert [w.code for w in result.warnings] == ["undeclared_ref"]
    assert result.warnings[0].task_id == 0


def test_duplicate_id_violation():
    result = validate(Plan((node("map_mapping", 0), node("bus_arrival", 0))))
    assert not result.ok
    assert "duplicate id: 0" in [v.message for v in result.violations]


def test_empty_plan_violation():
    result = validate(Plan(()))
    assert [v.message for v in result.violations] == ["plan must contain ≥ 1 task"]


def test_two_cycle_violation():
    result = validate(Plan((node("map_mapping", 0, (1,)), node("bus_arrival", 1, (0,)))))
    assert [v.code for v in result.violations] == ["cycle"]


def test_dep_shape_violations():
    bad = Plan((node("map_mapping", 0, ()), node("bus_arrival", 1, (-1, 0)), node("bus_arrival", 2, (-5,))))
    codes = {v.code for v in validate(bad).violations}
    assert codes == {"empty_dep", "mixed_null_dep", "bad_dep"}


def test_unknown_ref_is_violation_and_dangling_dep_a_warning():
    p = Plan((node("recommendation", 0, (1,), location_gps_list=ResourceRef(9)),))
    result = validate(p)
    assert [v.code for v in result.violations] == ["unknown_ref"]
    assert [w.code for w in result.warnings] == ["dangling_dep"]


def _reachable_cycle(n, edges):
    # i reaches itself through one or more edges
    reach = {i: set() for i in range(n)}
    for a, b in edges:
        reach[a].add(b)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            new = set().union(*(reach[j] for j in reach[i])) | reach[i]
            if new != reach[i]:
                reach[i], changed = new, True
    return any(i in reach[i] for i in range(n))


def test_cycle_detection_matches_reachability_on_all_small_digraphs():
    checked = 0
    for n in range(1, 4):
        pairs = [(a, b) for a in range(n) for b in range(n)]
        for mask in range(1 << len(pairs)):
            edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
            graph = {i: {b for a, b in edges if a == i} for i in range(n)}
            assert (find_cycle(graph) is not None) == _reachable_cycle(n, edges)
            checked += 1
    # every 4-node digraph without self-loops
    pairs = [(a, b) for a in range(4) for b in range(4) if a != b]
    for mask in range(1 << len(pairs)):
        edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
        graph = {i: {b for a, b in edges if a == i} for i in range(4)}
        assert (find_cycle(graph) is not None) == _reachable_cycle(4, edges)
        checked += 1
    assert checked > 4000


def test_topo_order_item_31():
    order = topo_order(golden_item(31).plan)
    assert order[0] == 5
    assert order.index(4) < order.index(0)


def test_topo_order_single():
    assert topo_order(Plan((node("bus_arrival", 0),))) == [0]


def test_topo_order_raises_on_cycle():
    with pytest.raises(CycleError) as err:
        topo_order(Plan((node("map_mapping", 0, (1,)), node("bus_arrival", 1, (0,)))))
    assert set(err.value.cycle) == {0, 1}
    assert "cycle: " in str(err.value)


def test_topo_order_random_dags_respect_every_edge():
    rng = random.Random(7)
    for _ in range(500):
        plan = random_plan(rng, max_tasks=12)
        pos = {t: i for i, t in enumerate(topo_order(plan))}
        for i, deps in plan.graph().items():
            for d in deps:
                assert pos[d] < pos[i]


def test_depths_longest_path():
    p = parse_relaxed(golden_item(31).plan_text)
    d = depths(p)
    assert d[5] == 0 and d[4] == 1 and d[0] == 2


def test_canonicalize_forced_relabel():
    p = Plan((node("recommendation", 7, (3,), location_gps_list=ResourceRef(3)), node("map_mapping", 3)))
    c = canonicalize(p)
    assert [(t.id, t.task.value, t.dep) for t in c.tasks] == [(0, "map_mapping", (-1,)), (1, "recommendation", (0,))]
    assert c.tasks[1].args["location_gps_list"] == ResourceRef(0)


def test_canonicalize_item_1_swaps_ids():
    c = canonicalize(golden_item(1).plan)
    assert [t.task for t in c.tasks] == [TaskType.MAP_MAPPING, TaskType.TIME_SERIES_PREDICTION]
    assert c.tasks[1].dep == (0,)


def test_canonicalize_drops_dangling_dep():
    c = canonicalize(golden_item(21).plan)
    assert c.tasks[0].dep == (-1,)


def test_canonicalize_idempotent_and_permutation_invariant():
    rng = random.Random(11)
    for _ in range(200):
        plan = random_plan(rng, max_tasks=8)
        c = canonicalize(plan)
        assert canonicalize(c) == c
        assert serialize_strict(canonicalize(relabel(plan, rng))) == serialize_strict(c)


def test_canonicalize_rejects_cycles_and_duplicates():
    with pytest.raises(ValueError):
        canonicalize(Plan((node("map_mapping", 0, (1,)), node("bus_arrival", 1, (0,)))))
    with pytest.raises(ValueError):
        canonicalize(Plan((node("map_mapping", 0), node("bus_arrival", 0))))


def test_dep_lists_sorted_after_canonicalize():
    p = Plan((node("map_mapping", 5), node("map_mapping", 4), node("spatial_relationship_infer", 1, (5, 4))))
    c = canonicalize(p)
    assert list(c.tasks[-1].dep) == sorted(c.tasks[-1].dep)


def test_all_small_plans_permutation_invariant():
    types = [TaskType.MAP_MAPPING, TaskType.RECOMMENDATION]
    for edges in itertools.product([False, True], repeat=3):
        ids = [0, 1, 2]
        for labels in itertools.product(types, repeat=3):
            nodes = []
            for i in ids:
                deps = tuple(j for j in ids if j < i and edges[i + j - 1])
                nodes.append(TaskNode(labels[i], i, deps or (-1,), {}))
            plan = Plan(tuple(nodes))
            for perm in itertools.permutations([10, 20, 30]):
                m = dict(zip(ids, perm))
                moved = Plan(tuple(TaskNode(t.task, m[t.id], tuple(m[d] for d in t.declared_deps) or (-1,), {}) for t in plan.tasks))
                assert serialize_strict(canonicalize(moved)) == serialize_strict(canonicalize(plan))
