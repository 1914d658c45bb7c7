"""Acceptance criteria, one test each. Tolerances are pinned at module level.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import json
import math
import re
import random
import time
from dataclasses import replace


from oracles import (
    TYPES,
    brute_isomorphic,
    chord_distance_m,
    interp_oracle,
    multiset_prf,
    random_plan,
    zscore_flags,
)
from synthetic import ParaphraseBackend
from urbanplanner.adapters import bundled_fixture_dir, haversine_m, stub_toolkit
from urbanplanner.adapters.series import anomaly_scores, interpolate
from urbanplanner.cli import main
from urbanplanner.config import load_config
from urbanplanner.dataset import GeneratedExample, generate, golden_seeds, split_and_stratify, write_jsonl
from urbanplanner.evaluation import COMPLEX, SIMPLE, EvalExample, evaluate, example_accuracy, example_prf
from urbanplanner.executor import OK, execute
from urbanplanner.gateway import Gateway, RecordingBackend, ReplayStore
from urbanplanner.golden import CASE_STUDY_QUERY, golden_corpus, golden_item
from urbanplanner.outputs import GpsPoints, Text
from urbanplanner.parser import PlanParseError, extract_plan_text, parse_relaxed
from urbanplanner.pipeline import Pipeline, PipelineRun
from urbanplanner.plan import Plan, TaskNode, TaskType, UnknownTaskType, canonicalize, serialize_strict, validate
from urbanplanner.prompts import COMPONENTS, build_inference_prompt, default_templates, split_sections
from urbanplanner.registry import MatchResult, Registry, candidates_for, default_registry, match_all_fallback, match_fallback

PRF_TOL = 1e-12
HAVERSINE_TOL_M = 0.1
INTERP_TOL = 1e-9
ARRIVAL_TOL_S = 1e-3
EXECUTOR_BUDGET_S = 60.0
ASK_BUDGET_S = 5.0
FUZZ_CASES = 10_000
RANDOM_DAGS = 500
PAIRS = 1000
CORPORA = 1000

FIXTURES = bundled_fixture_dir()


def fixture_gps(name):
    """Gazetteer coordinates read straight from the fixture file."""
    entries = json.loads((FIXTURES / "gazetteer.json").read_text())["entries"]
    (entry,) = [e for e in entries if e["name"] == name]
    return tuple(entry["gps"])


# 1 -------------------------------------------------------------------------------


def test_criterion_01_golden_corpus_integrity():
    corpus = golden_corpus()
    assert len(corpus) == 34
    ok = 0
    for item in corpus:
        plan = parse_relaxed(extract_plan_text(item.answer))
        assert validate(plan).ok, item.number
        once = canonicalize(plan)
        assert canonicalize(once) == once
        assert serialize_strict(canonicalize(once)) == serialize_strict(once)
        strict = serialize_strict(plan)
        assert parse_relaxed(strict) == plan
        assert serialize_strict(parse_relaxed(strict)) == strict
        ok += 1
    assert ok == 34


# 2 -------------------------------------------------------------------------------


def test_criterion_02_metric_oracle_equivalence():
    rng = random.Random(2024)
    iso_checked = 0
    for _ in range(PAIRS):
        a = random_plan(rng, max_tasks=8)
        b = random_plan(rng, max_tasks=8) if rng.random() < 0.5 else _perturb(a, rng)
        got = example_prf(a, b)
        want = multiset_prf([t.task.value for t in a.tasks], [t.task.value for t in b.tasks])
        assert all(abs(x - y) <= PRF_TOL for x, y in zip(got, want))
        small_a = random_plan(rng, max_tasks=6)
        small_b = _perturb(small_a, rng) if rng.random() < 0.6 else random_plan(rng, n=len(small_a.tasks))
        assert example_accuracy(small_a, small_b) == brute_isomorphic(small_a, small_b)
        iso_checked += 1
    assert iso_checked == PAIRS


def _perturb(plan: Plan, rng: random.Random) -> Plan:
    """Same shape with fresh ids, sometimes with one task type changed."""
    ids = [t.id for t in plan.tasks]
    new = dict(zip(ids, rng.sample(range(50, 50 + 3 * len(ids)), len(ids))))
    text = serialize_strict(plan)
    data = json.loads(text)
    for row in data:
        row["id"] = new[row["id"]]
        row["dep"] = [new.get(d, d) for d in row["dep"]]
        for k, v in row["args"].items():
            row["args"][k] = _remap(v, new)
    if rng.random() < 0.3:
        row = rng.choice(data)
        row["task"] = rng.choice(TYPES).value
    rng.shuffle(data)
    return parse_relaxed(json.dumps(data))


def _remap(v, new):
    if isinstance(v, list):
        return [_remap(x, new) for x in v]
    if isinstance(v, str) and v.startswith("<resource>-"):
        return f"<resource>-{new[int(v.rsplit('-', 1)[1])]}"
    return v


# 3 -------------------------------------------------------------------------------


def test_criterion_03_perfect_predictor_identity():
    pipe = Pipeline(load_config())
    corpus = golden_corpus()
    predicted = []
    for item in corpus:
        run = PipelineRun(item.query)
        predicted.append(pipe.analyse(run))
    rows = [EvalExample(i.query, i.plan, p) for i, p in zip(corpus, predicted)]
    report = evaluate(rows)
    assert (report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1) == (1.0, 1.0, 1.0, 1.0)
    rng = random.Random(34)
    for k in range(35):
        bad = set(rng.sample(range(34), k))
        corrupted = [EvalExample(r.query, r.gold, _swap_first(r.predicted) if n in bad else r.predicted) for n, r in enumerate(rows)]
        assert evaluate(corrupted).accuracy == (34 - k) / 34


def _swap_first(plan: Plan) -> Plan:
    first = plan.tasks[0]
    other = next(t for t in TYPES if t is not first.task and t not in {x.task for x in plan.tasks})
    return Plan((replace(first, task=other),) + plan.tasks[1:])


# 4 -------------------------------------------------------------------------------


def test_criterion_04_executor_scheduling_safety():
    rng = random.Random(404)
    t0 = time.perf_counter()
    for _ in range(RANDOM_DAGS):
        plan = random_plan(rng, max_tasks=12)
        failing = {t.id for t in plan.tasks if rng.random() < 0.1}

        def make(tid):
            def fn(task, args):
                if tid in failing:
                    raise RuntimeError("injected")
                return Text(f"{task.value}<-" + "|".join(sorted(repr(v) for v in args.values())))

            return fn

        match = MatchResult({t.id: t.id for t in plan.tasks})
        fns = {t.id: make(t.id) for t in plan.tasks}
        graph = plan.graph()
        outs = []
        for mode in ("serial", "parallel"):
            trace = execute(plan, match, fns, mode, workers=rng.randint(1, 6) if mode == "parallel" else None)
            for tid, rec in trace.records.items():
                if rec.status == OK:
                    for d in graph[tid]:
                        assert trace.records[d].status == OK
                        assert trace.records[d].finished <= rec.started
            outs.append(json.dumps(trace.outputs_jsonable(), sort_keys=True))
            outs.append(json.dumps(trace.statuses, sort_keys=True))
        assert outs[0] == outs[2] and outs[1] == outs[3]
    assert time.perf_counter() - t0 < EXECUTOR_BUDGET_S


def _zoo():
    return default_registry()


# 5 -------------------------------------------------------------------------------


def _trace(number):
    plan = golden_item(number).plan
    registry = _zoo()
    toolkit = stub_toolkit()
    trace = execute(plan, match_all_fallback(plan, registry), toolkit.adapters(registry))
    assert set(trace.statuses.values()) == {OK}
    return trace, toolkit.now


def test_criterion_05_resource_resolution():
    speed = 40 / 3.6
    passed = 0

    # Item 1: the map_mapping point for Jurong East lands in task 0's location slot.
    trace, _ = _trace(1)
    je = fixture_gps("Jurong East")
    assert trace.records[0].resolved_args["location_gps_list"] == GpsPoints((je,), ("Jurong East",))
    assert trace.records[0].resolved_args["domain"] == "parking"
    passed += 1

    # Item 2: both points reach tasks 0 and 1; the arrival time reaches task 0's time slot.
    trace, now = _trace(2)
    ls = fixture_gps("lake side")
    pts = GpsPoints((je, ls), ("Jurong East", "lake side"))
    assert trace.records[1].resolved_args["location_gps_list"] == pts
    assert trace.records[0].resolved_args["location_gps_list"] == pts
    expected = chord_distance_m(ls, je) / speed
    assert abs((trace.records[0].resolved_args["time"] - now).total_seconds() - expected) < ARRIVAL_TOL_S
    passed += 1

    # Item 28: one map_mapping output shared by the forecast and the recommender.
    trace, _ = _trace(28)
    for tid in (0, 1):
        assert trace.records[tid].resolved_args["location_gps_list"] == GpsPoints((je,), ("Jurong East",))
    assert trace.records[1].resolved_args["task_specific"] == "Japanese restaurant"
    passed += 1

    # Item 31: five consumers of task 5; three forecasts take task 4's arrival as their time.
    trace, now = _trace(31)
    court, mrt = fixture_gps("NTU SRC outdoor courts"), fixture_gps("lake side MRT")
    pts = GpsPoints((court, mrt), ("NTU SRC outdoor courts", "lake side MRT"))
    for tid in range(5):
        assert trace.records[tid].resolved_args["location_gps_list"] == pts
    expected = chord_distance_m(mrt, court) / speed
    for tid in (0, 1, 2):
        assert abs((trace.records[tid].resolved_args["time"] - now).total_seconds() - expected) < ARRIVAL_TOL_S
    assert [trace.records[t].resolved_args["domain"] for t in (0, 1, 2)] == ["parking", "air", "precipitation"]
    passed += 1
    assert passed == 4


# 6 -------------------------------------------------------------------------------

ALPHABET = list("[]{}:,'\"<>-_ \n0123456789abcdefghijklmnopqrstuvwxyz") + ["<resource>-", "task", "dep", "args", "id", "-1", "7PM", "\\", "é", "\x00"]


def _mutate(text: str, rng: random.Random) -> str:
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(5)
        i = rng.randrange(len(text) + 1)
        if op == 0 and text:
            text = text[:i] + text[i + 1 :]
        elif op == 1:
            text = text[:i] + rng.choice(ALPHABET) + text[i:]
        elif op == 2 and len(text) > 1:
            j = min(len(text), i + rng.randint(1, 20))
            text = text[:i] + text[i:j] * 2 + text[j:]
        elif op == 3:
            text = text[:i]
        else:
            j = rng.randrange(len(text) + 1)
            a, b = sorted((i, j))
            text = text[:a] + text[b:]
    return text


def test_criterion_06_parser_robustness():
    rng = random.Random(6)
    sources = [g.plan_text for g in golden_corpus()]
    parsed = rejected = 0
    for _ in range(FUZZ_CASES):
        text = _mutate(rng.choice(sources), rng)
        try:
            plan = parse_relaxed(text)
        except (PlanParseError, UnknownTaskType):
            rejected += 1
            continue
        again = parse_relaxed(serialize_strict(plan))
        assert again == plan
        parsed += 1
    assert parsed + rejected == FUZZ_CASES
    assert parsed > 0 and rejected > 0


# 7 -------------------------------------------------------------------------------


def _sentences(text):
    return [s.strip() for s in re.split(r"(?<=[.!?:])\s+|\n+", text) if len(s.strip()) >= 20]


def test_criterion_07_ablation_fidelity():
    t = default_templates()
    query = golden_item(31).query
    full = split_sections(build_inference_prompt(query))
    for name in COMPONENTS:
        prompt = build_inference_prompt(query, [c for c in COMPONENTS if c != name])
        corpus = _sentences(t.component(name))
        assert corpus
        assert [s for s in corpus if s in prompt] == []
        rest = split_sections(prompt)
        assert name not in rest
        assert set(rest) == set(full) - {name}
        for section, body in rest.items():
            assert body == full[section]


# 8 -------------------------------------------------------------------------------


def test_criterion_08_fallback_matching_ground_truth():
    zoo = Registry.load("tests/three_card_zoo.json")
    task = TaskNode(TaskType.TIME_SERIES_PREDICTION, 0, (-1,), {"domain": "parking"})
    picks = {match_fallback(task, candidates_for(task, zoo)).model_id for _ in range(100)}
    assert picks == {2}


# 9 -------------------------------------------------------------------------------


def test_criterion_09_end_to_end_carpark(capsys):
    outputs = []
    for _ in range(2):
        t0 = time.perf_counter()
        assert main(["ask", CASE_STUDY_QUERY]) == 0
        elapsed = time.perf_counter() - t0
        assert elapsed < ASK_BUDGET_S
        outputs.append(capsys.readouterr().out.encode("utf-8"))
    assert outputs[0] == outputs[1]
    # Independent seasonal-naive: the value 24 h before each target hour.
    raw = json.loads((FIXTURES / "series" / "parking.json").read_text())
    (loc,) = [l for l in raw["locations"] if l["name"] == "Marina Square Carpark"]
    history = loc["values"]
    assert all(v is not None for v in history[-24:])
    text = outputs[0].decode("utf-8")
    for k, hour in enumerate((18, 19)):
        assert f"2024-05-06T{hour}:00:00+08:00={history[-24 + k]:.6g}" in text


# 10 ------------------------------------------------------------------------------


def test_criterion_10_adapter_oracles():
    rng = random.Random(10)
    for _ in range(PAIRS):
        a = (rng.uniform(-89.9, 89.9), rng.uniform(-180, 180))
        b = (rng.uniform(-89.9, 89.9), rng.uniform(-180, 180))
        assert abs(haversine_m(a, b) - chord_distance_m(a, b)) <= HAVERSINE_TOL_M
    for _ in range(100):
        vals = [rng.uniform(0, 500) for _ in range(rng.randint(10, 400))]
        masked = [None if rng.random() < 0.1 else v for v in vals]
        if all(v is None for v in masked):
            continue
        assert max(abs(x - y) for x, y in zip(interpolate(masked), interp_oracle(masked))) <= INTERP_TOL
    constructed = {
        "constant": [5.0] * 72,
        "spike": [5.0 + 0.1 * (i % 2) for i in range(72)],
        "step": [1.0] * 36 + [4.0] * 36,
        "ramp": [float(i) for i in range(72)],
    }
    constructed["spike"][50] = 20.0
    for i in range(20):
        s = [round(rng.gauss(50, 5), 2) for _ in range(120)]
        for k in rng.sample(range(24, 120), 4):
            s[k] += rng.choice([-40, 40])
        constructed[f"noisy{i}"] = s
    for name, series in constructed.items():
        assert [i for i, _ in anomaly_scores(series)] == zscore_flags(series), name
    assert anomaly_scores(constructed["constant"]) == []
    assert 50 in [i for i, _ in anomaly_scores(constructed["spike"])]
    assert anomaly_scores(constructed["step"])[0] == (36, math.inf)


# 11 ------------------------------------------------------------------------------


def test_criterion_11_dataset_determinism(tmp_path, capsys):
    seeds_path = tmp_path / "seeds.jsonl"
    write_jsonl(seeds_path, (s.to_jsonable() for s in golden_seeds()))
    store = ReplayStore()
    generate(golden_seeds(), 40, Gateway().register(RecordingBackend(ParaphraseBackend(), store)), rng_seed=11)
    store_path = tmp_path / "recorded.jsonl"
    store.save(store_path)
    runs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        argv = ["dataset", "gen", "--seeds", str(seeds_path), "--n", "40", "--rng-seed", "11",
                "--backend", "replay", "--replay", str(store_path), "--out", str(out)]
        assert main(argv) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    capsys.readouterr()
    assert runs[0] == runs[1] and runs[0]["train.jsonl"]

    rng = random.Random(11)
    simple, complex_ = golden_item(5).plan, golden_item(1).plan
    for trial in range(CORPORA):
        ns, nc = rng.randint(0, 80), rng.randint(0, 80)
        ratio = rng.uniform(0.05, 0.95)
        ex = [GeneratedExample(f"s{i}", simple, 5, {"accepted": True}) for i in range(ns)]
        ex += [GeneratedExample(f"c{i}", complex_, 1, {"accepted": True}) for i in range(nc)]
        rng.shuffle(ex)
        split = split_and_stratify(ex, ratio, rng_seed=trial)
        for stratum, n in ((SIMPLE, ns), (COMPLEX, nc)):
            got = sum(1 for s, _ in split["train"] if s == stratum)
            assert abs(got - ratio * n) <= 1
