import json
import random

import pytest

from synthetic import ParaphraseBackend
from urbanplanner.cli import main
from urbanplanner.dataset import (
    PRESETS,
    GeneratedExample,
    QuotaExceeded,
    SeedExample,
    generate,
    generation_prompt,
    golden_seeds,
    load_seeds,
    split_and_stratify,
    write_dataset,
    write_jsonl,
)
from urbanplanner.evaluation import COMPLEX, SIMPLE, stratum_of
from urbanplanner.gateway import Gateway, RecordingBackend, ReplayBackend, ReplayStore, prompt_digest
from urbanplanner.golden import golden_item
from urbanplanner.parser import parse_relaxed
from urbanplanner.plan import Plan, TaskNode, TaskType


def seeds():
    return golden_seeds()


def record(count, rng_seed=0):
    store = ReplayStore()
    gw = Gateway().register(RecordingBackend(ParaphraseBackend(), store))
    return generate(seeds(), count, gw, rng_seed=rng_seed), store


def one_reply_gateway(sample, reply):
    store = ReplayStore({prompt_digest(generation_prompt(sample, 0)): reply})
    return Gateway().register(ReplayBackend(store))


def first_sample(rng_seed=0):
    return random.Random(rng_seed).sample(seeds(), 3)


class Constant:
    name = "replay"

    def __init__(self, reply):
        self.reply = reply

    def send(self, request):
        return self.reply


def constant_gateway(reply):
    return Gateway().register(Constant(reply))


def test_presets():
    assert PRESETS["default"] == {"train": 15294, "eval": 1694}
    assert PRESETS["alternate"]["train"] == 15249


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedExample("q", golden_item(1).plan, 35)
    cyclic = parse_relaxed("[{task: map_mapping, id: 0, dep: [0], args: {}}]")
    with pytest.raises(ValueError):
        SeedExample("q", cyclic, 1)


def test_one_valid_pair_accepted():
    item = golden_item(5)
    reply = json.dumps({"query": "When is the next 15 at stop 83139?", "plan": item.answer})
    (ex,) = generate(seeds(), 1, one_reply_gateway(first_sample(), reply))
    assert ex.accepted and ex.gold == item.plan
    assert ex.combination_index == 5
    assert ex.provenance["generator"] == "replay" and ex.provenance["attempt"] == 0


def test_unknown_task_type_rejected():
    plan = [{"task": "weather_divination", "id": 0, "dep": [-1], "args": {}}]
    gw = constant_gateway(json.dumps({"query": "Will it rain frogs?", "plan": plan}))
    with pytest.raises(QuotaExceeded) as err:
        generate(seeds(), 1, gw)
    reasons = {e.provenance["rejection_reason"] for e in err.value.examples}
    assert reasons == {"UnknownTaskType: weather_divination"}


def test_invalid_and_duplicate_rejected():
    ex, _ = record(40)
    reasons = {e.provenance.get("rejection_reason", "").split(":")[0] for e in ex if not e.accepted}
    assert {"UnknownTaskType", "InvalidPlan"} <= reasons
    dup = json.dumps({"query": golden_item(1).query, "plan": golden_item(1).answer})
    with pytest.raises(QuotaExceeded) as err:
        generate(seeds(), 1, constant_gateway(dup))
    assert err.value.examples[0].provenance["rejection_reason"].startswith("Duplicate")


def test_accepted_examples_are_valid_and_round_trip():
    ex, _ = record(40)
    accepted = [e for e in ex if e.accepted]
    assert len(accepted) == 40
    assert len(ex) <= 200
    for e in accepted:
        back = GeneratedExample.from_jsonable(json.loads(json.dumps(e.to_jsonable())))
        assert back == e
        assert all(isinstance(t.task, TaskType) for t in e.gold.tasks)


def test_quota_exceeded_after_five_times_count():
    gw = Gateway().register(ReplayBackend(ReplayStore()))
    with pytest.raises(QuotaExceeded) as err:
        generate(seeds(), 3, constant_gateway("no idea"))
    assert len(err.value.examples) == 15
    assert generate(seeds(), 0, gw) == []


def test_generation_is_deterministic():
    a, store = record(25, rng_seed=3)
    b = generate(seeds(), 25, Gateway().register(ReplayBackend(store)), rng_seed=3)
    assert [x.to_jsonable() for x in a] == [x.to_jsonable() for x in b]


def test_split_exact_proportions():
    simple = golden_item(5).plan
    complex_ = golden_item(1).plan
    ex = [GeneratedExample(f"s{i}", simple, 5, {"accepted": True}) for i in range(5)]
    ex += [GeneratedExample(f"c{i}", complex_, 1, {"accepted": True}) for i in range(5)]
    split = split_and_stratify(ex, 0.8, rng_seed=1)
    count = lambda part, s: sum(1 for st, _ in split[part] if st == s)
    assert (count("train", SIMPLE), count("train", COMPLEX)) == (4, 4)
    assert (count("eval", SIMPLE), count("eval", COMPLEX)) == (1, 1)
    again = split_and_stratify(ex, 0.8, rng_seed=1)
    assert [e.query for _, e in split["train"]] == [e.query for _, e in again["train"]]


def test_split_rejects_unaccepted():
    with pytest.raises(ValueError):
        split_and_stratify([GeneratedExample("q", None, None, {"accepted": False})])


def test_stratification_over_random_corpora():
    rng = random.Random(12)
    simple = Plan((TaskNode(TaskType.BUS_ARRIVAL, 0),))
    complex_ = golden_item(1).plan
    for trial in range(1000):
        ns, nc = rng.randint(0, 60), rng.randint(0, 60)
        ex = [GeneratedExample(f"s{i}", simple, 5, {"accepted": True}) for i in range(ns)]
        ex += [GeneratedExample(f"c{i}", complex_, 1, {"accepted": True}) for i in range(nc)]
        ratio = rng.choice([0.5, 0.7, 0.8, 0.9, 0.95])
        split = split_and_stratify(ex, ratio, rng_seed=trial)
        train = len(split["train"])
        for stratum, n in ((SIMPLE, ns), (COMPLEX, nc)):
            got = sum(1 for st, _ in split["train"] if st == stratum)
            assert abs(got - ratio * n) <= 1
            assert got + sum(1 for st, _ in split["eval"] if st == stratum) == n
        assert abs(train - ratio * (ns + nc)) <= 2


def test_written_rows_round_trip(tmp_path):
    ex, _ = record(20)
    split = split_and_stratify([e for e in ex if e.accepted], 0.8)
    paths = write_dataset(tmp_path, ex, split)
    for name in ("train", "eval"):
        for line in paths[name].read_text().splitlines():
            row = json.loads(line)
            back = GeneratedExample.from_jsonable(row)
            assert row["stratum"] == stratum_of(back.gold)
            assert set(row) == {"query", "plan", "stratum", "combination_index", "provenance"}
    assert paths["rejected"].read_text().count("\n") == sum(not e.accepted for e in ex)


def test_seed_file_round_trip(tmp_path):
    path = tmp_path / "seeds.jsonl"
    write_jsonl(path, (s.to_jsonable() for s in seeds()))
    assert load_seeds(path) == seeds()


def test_cli_generation_is_byte_reproducible(tmp_path, capsys):
    seeds_path = tmp_path / "seeds.jsonl"
    write_jsonl(seeds_path, (s.to_jsonable() for s in seeds()))
    _, store = record(30, rng_seed=4)
    store_path = tmp_path / "gen.jsonl"
    store.save(store_path)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        argv = ["dataset", "gen", "--seeds", str(seeds_path), "--n", "30", "--rng-seed", "4",
                "--backend", "replay", "--replay", str(store_path), "--out", str(out)]
        assert main(argv) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"train.jsonl", "eval.jsonl", "rejected.jsonl"}
    assert "train=" in capsys.readouterr().out
