"""Plan scoring: task-type multiset precision/recall/F1 and exact structural match."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .parser import PlanParseError, build_plan, extract_plan_text, parse_relaxed
from .plan import Plan, UnknownTaskType, canonicalize, serialize_strict

SIMPLE, COMPLEX = "simple", "complex"


class EmptyDataset(ValueError):
    pass


def stratum_of(plan: Plan) -> str:
    return SIMPLE if len(plan.tasks) == 1 else COMPLEX


def example_prf(predicted: Plan | None, gold: Plan) -> tuple[float, float, float]:
    p = Counter(t.task for t in predicted.tasks) if predicted is not None else Counter()
    g = Counter(t.task for t in gold.tasks)
    np_, ng = sum(p.values()), sum(g.values())
    if np_ == 0 and ng == 0:
        return 1.0, 1.0, 1.0
    if np_ == 0:
        return 0.0, 0.0, 0.0
    tp = sum((p & g).values())
    precision = tp / np_
    recall = tp / ng if ng else 0.0
    if tp == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def _labeled(plan: Plan) -> tuple[list, dict[int, set[int]]]:
    graph = plan.graph()
    return [(t.id, t.task) for t in plan.tasks], graph


def isomorphic(a: Plan, b: Plan) -> bool:
    """Task-type-labelled isomorphism of the effective dependency graphs (backtracking)."""
    nodes_a, ga = _labeled(a)
    nodes_b, gb = _labeled(b)
    if len(nodes_a) != len(nodes_b):
        return False
    label_a, label_b = dict(nodes_a), dict(nodes_b)
    if Counter(label_a.values()) != Counter(label_b.values()):
        return False
    if sum(map(len, ga.values())) != sum(map(len, gb.values())):
        return False
    out_a = {i: set() for i in ga}
    for i, ds in ga.items():
        for d in ds:
            out_a[d].add(i)
    out_b = {i: set() for i in gb}
    for i, ds in gb.items():
        for d in ds:
            out_b[d].add(i)

    def signature(i, lab, g, out):
        return (lab[i], len(g[i]), len(out[i]))

    sig_b = {j: signature(j, label_b, gb, out_b) for j in gb}
    order = sorted(ga, key=lambda i: (-len(ga[i]) - len(out_a[i]), i))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def consistent(i: int, j: int) -> bool:
        for k, m in mapping.items():
            if (k in ga[i]) != (m in gb[j]) or (i in ga[k]) != (j in gb[m]):
                return False
        return True

    def extend(pos: int) -> bool:
        if pos == len(order):
            return True
        i = order[pos]
        want = signature(i, label_a, ga, out_a)
        for j in sorted(gb):
            if j in used or sig_b[j] != want or not consistent(i, j):
                continue
            mapping[i] = j
            used.add(j)
            if extend(pos + 1):
                return True
            del mapping[i]
            used.discard(j)
        return False

    return extend(0)


def example_accuracy(predicted: Plan | None, gold: Plan, strict_args: bool = False) -> bool:
    if predicted is None:
        return False
    try:
        cp, cg = canonicalize(predicted), canonicalize(gold)
    except ValueError:
        return False
    if strict_args:
        return serialize_strict(cp) == serialize_strict(cg)
    return isomorphic(cp, cg)


@dataclass(frozen=True)
class EvalExample:
    query: str
    gold: Plan
    predicted: Plan | None  # None marks a prediction that did not parse
    parse_error: str | None = None

    @property
    def stratum(self) -> str:
        return stratum_of(self.gold)


@dataclass(frozen=True)
class ExampleScore:
    query: str
    stratum: str
    precision: float
    recall: float
    f1: float
    exact: bool
    parsed: bool

    def to_jsonable(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Summary:
    n: int
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @classmethod
    def of(cls, rows: Sequence[ExampleScore]) -> "Summary":
        n = len(rows)
        if n == 0:
            return cls(0, 0.0, 0.0, 0.0, 0.0)
        return cls(
            n,
            sum(r.exact for r in rows) / n,
            sum(r.precision for r in rows) / n,
            sum(r.recall for r in rows) / n,
            sum(r.f1 for r in rows) / n,
        )

    def to_jsonable(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class EvalReport:
    overall: Summary
    strata: dict[str, Summary]
    rows: tuple[ExampleScore, ...] = field(repr=False)
    strict_args: bool = False

    @property
    def accuracy(self) -> float:
        return self.overall.accuracy

    @property
    def macro_precision(self) -> float:
        return self.overall.macro_precision

    @property
    def macro_recall(self) -> float:
        return self.overall.macro_recall

    @property
    def macro_f1(self) -> float:
        return self.overall.macro_f1

    def to_jsonable(self) -> dict:
        return {
            **self.overall.to_jsonable(),
            "strict_args": self.strict_args,
            "strata": {k: v.to_jsonable() for k, v in self.strata.items()},
            "examples": [r.to_jsonable() for r in self.rows],
        }

    def table(self) -> str:
        """Overall / single-task / multi-task rows, percentages."""
        lines = [f"{'split':<8} {'n':>6} {'acc':>7} {'P':>7} {'R':>7} {'F1':>7}"]
        for name, s in [("overall", self.overall), *self.strata.items()]:
            lines.append(
                f"{name:<8} {s.n:>6} {100 * s.accuracy:>7.2f} {100 * s.macro_precision:>7.2f} "
                f"{100 * s.macro_recall:>7.2f} {100 * s.macro_f1:>7.2f}"
            )
        return "\n".join(lines)


def score(example: EvalExample, strict_args: bool = False) -> ExampleScore:
    p, r, f = example_prf(example.predicted, example.gold)
    return ExampleScore(
        example.query,
        example.stratum,
        p,
        r,
        f,
        example_accuracy(example.predicted, example.gold, strict_args),
        example.predicted is not None,
    )


def evaluate(examples: Iterable[EvalExample], strict_args: bool = False, workers: int = 1) -> EvalReport:
    examples = list(examples)
    if not examples:
        raise EmptyDataset("nothing to evaluate")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = tuple(pool.map(lambda e: score(e, strict_args), examples))
    else:
        rows = tuple(score(e, strict_args) for e in examples)
    strata = {s: Summary.of([r for r in rows if r.stratum == s]) for s in (SIMPLE, COMPLEX)}
    return EvalReport(Summary.of(rows), strata, rows, strict_args)


# -- files --------------------------------------------------------------------------


def plan_from_field(value) -> Plan:
    """A JSONL ``plan`` field: a strict JSON list, or text in the relaxed dialect."""
    if isinstance(value, str):
        return parse_relaxed(extract_plan_text(value))
    return build_plan(value)


def _rows(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_examples(pred_path: str | Path, gold_path: str | Path) -> list[EvalExample]:
    """Pair predictions with gold plans line by line; unparseable predictions score zero."""
    preds, golds = _rows(pred_path), _rows(gold_path)
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} gold examples")
    out = []
    for n, (p, g) in enumerate(zip(preds, golds), 1):
        if p.get("query") is not None and p.get("query") != g.get("query"):
            raise ValueError(f"line {n}: prediction and gold queries differ")
        gold = plan_from_field(g["plan"])
        try:
            predicted, err = plan_from_field(p.get("plan")), None
        except (PlanParseError, UnknownTaskType, TypeError) as exc:
            predicted, err = None, f"{type(exc).__name__}: {exc}"
        out.append(EvalExample(g.get("query", ""), gold, predicted, err))
    return out
