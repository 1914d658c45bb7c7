"""Seed storage, self-instruct style expansion through the gateway, and stratified splits."""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Iterable, Sequence

from .evaluation import COMPLEX, SIMPLE, isomorphic, plan_from_field, stratum_of
from .gateway import Gateway
from .golden import golden_corpus
from .parser import NoPlanFound, PlanParseError, _bracket_end, build_plan, loads_relaxed, parse_relaxed
from .plan import Plan, UnknownTaskType, serialize_strict, validate
from .prompts import task_schema

# Target sizes for a full-scale run. "alternate" keeps the second training count
# that circulates for the same setup.
PRESETS = {
    "default": {"train": 15294, "eval": 1694},
    "alternate": {"train": 15249, "eval": 1694},
}
ATTEMPT_FACTOR = 5
SEEDS_PER_PROMPT = 3


class QuotaExceeded(RuntimeError):
    def __init__(self, wanted: int, examples: list):
        accepted = sum(e.accepted for e in examples)
        super().__init__(f"accepted {accepted} of {wanted} after {len(examples)} attempts")
        self.examples = examples


@dataclass(frozen=True)
class SeedExample:
    query: str
    gold: Plan
    combination_index: int

    def __post_init__(self):
        if not 1 <= self.combination_index <= 34:
            raise ValueError(f"combination index {self.combination_index} outside 1..34")
        result = validate(self.gold)
        if not result.ok:
            raise ValueError(f"seed plan does not validate: {result.violations[0].message}")

    def to_jsonable(self) -> dict:
        return {
            "query": self.query,
            "plan": self.gold.to_jsonable(),
            "stratum": stratum_of(self.gold),
            "combination_index": self.combination_index,
        }


@dataclass(frozen=True)
class GeneratedExample:
    query: str
    gold: Plan | None
    combination_index: int | None
    provenance: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return bool(self.provenance.get("accepted"))

    def to_jsonable(self, stratum: str | None = None) -> dict:
        plan = self.gold.to_jsonable() if self.gold is not None else None
        return {
            "query": self.query,
            "plan": plan,
            "stratum": stratum or (stratum_of(self.gold) if self.gold is not None else None),
            "combination_index": self.combination_index,
            "provenance": self.provenance,
        }

    @classmethod
    def from_jsonable(cls, row: dict) -> "GeneratedExample":
        gold = plan_from_field(row["plan"]) if row.get("plan") is not None else None
        return cls(row["query"], gold, row.get("combination_index"), dict(row.get("provenance", {})))


def golden_seeds() -> list[SeedExample]:
    return [SeedExample(g.query, g.plan, g.index) for g in golden_corpus()]


def load_seeds(path: str | Path) -> list[SeedExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                out.append(SeedExample(row["query"], plan_from_field(row["plan"]), int(row["combination_index"])))
    return out


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def generation_prompt(sample: Sequence[SeedExample], attempt: int) -> str:
    raw = resources.files("urbanplanner").joinpath("templates", "self_instruct.txt").read_text("utf-8")
    body = "\n".join(l for l in raw.splitlines() if not l.startswith("#"))
    examples = "\n".join(f"Q: {s.query}\nA: {serialize_strict(s.gold)}" for s in sample)
    return Template(body).substitute(examples=examples, attempt=attempt, task_schema=task_schema()) + "\n"


def _candidate(reply: str) -> tuple[str, Plan]:
    start, end = reply.find("{"), reply.rfind("}")
    if start == -1 or end <= start:
        raise NoPlanFound("reply holds no JSON object")
    raw = loads_relaxed(reply[start : end + 1])
    if not isinstance(raw, dict) or not isinstance(raw.get("query"), str) or "plan" not in raw:
        raise NoPlanFound("reply object lacks query and plan")
    query = raw["query"].strip()
    if not query:
        raise NoPlanFound("empty query")
    plan = raw["plan"]
    if isinstance(plan, str):
        # Relaxed text may trail off after the closing bracket ("...]."), so cut there.
        start = plan.find("[")
        end = _bracket_end(plan, start) if start != -1 else None
        return query, parse_relaxed(plan[start:end] if end else plan)
    return query, build_plan(plan)


def combination_of(plan: Plan, sample: Sequence[SeedExample], seeds: Sequence[SeedExample]) -> int:
    """The seed pattern a generated plan follows: isomorphic first, then same task multiset."""
    for pool in (sample, seeds):
        for s in pool:
            if isomorphic(plan, s.gold):
                return s.combination_index
    kinds = Counter(t.task for t in plan.tasks)
    for s in seeds:
        if Counter(t.task for t in s.gold.tasks) == kinds:
            return s.combination_index
    return sample[0].combination_index


def generate(
    seeds: Sequence[SeedExample],
    count: int,
    gateway: Gateway,
    backend: str = "replay",
    rng_seed: int = 0,
    per_prompt: int = SEEDS_PER_PROMPT,
    temperature: float = 0.7,
) -> list[GeneratedExample]:
    """Accepted and rejected examples, in attempt order; stops once ``count`` are accepted."""
    if not seeds:
        raise ValueError("at least one seed is required")
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = random.Random(rng_seed)
    seen = {s.query.casefold() for s in seeds}
    out: list[GeneratedExample] = []
    accepted = 0
    for attempt in range(ATTEMPT_FACTOR * count):
        if accepted == count:
            break
        sample = rng.sample(list(seeds), min(per_prompt, len(seeds)))
        prompt = generation_prompt(sample, attempt)
        reply = gateway.ask(prompt, backend=backend, temperature=temperature).content
        prov = {
            "generator": backend,
            "seed_digest": hashlib.sha256("\n".join(s.query for s in sample).encode("utf-8")).hexdigest()[:16],
            "attempt": attempt,
        }
        query, plan, reason = "", None, None
        try:
            query, plan = _candidate(reply)
        except UnknownTaskType as exc:
            reason = f"UnknownTaskType: {exc.name}"
        except PlanParseError as exc:
            reason = f"{type(exc).__name__}: {exc}"
        if reason is None:
            result = validate(plan)
            if not result.ok:
                reason = "InvalidPlan: " + "; ".join(i.message for i in result.violations)
            elif query.casefold() in seen:
                reason = "Duplicate: query already present"
        if reason is None:
            seen.add(query.casefold())
            accepted += 1
            out.append(GeneratedExample(query, plan, combination_of(plan, sample, seeds), {**prov, "accepted": True}))
        else:
            out.append(
                GeneratedExample(query, plan, None, {**prov, "accepted": False, "rejection_reason": reason})
            )
    if accepted < count:
        raise QuotaExceeded(count, out)
    return out


def split_and_stratify(examples: Sequence[GeneratedExample], train_ratio: float = 0.9, rng_seed: int = 0) -> dict:
    """Shuffle within each stratum and cut it at ``round(ratio * n)``."""
    if not 0.0 <= train_ratio <= 1.0:
        raise ValueError("train_ratio must be within [0, 1]")
    if any(not e.accepted or e.gold is None for e in examples):
        raise ValueError("only accepted examples can be split")
    rng = random.Random(rng_seed)
    train, held = [], []
    for stratum in (SIMPLE, COMPLEX):
        group = [e for e in examples if stratum_of(e.gold) == stratum]
        rng.shuffle(group)
        cut = round(train_ratio * len(group))
        train += [(stratum, e) for e in group[:cut]]
        held += [(stratum, e) for e in group[cut:]]
    rng.shuffle(train)
    rng.shuffle(held)
    return {"train": train, "eval": held}


def write_dataset(directory: str | Path, examples: Sequence[GeneratedExample], split: dict) -> dict[str, Path]:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    paths = {name: root / f"{name}.jsonl" for name in ("train", "eval", "rejected")}
    write_jsonl(paths["train"], (e.to_jsonable(s) for s, e in split["train"]))
    write_jsonl(paths["eval"], (e.to_jsonable(s) for s, e in split["eval"]))
    write_jsonl(paths["rejected"], (e.to_jsonable() for e in examples if not e.accepted))
    return paths
