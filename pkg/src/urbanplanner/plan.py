"""Task plans: the sub-task taxonomy, plan DAG values, validation and canonical form.

A plan is an ordered list of :class:`TaskNode` records.  Each node names one of the
thirteen spatio-temporal task types, carries an integer id, a declared ``dep`` list
(``[-1]`` meaning "no dependency") and an ``args`` mapping whose values may embed
``<resource>-k`` references to the output of task ``k``.

The graph that execution honours is the *effective* dependency graph: declared deps
plus every task referenced from the args.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Union


class UnknownTaskType(ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown task type: {name!r}")
        self.name = name


class CycleError(ValueError):
    def __init__(self, cycle: list[int]):
        path = " -> ".join(str(i) for i in [*cycle, cycle[0]])
        super().__init__(f"cycle: {path}")
        self.cycle = cycle


class TaskType(str, Enum):
    """The thirteen sub-task categories, in taxonomy order."""

    LONG_TIME_SERIES_PREDICTION = "long_time_series_prediction"
    TIME_SERIES_PREDICTION = "time_series_prediction"
    EVENT_PREDICTION = "event_prediction"
    TRAJECTORY_COMPLETION = "trajectory_completion"
    TRAJECTORY_PREDICTION = "trajectory_prediction"
    TIME_SERIES_ANOMALY_DETECTION = "time_series_anomaly_detection"
    TIME_SERIES_IMPUTATION = "time_series_imputation"
    ARRIVAL_TIME_ESTIMATION = "arrival_time_estimation"
    TAXI_AVAILABILITY = "taxi_availability"
    MAP_MAPPING = "map_mapping"
    BUS_ARRIVAL = "bus_arrival"
    SPATIAL_RELATIONSHIP_INFER = "spatial_relationship_infer"
    RECOMMENDATION = "recommendation"

    @property
    def number(self) -> int:
        """1-based position in the taxonomy (matches the task explanation numbering)."""
        return list(TaskType).index(self) + 1

    @classmethod
    def lookup(cls, name: str) -> "TaskType":
        key = re.sub(r"[\s\-]+", "_", name.strip().lower())
        key = TASK_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise UnknownTaskType(name) from None


# Spellings observed in model output and in the reference corpus.
TASK_ALIASES: dict[str, str] = {
    "arrval_time_estimation": "arrival_time_estimation",
    "arrival_time_prediction": "arrival_time_estimation",
    "eta": "arrival_time_estimation",
    "taxi_availability_prediction": "taxi_availability",
    "spatial_relationship_inference": "spatial_relationship_infer",
    "long_term_time_series_prediction": "long_time_series_prediction",
    "time_series_forecasting": "time_series_prediction",
    "map_matching": "map_mapping",
}

ARG_NAMES = frozenset(
    {
        "location_gps_list",
        "location_name_list",
        "time",
        "input",
        "domain",
        "task_specific",
        "bus_stop",
        "service_no",
    }
)

_RESOURCE_RE = re.compile(r"^\s*<resource>-(\d+)\s*$")
_RELATIVE_RE = re.compile(r"^(\d+)\s*([hdwm])$", re.IGNORECASE)
_CLOCK_RE = re.compile(r"^(\d{1,2})(?::(\d{2}))?\s*([ap]m)$", re.IGNORECASE)

TIME_UNITS = {"m": "minute", "h": "hour", "d": "day", "w": "week"}
UNIT_SECONDS = {"minute": 60, "hour": 3600, "day": 86400, "week": 604800}


@dataclass(frozen=True, order=True)
class ResourceRef:
    """Binding to the output of another task in the same plan."""

    target: int

    def __str__(self) -> str:
        return f"<resource>-{self.target}"

    @classmethod
    def parse(cls, text: str) -> "ResourceRef | None":
        m = _RESOURCE_RE.match(text)
        return cls(int(m.group(1))) if m else None


@dataclass(frozen=True)
class TimeSpec:
    kind: str  # now | relative | clock | resource
    magnitude: int | None = None
    unit: str | None = None
    hour: int | None = None
    minute: int = 0
    meridiem: str | None = None
    ref: ResourceRef | None = None

    def __post_init__(self):
        if self.kind == "relative":
            if self.unit not in UNIT_SECONDS or self.magnitude is None or self.magnitude < 1:
                raise ValueError(f"bad relative time: {self.magnitude}{self.unit}")
        elif self.kind == "clock":
            if self.hour is None or not 1 <= self.hour <= 12 or not 0 <= self.minute < 60:
                raise ValueError(f"bad clock time: {self.hour}:{self.minute}")
            if self.meridiem not in ("AM", "PM"):
                raise ValueError(f"bad meridiem: {self.meridiem}")
        elif self.kind == "resource":
            if self.ref is None:
                raise ValueError("resource time needs a ref")
        elif self.kind != "now":
            raise ValueError(f"unknown time kind: {self.kind}")

    @classmethod
    def now(cls) -> "TimeSpec":
        return cls("now")

    @classmethod
    def relative(cls, magnitude: int, unit: str) -> "TimeSpec":
        return cls("relative", magnitude=magnitude, unit=unit)

    @classmethod
    def clock(cls, hour: int, meridiem: str, minute: int = 0) -> "TimeSpec":
        return cls("clock", hour=hour, minute=minute, meridiem=meridiem)

    @classmethod
    def from_ref(cls, ref: ResourceRef) -> "TimeSpec":
        return cls("resource", ref=ref)

    @classmethod
    def parse(cls, text: str) -> "TimeSpec | None":
        s = text.strip()
        if s == "0":
            return cls.now()
        ref = ResourceRef.parse(s)
        if ref is not None:
            return cls.from_ref(ref)
        m = _RELATIVE_RE.match(s)
        if m and int(m.group(1)) >= 1:
            return cls.relative(int(m.group(1)), TIME_UNITS[m.group(2).lower()])
        m = _CLOCK_RE.match(s)
        if m:
            hour, minute = int(m.group(1)), int(m.group(2) or 0)
            if 1 <= hour <= 12 and minute < 60:
                return cls.clock(hour, m.group(3).upper(), minute)
        return None

    @property
    def seconds(self) -> int:
        """Duration of a relative spec."""
        if self.kind != "relative":
            raise ValueError(f"{self} has no fixed duration")
        return self.magnitude * UNIT_SECONDS[self.unit]

    @property
    def hour24(self) -> int:
        if self.kind != "clock":
            raise ValueError(f"{self} is not a clock time")
        return self.hour % 12 + (12 if self.meridiem == "PM" else 0)

    def __str__(self) -> str:
        if self.kind == "now":
            return "0"
        if self.kind == "relative":
            return f"{self.magnitude}{self.unit[0]}"
        if self.kind == "clock":
            if self.minute:
                return f"{self.hour}:{self.minute:02d}{self.meridiem}"
            return f"{self.hour}{self.meridiem}"
        return str(self.ref)


ArgValue = Union[str, int, float, ResourceRef, TimeSpec, tuple]


def iter_refs(value: Any) -> Iterator[ResourceRef]:
    """Yield every resource reference inside an argument value."""
    if isinstance(value, ResourceRef):
        yield value
    elif isinstance(value, TimeSpec):
        if value.ref is not None:
            yield value.ref
    elif isinstance(value, (tuple, list)):
        for item in value:
            yield from iter_refs(item)


def map_refs(value: Any, fn) -> Any:
    """Rebuild ``value`` with every resource reference replaced by ``fn(ref)``."""
    if isinstance(value, ResourceRef):
        return fn(value)
    if isinstance(value, TimeSpec) and value.ref is not None:
        return TimeSpec.from_ref(fn(value.ref))
    if isinstance(value, (tuple, list)):
        return tuple(map_refs(v, fn) for v in value)
    return value


def to_jsonable(value: Any) -> Any:
    if isinstance(value, (ResourceRef, TimeSpec)):
        return str(value)
    if isinstance(value, (tuple, list)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass(frozen=True)
class TaskNode:
    task: TaskType
    id: int
    dep: tuple[int, ...] = (-1,)
    args: Mapping[str, Any] = field(default_factory=dict)

    @property
    def declared_deps(self) -> frozenset[int]:
        return frozenset(d for d in self.dep if d != -1)

    @property
    def refs(self) -> frozenset[int]:
        return frozenset(r.target for v in self.args.values() for r in iter_refs(v))

    def to_jsonable(self) -> dict:
        return {
            "task": self.task.value,
            "id": self.id,
            "dep": list(self.dep),
            "args": {k: to_jsonable(v) for k, v in self.args.items()},
        }


@dataclass(frozen=True)
class Plan:
    tasks: tuple[TaskNode, ...] = ()

    def __post_init__(self):
        if not isinstance(self.tasks, tuple):
            object.__setattr__(self, "tasks", tuple(self.tasks))

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[TaskNode]:
        return iter(self.tasks)

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tasks]

    @cached_property
    def by_id(self) -> dict[int, TaskNode]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def effective_deps(self) -> dict[int, frozenset[int]]:
        """Declared deps (minus -1) united with resource-reference targets."""
        out: dict[int, frozenset[int]] = {}
        for t in self.tasks:
            out[t.id] = out.get(t.id, frozenset()) | t.declared_deps | t.refs
        return out

    def graph(self) -> dict[int, set[int]]:
        """Effective deps restricted to ids present in the plan."""
        present = set(self.by_id)
        return {i: set(d) & present for i, d in self.effective_deps.items()}

    def dependents(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {i: set() for i in self.by_id}
        for i, deps in self.graph().items():
            for j in deps:
                out[j].add(i)
        return out

    def to_jsonable(self) -> list[dict]:
        return [t.to_jsonable() for t in self.tasks]


def serialize_strict(plan: Plan) -> str:
    """One-line, deterministic strict JSON for a plan."""
    return json.dumps(plan.to_jsonable(), ensure_ascii=False)


# -- validation ---------------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    task_id: int | None = None

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def to_jsonable(self) -> dict:
        def rows(issues):
            return [{"code": i.code, "message": i.message, "task_id": i.task_id} for i in issues]

        return {"ok": self.ok, "violations": rows(self.violations), "warnings": rows(self.warnings)}


def find_cycle(graph: Mapping[int, Iterable[int]]) -> list[int] | None:
    """Return the ids of one cycle in ``graph`` (node -> deps), or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {n: WHITE for n in graph}
    for root in sorted(graph):
        if colour[root] != WHITE:
            continue
        stack = [(root, iter(sorted(graph[root])))]
        path = [root]
        colour[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                colour[node] = BLACK
            elif colour.get(nxt, BLACK) == GREY:
                return path[path.index(nxt):]
            elif colour.get(nxt) == WHITE:
                colour[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(sorted(graph[nxt]))))
    return None


def validate(plan: Plan) -> ValidationResult:
    violations: list[Issue] = []
    warnings: list[Issue] = []
    if not plan.tasks:
        return ValidationResult((Issue("empty_plan", "plan must contain ≥ 1 task"),))

    seen: set[int] = set()
    for t in plan.tasks:
        if t.id in seen:
            violations.append(Issue("duplicate_id", f"duplicate id: {t.id}", t.id))
        seen.add(t.id)
        if t.id < 0:
            violations.append(Issue("negative_id", f"negative id: {t.id}", t.id))

    present = set(plan.by_id)
    for t in plan.tasks:
        if not t.dep:
            violations.append(Issue("empty_dep", f"task {t.id}: dep is empty", t.id))
        elif -1 in t.dep and len(t.dep) > 1:
            violations.append(
                Issue("mixed_null_dep", f"task {t.id}: dep mixes -1 with {list(t.dep)}", t.id)
            )
        for d in t.dep:
            if d < -1:
                violations.append(Issue("bad_dep", f"task {t.id}: invalid dep {d}", t.id))
            elif d != -1 and d not in present:
                warnings.append(
                    Issue("dangling_dep", f"task {t.id}: dep {d} names no task; ignored", t.id)
                )
        for r in sorted(t.refs):
            if r not in present:
                violations.append(
                    Issue("unknown_ref", f"task {t.id}: <resource>-{r} names no task", t.id)
                )
            elif r not in t.declared_deps:
                warnings.append(
                    Issue(
                        "undeclared_ref",
                        f"task {t.id}: references task {r} without declaring it in dep",
                        t.id,
                    )
                )
        for key in t.args:
            if key not in ARG_NAMES:
                warnings.append(Issue("unknown_arg", f"task {t.id}: unknown argument {key!r}", t.id))
        time_value = t.args.get("time")
        if time_value is not None and not isinstance(time_value, TimeSpec):
            warnings.append(
                Issue("unparsed_time", f"task {t.id}: time {time_value!r} is not a time spec", t.id)
            )

    cycle = find_cycle(plan.graph())
    if cycle:
        violations.append(Issue("cycle", str(CycleError(cycle)), cycle[0]))
    return ValidationResult(tuple(violations), tuple(warnings))


# -- ordering -----------------------------------------------------------------------


def topo_order(plan: Plan) -> list[int]:
    """Dependency order over the effective graph; ties go to the lowest id."""
    graph = plan.graph()
    pending = {i: len(d) for i, d in graph.items()}
    dependents = plan.dependents()
    ready = [i for i, n in pending.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in dependents[i]:
            pending[j] -= 1
            if pending[j] == 0:
                heapq.heappush(ready, j)
    if len(order) < len(graph):
        rest = {i: graph[i] - set(order) for i in graph if i not in set(order)}
        raise CycleError(find_cycle(rest) or sorted(rest))
    return order


def depths(plan: Plan) -> dict[int, int]:
    """Longest-path distance of each task from a dependency-free task."""
    graph = plan.graph()
    out: dict[int, int] = {}
    for i in topo_order(plan):
        out[i] = 1 + max((out[j] for j in graph[i]), default=-1)
    return out


def _args_key(args: Mapping[str, Any]) -> str:
    return json.dumps({k: to_jsonable(v) for k, v in args.items()}, sort_keys=True, ensure_ascii=False)


_REF_TEXT_RE = re.compile(r"<resource>-(\d+)")


def _downstream_signatures(plan: Plan, order: list[int]) -> dict[int, str]:
    # Id-free digest of everything that hangs below a task; separates tasks that look
    # identical locally but feed different consumers.
    dependents = plan.dependents()
    sigs: dict[int, str] = {}
    for i in reversed(order):
        parts = []
        for j in dependents[i]:
            child = plan.by_id[j]
            role = _REF_TEXT_RE.sub(
                lambda m: "<self>" if int(m.group(1)) == i else "<other>", _args_key(child.args)
            )
            parts.append(json.dumps([child.task.value, i in child.declared_deps, role, sigs[j]]))
        payload = json.dumps(sorted(parts))
        sigs[i] = hashlib.sha1(payload.encode()).hexdigest()
    return sigs


def canonicalize(plan: Plan) -> Plan:
    """Relabel ids 0..n-1 by (depth, task type, args, deps) and sort the task list.

    Declared deps that name no task are dropped.  The result is idempotent and,
    barring exact structural ties, independent of the input's id numbering.
    """
    if len(set(plan.ids)) != len(plan.ids):
        raise ValueError("cannot canonicalize a plan with duplicate ids")
    missing = {r for t in plan.tasks for r in t.refs} - set(plan.ids)
    if missing:
        raise ValueError(f"cannot canonicalize: references to missing tasks {sorted(missing)}")
    order = topo_order(plan)
    depth = depths(plan)
    down = _downstream_signatures(plan, order)
    present = set(plan.by_id)

    by_depth: dict[int, list[int]] = defaultdict(list)
    for i in order:
        by_depth[depth[i]].append(i)

    relabel: dict[int, int] = {}
    for d in sorted(by_depth):
        keyed = []
        for i in by_depth[d]:
            node = plan.by_id[i]
            args = {k: map_refs(v, lambda r: ResourceRef(relabel[r.target])) for k, v in node.args.items()}
            deps = sorted(relabel[j] for j in node.declared_deps if j in present)
            keyed.append(((node.task.value, _args_key(args), deps, down[i], i), i))
        for _, i in sorted(keyed):
            relabel[i] = len(relabel)

    tasks = []
    for old, new in sorted(relabel.items(), key=lambda kv: kv[1]):
        node = plan.by_id[old]
        args = {
            k: map_refs(node.args[k], lambda r: ResourceRef(relabel[r.target]))
            for k in sorted(node.args)
        }
        deps = tuple(sorted(relabel[j] for j in node.declared_deps if j in present)) or (-1,)
        tasks.append(TaskNode(node.task, new, deps, args))
    return Plan(tuple(tasks))


def labeled_edges(plan: Plan) -> tuple:
    """Task-type-labelled effective graph of a plan, keyed by its current ids."""
    graph = plan.graph()
    return tuple(
        (t.id, t.task.value, tuple(sorted(graph[t.id]))) for t in sorted(plan.tasks, key=lambda t: t.id)
    )
