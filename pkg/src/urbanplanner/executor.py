"""Dependency-ordered execution of a matched plan, serially or on a thread pool."""

from __future__ import annotations

import json
import logging
import time
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Callable, Mapping

from .gateway import Gateway, GatewayError, ReplayMiss
from .outputs import GpsPoints, OutputValue, Records, output_to_jsonable, render_output
from .plan import Plan, ResourceRef, TaskNode, TaskType, TimeSpec, depths, topo_order, validate
from .prompts import build_synthesis_prompt
from .registry import MatchResult

log = logging.getLogger(__name__)

OK, FAILED, SKIPPED = "ok", "failed", "skipped"
MAX_WORKERS = 8
NO_RESULTS = "No results: the plan produced no task outputs."

Adapter = Callable[[TaskType, Mapping[str, Any]], OutputValue]


class ExecutionError(Exception):
    pass


class UnresolvedRef(ExecutionError):
    pass


class TypeMismatch(ExecutionError, TypeError):
    pass


class PlanNotExecutable(ExecutionError, ValueError):
    """The plan has validation violations or the assignment is incomplete."""


class _Clock:
    """Monotonic nanoseconds anchored to one wall-clock reading, so ordering is exact."""

    def __init__(self):
        self.wall = datetime.now(timezone.utc)
        self.mono = time.monotonic_ns()

    def now(self) -> datetime:
        return self.wall + timedelta(microseconds=(time.monotonic_ns() - self.mono) // 1000)


@dataclass
class TaskRecord:
    task_id: int
    task: TaskType
    model_id: int | None
    status: str = SKIPPED
    resolved_args: dict = field(default_factory=dict)
    output: OutputValue | None = None
    error: str | None = None
    started: datetime | None = None
    finished: datetime | None = None

    def to_jsonable(self) -> dict:
        return {
            "id": self.task_id,
            "task": self.task.value,
            "model_id": self.model_id,
            "status": self.status,
            "resolved_args": {k: _arg_jsonable(v) for k, v in self.resolved_args.items()},
            "output": output_to_jsonable(self.output),
            "error": self.error,
            "started": self.started.isoformat() if self.started else None,
            "finished": self.finished.isoformat() if self.finished else None,
        }


@dataclass
class ExecutionTrace:
    plan: Plan
    records: dict[int, TaskRecord]
    order: list[int]
    mode: str = "serial"
    wall_ms: float = 0.0

    @property
    def statuses(self) -> dict[int, str]:
        return {i: r.status for i, r in self.records.items()}

    def outputs_jsonable(self) -> dict[str, Any]:
        return {str(i): output_to_jsonable(self.records[i].output) for i in self.order}

    def to_jsonable(self) -> dict:
        return {
            "mode": self.mode,
            "order": list(self.order),
            "wall_ms": round(self.wall_ms, 3),
            "tasks": [self.records[i].to_jsonable() for i in self.order],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_jsonable(), indent=2, ensure_ascii=False) + "\n", "utf-8")


def _arg_jsonable(v: Any) -> Any:
    if isinstance(v, (GpsPoints, Records)) or hasattr(v, "series"):
        return output_to_jsonable(v)
    if isinstance(v, datetime):
        return v.isoformat()
    if isinstance(v, (TimeSpec, ResourceRef)):
        return str(v)
    if isinstance(v, tuple):
        return [_arg_jsonable(x) for x in v]
    return v


# -- argument resolution ----------------------------------------------------------


def _as_points(output: OutputValue, ref: ResourceRef) -> GpsPoints:
    if isinstance(output, GpsPoints):
        return output
    if isinstance(output, Records):
        rows = [r for r in output.rows if "gps" in r]
        if rows:
            points = tuple((float(r["gps"][0]), float(r["gps"][1])) for r in rows)
            names = tuple(str(r["name"]) for r in rows) if all("name" in r for r in rows) else ()
            return GpsPoints(points, names)
    raise TypeMismatch(f"{ref} holds {type(output).__name__}, which carries no gps points")


def _as_time(output: OutputValue, ref: ResourceRef) -> datetime:
    when = getattr(output, "primary_time", None)
    if when is None:
        raise TypeMismatch(f"{ref} holds {type(output).__name__}, which carries no time")
    return when


def _merge_points(parts: list[GpsPoints]) -> GpsPoints:
    points = tuple(p for part in parts for p in part.points)
    names = tuple(n for part in parts for n in part.names) if all(part.names for part in parts) else ()
    return GpsPoints(points, names)


def resolve_args(task: TaskNode, trace: ExecutionTrace) -> dict:
    """Replace every ``<resource>-k`` in ``task.args`` by task k's output, shaped for its slot."""
    deps = {d for d in task.declared_deps if d in trace.records} | task.refs
    for d in sorted(deps):
        rec = trace.records.get(d)
        if rec is None or rec.status != OK:
            state = "missing" if rec is None else rec.status
            raise UnresolvedRef(f"task {task.id} needs task {d}, which is {state}")

    def output(ref: ResourceRef) -> OutputValue:
        return trace.records[ref.target].output

    resolved = {}
    for key, value in task.args.items():
        if isinstance(value, TimeSpec) and value.kind == "resource":
            resolved[key] = _as_time(output(value.ref), value.ref)
        elif isinstance(value, ResourceRef):
            if key == "time":
                resolved[key] = _as_time(output(value), value)
            elif key == "location_gps_list":
                resolved[key] = _as_points(output(value), value)
            else:
                resolved[key] = output(value)
        elif isinstance(value, tuple) and any(isinstance(v, ResourceRef) for v in value):
            if key == "location_gps_list":
                parts = []
                for v in value:
                    if isinstance(v, ResourceRef):
                        parts.append(_as_points(output(v), v))
                    else:
                        parts.append(GpsPoints((tuple(map(float, v)),)))
                resolved[key] = _merge_points(parts)
            else:
                resolved[key] = tuple(output(v) if isinstance(v, ResourceRef) else v for v in value)
        else:
            resolved[key] = value
    return resolved


# -- execution ----------------------------------------------------------------------


def _check(plan: Plan, assignments: MatchResult, adapters: Mapping[int, Adapter]) -> None:
    result = validate(plan)
    if not result.ok:
        raise PlanNotExecutable("; ".join(i.message for i in result.violations))
    missing = [t.id for t in plan.tasks if t.id not in assignments.assignments]
    if missing:
        raise PlanNotExecutable(f"no model assigned to task(s) {missing}")
    unbound = sorted({assignments.assignments[t.id] for t in plan.tasks} - set(adapters))
    if unbound:
        raise PlanNotExecutable(f"no adapter bound for model id(s) {unbound}")


def _run_one(node: TaskNode, trace: ExecutionTrace, adapter: Adapter, clock: _Clock) -> None:
    rec = trace.records[node.id]
    rec.started = clock.now()
    try:
        rec.resolved_args = resolve_args(node, trace)
        rec.output = adapter(node.task, rec.resolved_args)
        rec.status = OK
    except Exception as exc:  # a failing task must not stop independent branches
        log.info("task %d (%s) failed: %s", node.id, node.task.value, exc)
        rec.status, rec.error = FAILED, f"{type(exc).__name__}: {exc}"
    rec.finished = clock.now()


def default_workers(plan: Plan) -> int:
    width = Counter(depths(plan).values())
    return max(1, min(MAX_WORKERS, max(width.values(), default=1)))


def execute(
    plan: Plan,
    assignments: MatchResult,
    adapters: Mapping[int, Adapter],
    mode: str = "serial",
    workers: int | None = None,
) -> ExecutionTrace:
    if mode not in ("serial", "parallel"):
        raise ValueError(f"mode must be serial or parallel, got {mode!r}")
    _check(plan, assignments, adapters)
    order = topo_order(plan)
    records = {
        t.id: TaskRecord(t.id, t.task, assignments.assignments[t.id]) for t in plan.tasks
    }
    trace = ExecutionTrace(plan, records, order, mode)
    graph = plan.graph()
    clock = _Clock()
    t0 = time.perf_counter()

    def adapter_for(tid: int) -> Adapter:
        return adapters[assignments.assignments[tid]]

    if mode == "serial":
        for tid in order:
            if any(records[d].status != OK for d in graph[tid]):
                continue  # stays skipped
            _run_one(plan.by_id[tid], trace, adapter_for(tid), clock)
    else:
        _run_parallel(plan, trace, graph, adapter_for, clock, workers or default_workers(plan))
    trace.wall_ms = (time.perf_counter() - t0) * 1000.0
    return trace


def _run_parallel(plan, trace, graph, adapter_for, clock, workers: int) -> None:
    dependents = plan.dependents()
    waiting = {i: len(d) for i, d in graph.items()}
    ready = sorted(i for i, n in waiting.items() if n == 0)
    running: dict[Future, int] = {}

    def settle(tid: int) -> None:
        # Called once tid is terminal; releases or skips its dependents.
        for child in sorted(dependents[tid]):
            waiting[child] -= 1
            if waiting[child] == 0:
                if all(trace.records[d].status == OK for d in graph[child]):
                    ready.append(child)
                else:
                    settle(child)  # skipped: propagate further down

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="task") as pool:
        while ready or running:
            while ready:
                tid = ready.pop(0)
                fut = pool.submit(_run_one, plan.by_id[tid], trace, adapter_for(tid), clock)
                running[fut] = tid
            done, _ = wait(running, return_when=FIRST_COMPLETED)
            for fut in sorted(done, key=lambda f: running[f]):
                tid = running.pop(fut)
                fut.result()
                settle(tid)
            ready.sort()


# -- response synthesis -------------------------------------------------------------


def templated_summary(trace: ExecutionTrace) -> str:
    if not trace.order:
        return NO_RESULTS
    lines = []
    for tid in trace.order:
        rec = trace.records[tid]
        if rec.status == OK:
            body = render_output(rec.output)
        elif rec.status == FAILED:
            body = f"failed ({rec.error})"
        else:
            body = "skipped because an upstream task did not finish"
        lines.append(f"{rec.task.value}: {body}")
    return "\n".join(lines)


def synthesize_response(
    query: str,
    trace: ExecutionTrace,
    gateway: Gateway | None = None,
    backend: str = "replay",
    fallback: bool = True,
) -> str:
    """Ask the gateway to phrase the answer; without one (or on failure) use the template."""
    if gateway is None:
        return templated_summary(trace)
    try:
        return gateway.ask(build_synthesis_prompt(query, trace), backend=backend).content
    except GatewayError as exc:
        if not fallback:
            raise
        if isinstance(exc, ReplayMiss):
            log.info("no recorded synthesis reply; using the templated summary")
        else:
            log.warning("synthesis call failed (%s); using the templated summary", exc)
        return templated_summary(trace)
