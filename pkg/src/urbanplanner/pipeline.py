"""The end-to-end flow: query -> plan -> model matching -> execution -> response."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .adapters import Fixtures, Toolkit, default_fixtures
from .config import Config, load_config
from .evaluation import plan_from_field
from .executor import ExecutionTrace, PlanNotExecutable, execute, synthesize_response, templated_summary
from .gateway import Gateway, GatewayError, HttpBackend, ReplayBackend, ReplayStore
from .parser import PlanParseError, extract_plan_text, parse_relaxed
from .plan import Plan, UnknownTaskType, ValidationResult, validate
from .prompts import COMPONENTS, Templates, build_inference_prompt, chat_log
from .registry import MatchResult, NoCandidate, Registry, default_registry, match_all_fallback, match_llm

log = logging.getLogger(__name__)

ANALYSIS, MATCHING, GENERATION = "analysis", "matching", "generation"


class PipelineError(Exception):
    stage = ""

    def __init__(self, message: str, run: "PipelineRun", stage: str | None = None):
        super().__init__(message)
        self.run = run
        if stage:
            self.stage = stage


class BackendFailed(PipelineError):
    """The language-model backend could not answer."""


class PlanParseFailed(PipelineError):
    stage = ANALYSIS


class PlanValidationFailed(PlanParseFailed):
    def __init__(self, message: str, run: "PipelineRun", validation: ValidationResult):
        super().__init__(message, run)
        self.validation = validation


class MatchFailed(PipelineError):
    stage = MATCHING


class ExecutionFailed(PipelineError):
    stage = GENERATION


@dataclass
class PipelineRun:
    query: str
    prompt: str = ""
    raw_plan_text: str | None = None
    plan: Plan | None = None
    validation: ValidationResult | None = None
    match: MatchResult | None = None
    trace: ExecutionTrace | None = None
    response: str | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)
    stages: list[str] = field(default_factory=list)
    error: dict | None = None

    @property
    def run_id(self) -> str:
        digest = hashlib.sha256(f"{self.query}\x00{self.raw_plan_text or ''}".encode("utf-8"))
        return digest.hexdigest()[:16]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "query": self.query,
            "prompt": self.prompt,
            "raw_plan_text": self.raw_plan_text,
            "plan": self.plan.to_jsonable() if self.plan is not None else None,
            "validation": self.validation.to_jsonable() if self.validation is not None else None,
            "match": self.match.to_jsonable() if self.match is not None else None,
            "trace": self.trace.to_jsonable() if self.trace is not None else None,
            "response": self.response,
            "stages": list(self.stages),
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
            "error": self.error,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_jsonable(), indent=2, ensure_ascii=False) + "\n", "utf-8")


def build_gateway(config: Config) -> Gateway:
    if config.backend == "replay":
        store = ReplayStore()
        for p in config.replay_paths():
            store.update(ReplayStore.load(p))
        return Gateway().register(ReplayBackend(store, "replay"))
    return Gateway().register(HttpBackend.from_env(model=config.model, name="http"))


class Pipeline:
    """Shared by the CLI and the HTTP service; holds no per-query state."""

    def __init__(
        self,
        config: Config | None = None,
        gateway: Gateway | None = None,
        registry: Registry | None = None,
        fixtures: Fixtures | None = None,
    ):
        self.config = config or load_config()
        self.gateway = gateway if gateway is not None else build_gateway(self.config)
        self.registry = registry or (
            Registry.load(self.config.registry) if self.config.registry else default_registry()
        )
        fixtures = fixtures or (Fixtures(self.config.fixtures) if self.config.fixtures else default_fixtures())
        self.toolkit = Toolkit(fixtures, self.config.adapters)
        self.adapters = self.toolkit.adapters(self.registry)
        self.templates = Templates.load(self.config.templates) if self.config.templates else None

    @property
    def backend(self) -> str:
        return self.config.backend

    # -- stages -----------------------------------------------------------------------

    def prompt_for(self, query: str) -> str:
        enabled = [c for c in COMPONENTS if c not in self.config.ablate]
        return build_inference_prompt(query, enabled, self.templates)

    def analyse(self, run: PipelineRun) -> Plan:
        run.stages.append(ANALYSIS)
        run.prompt = self.prompt_for(run.query)
        try:
            run.raw_plan_text = self.gateway.ask(run.prompt, backend=self.backend).content
        except GatewayError as exc:
            raise BackendFailed(f"planner backend failed: {exc}", run, ANALYSIS) from exc
        try:
            plan = parse_relaxed(extract_plan_text(run.raw_plan_text))
        except (PlanParseError, UnknownTaskType) as exc:
            raise PlanParseFailed(f"{type(exc).__name__}: {exc}", run) from exc
        run.plan = plan
        run.validation = validate(plan)
        if not run.validation.ok:
            msg = "; ".join(i.message for i in run.validation.violations)
            raise PlanValidationFailed(msg, run, run.validation)
        for w in run.validation.warnings:
            log.info("plan warning (%s): %s", w.code, w.message)
        return plan

    def match(self, run: PipelineRun) -> MatchResult:
        run.stages.append(MATCHING)
        try:
            if self.config.matching == "fallback":
                result = match_all_fallback(run.plan, self.registry)
            else:
                result = match_llm(
                    run.plan, self.registry, self.gateway, self.backend, chat_log(run.query, run.plan)
                )
        except NoCandidate as exc:
            raise MatchFailed(str(exc), run) from exc
        unbound = sorted({m for m in result.assignments.values() if m not in self.adapters})
        if unbound:
            raise MatchFailed(f"model(s) {unbound} have no local adapter", run)
        run.match = result
        return result

    def generate(self, run: PipelineRun) -> str:
        run.stages.append(GENERATION)
        try:
            run.trace = execute(
                run.plan, run.match, self.adapters, self.config.mode, self.config.workers or None
            )
        except PlanNotExecutable as exc:
            raise ExecutionFailed(str(exc), run) from exc
        if self.config.synthesis == "llm":
            run.response = synthesize_response(run.query, run.trace, self.gateway, self.backend)
        else:
            run.response = templated_summary(run.trace)
        return run.response

    # -- entry points -----------------------------------------------------------------

    def _timed(self, run: PipelineRun, name: str, fn) -> None:
        t0 = time.perf_counter()
        try:
            fn(run)
        except PipelineError as exc:
            run.error = {"stage": exc.stage, "type": type(exc).__name__, "message": str(exc)}
            raise
        finally:
            run.timings_ms[name] = (time.perf_counter() - t0) * 1000.0

    def run(self, query: str, trace_path: str | Path | None = None) -> PipelineRun:
        if not query or not query.strip():
            raise ValueError("query must be non-empty")
        run = PipelineRun(query.strip())
        try:
            self._timed(run, ANALYSIS, self.analyse)
            self._timed(run, MATCHING, self.match)
            self._timed(run, GENERATION, self.generate)
        finally:
            if trace_path is not None:
                run.save(trace_path)
        return run

    def resume(self, record: dict) -> PipelineRun:
        """Redo matching and generation from a persisted run record's plan."""
        run = PipelineRun(record["query"], record.get("prompt", ""), record.get("raw_plan_text"))
        run.plan = plan_from_field(record["plan"])
        run.validation = validate(run.plan)
        run.stages.append(ANALYSIS)
        self._timed(run, MATCHING, self.match)
        self._timed(run, GENERATION, self.generate)
        return run

    def execute_plan(self, plan: Plan) -> ExecutionTrace:
        """Validate, fallback-match and execute a plan given directly (no query)."""
        run = PipelineRun("", plan=plan, validation=validate(plan))
        if not run.validation.ok:
            raise PlanValidationFailed(
                "; ".join(i.message for i in run.validation.violations), run, run.validation
            )
        try:
            run.match = match_all_fallback(plan, self.registry)
        except NoCandidate as exc:
            raise MatchFailed(str(exc), run) from exc
        self.generate(run)
        return run.trace


def run_query(query: str, config: Config | None = None, trace_path: str | Path | None = None) -> PipelineRun:
    return Pipeline(config).run(query, trace_path)
