"""HTTP front end for the pipeline (FastAPI)."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import Config
from .evaluation import plan_from_field
from .parser import PlanParseError
from .pipeline import (
    ANALYSIS,
    BackendFailed,
    Pipeline,
    PipelineError,
    PipelineRun,
    PlanValidationFailed,
)
from .plan import UnknownTaskType

log = logging.getLogger(__name__)


class QueryBody(BaseModel):
    query: str


class PlanBody(BaseModel):
    plan: Union[list[Any], str]


def _error(status: int, message: str, stage: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, "stage": stage, **extra})


def _pipeline_error(exc: PipelineError) -> JSONResponse:
    if isinstance(exc, BackendFailed):
        return _error(502, str(exc), exc.stage)
    if isinstance(exc, PlanValidationFailed):
        return _error(422, str(exc), exc.stage, violations=[i.__dict__ for i in exc.validation.violations])
    return _error(422, str(exc), exc.stage)


def create_app(config: Config | None = None, pipeline: Pipeline | None = None, runs_dir: str | Path | None = None) -> FastAPI:
    pipe = pipeline or Pipeline(config)
    runs = Path(runs_dir) if runs_dir else None
    if runs:
        runs.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="urbanplanner", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request body: {exc.errors()[0].get('msg', 'invalid')}", "request")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/models")
    def models():
        return pipe.registry.to_jsonable()

    @app.post("/v1/plan")
    def plan(body: QueryBody):
        if not body.query.strip():
            return _error(400, "query must be non-empty", "request")
        run = PipelineRun(body.query.strip())
        try:
            result = pipe.analyse(run)
        except PipelineError as exc:
            return _pipeline_error(exc)
        return result.to_jsonable()

    @app.post("/v1/run")
    def run_plan(body: PlanBody):
        try:
            parsed = plan_from_field(body.plan)
        except (PlanParseError, UnknownTaskType) as exc:
            return _error(400, f"{type(exc).__name__}: {exc}", ANALYSIS)
        try:
            trace = pipe.execute_plan(parsed)
        except PipelineError as exc:
            return _pipeline_error(exc)
        return trace.to_jsonable()

    @app.post("/v1/ask")
    def ask(body: QueryBody):
        if not body.query.strip():
            return _error(400, "query must be non-empty", "request")
        try:
            run = pipe.run(body.query)
        except PipelineError as exc:
            return _pipeline_error(exc)
        if runs:
            run.save(runs / f"{run.run_id}.json")
        return {"response": run.response, "run_id": run.run_id}

    return app


def serve(config: Config, host: str = "127.0.0.1", runs_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(config, runs_dir=runs_dir), host=host, port=config.port, log_level="info")
