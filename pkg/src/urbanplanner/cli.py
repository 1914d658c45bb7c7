"""Command-line entry point: ``urbanplanner <command> ...`` (or ``python -m urbanplanner``).

Exit status is 0 on success, 1 on a domain error (bad plan, backend failure, ...)
and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .dataset import QuotaExceeded, generate, load_seeds, split_and_stratify, write_dataset, write_jsonl
from .evaluation import EmptyDataset, evaluate, load_examples
from .executor import ExecutionError, templated_summary
from .gateway import GatewayError
from .parser import PlanParseError, extract_plan_text, parse_relaxed
from .pipeline import Pipeline, PipelineError, PipelineRun
from .plan import UnknownTaskType, serialize_strict, validate
from .registry import NoCandidate, match_all_fallback, match_llm
from .prompts import chat_log

log = logging.getLogger("urbanplanner")


class DomainError(Exception):
    pass


def _config_flags(p: argparse.ArgumentParser, *, ablate=False, run=False, registry=False, fixtures=False):
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--backend", choices=["replay", "http"])
    p.add_argument("--replay", type=Path, action="append", help="replay store (repeatable)")
    p.add_argument("--model", help="model name for the http backend")
    p.add_argument("--templates", type=Path, help="prompt template directory")
    if ablate:
        p.add_argument("--ablate", help="comma-separated components to leave out: sf,tu,cu")
    if registry:
        p.add_argument("--registry", type=Path, help="model card JSON")
    if fixtures:
        p.add_argument("--fixtures", type=Path, help="fixture directory")
    if run:
        p.add_argument("--parallel", action="store_true", help="run independent tasks concurrently")
        p.add_argument("--workers", type=int, help="parallel worker budget")
        p.add_argument("--matching", choices=["llm", "fallback"])
        p.add_argument("--synthesis", choices=["template", "llm"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="urbanplanner", description="Plan, match and run urban analysis queries.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="turn a query into a task plan")
    p.add_argument("--query", required=True)
    p.add_argument("--out", type=Path)
    _config_flags(p, ablate=True)

    p = sub.add_parser("validate", help="check a plan file")
    p.add_argument("plan", type=Path)

    p = sub.add_parser("match", help="assign a model to every task of a plan")
    p.add_argument("plan", type=Path)
    p.add_argument("--query", default="", help="original query, for the matching chat log")
    p.add_argument("--method", choices=["llm", "fallback"], default="fallback")
    p.add_argument("--out", type=Path)
    _config_flags(p, registry=True)

    p = sub.add_parser("run", help="execute a plan against fixtures")
    p.add_argument("plan", type=Path)
    p.add_argument("--trace", type=Path, help="write trace.json here")
    _config_flags(p, registry=True, fixtures=True, run=True)

    p = sub.add_parser("ask", help="answer a query end to end")
    p.add_argument("query")
    p.add_argument("--trace", type=Path, help="write the run record (run.json) here")
    _config_flags(p, ablate=True, registry=True, fixtures=True, run=True)

    p = sub.add_parser("eval", help="score predicted plans against gold plans")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--strict-args", action="store_true")
    p.add_argument("--report", type=Path)

    p = sub.add_parser("dataset", help="dataset tooling")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    g = dsub.add_parser("gen", help="expand seeds into new examples")
    g.add_argument("--seeds", type=Path, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--rng-seed", type=int, default=0)
    g.add_argument("--ratio", type=float, default=0.9, help="train share per stratum")
    g.add_argument("--out", type=Path, default=Path("dataset"))
    _config_flags(g)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--runs", type=Path, help="directory for persisted run records")
    _config_flags(p, ablate=True, registry=True, fixtures=True, run=True)
    return ap


def _config(args):
    return load_config(
        getattr(args, "config", None),
        backend=getattr(args, "backend", None),
        replay=getattr(args, "replay", None),
        model=getattr(args, "model", None),
        templates=getattr(args, "templates", None),
        ablate=getattr(args, "ablate", None),
        registry=getattr(args, "registry", None),
        fixtures=getattr(args, "fixtures", None),
        mode="parallel" if getattr(args, "parallel", False) else None,
        workers=getattr(args, "workers", None),
        matching=getattr(args, "matching", None),
        synthesis=getattr(args, "synthesis", None),
        port=getattr(args, "port", None),
    )


def _read_plan(path: Path):
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None
    return parse_relaxed(extract_plan_text(text))


def _emit(text: str, out: Path | None = None) -> None:
    if out is not None:
        out.write_text(text + "\n", "utf-8")
    print(text)


def cmd_plan(args) -> int:
    pipe = Pipeline(_config(args))
    run = PipelineRun(args.query.strip())
    plan = pipe.analyse(run)
    for w in run.validation.warnings:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(serialize_strict(plan), args.out)
    return 0


def cmd_validate(args) -> int:
    result = validate(_read_plan(args.plan))
    for w in result.warnings:
        print(f"warning: {w.message}")
    if result.ok:
        print("ok")
        return 0
    for v in result.violations:
        print(f"violation: {v.message}")
    return 1


def cmd_match(args) -> int:
    plan = _read_plan(args.plan)
    config = _config(args)
    if not validate(plan).ok:
        raise DomainError("plan does not validate; run `validate` for details")
    pipe = Pipeline(config)
    if args.method == "llm":
        result = match_llm(plan, pipe.registry, pipe.gateway, config.backend, chat_log(args.query, plan))
    else:
        result = match_all_fallback(plan, pipe.registry)
    _emit(json.dumps(result.to_jsonable(), indent=2), args.out)
    return 0


def cmd_run(args) -> int:
    plan = _read_plan(args.plan)
    pipe = Pipeline(_config(args))
    trace = pipe.execute_plan(plan)
    if args.trace:
        trace.save(args.trace)
    print(templated_summary(trace))
    return 0 if all(r.status == "ok" for r in trace.records.values()) else 1


def cmd_ask(args) -> int:
    pipe = Pipeline(_config(args))
    run = pipe.run(args.query, args.trace)
    print(run.response)
    return 0


def cmd_eval(args) -> int:
    report = evaluate(load_examples(args.pred, args.gold), strict_args=args.strict_args)
    if args.report:
        args.report.write_text(json.dumps(report.to_jsonable(), indent=2) + "\n", "utf-8")
    print(report.table())
    return 0


def cmd_dataset(args) -> int:
    config = _config(args)
    pipe_gateway = Pipeline(config).gateway
    seeds = load_seeds(args.seeds)
    try:
        examples = generate(seeds, args.n, pipe_gateway, config.backend, args.rng_seed)
    except QuotaExceeded as exc:
        args.out.mkdir(parents=True, exist_ok=True)
        write_jsonl(args.out / "rejected.jsonl", (e.to_jsonable() for e in exc.examples if not e.accepted))
        raise
    split = split_and_stratify([e for e in examples if e.accepted], args.ratio, args.rng_seed)
    paths = write_dataset(args.out, examples, split)
    print(f"train={len(split['train'])} eval={len(split['eval'])} rejected={sum(not e.accepted for e in examples)}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(_config(args), host=args.host, runs_dir=args.runs)
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "validate": cmd_validate,
    "match": cmd_match,
    "run": cmd_run,
    "ask": cmd_ask,
    "eval": cmd_eval,
    "dataset": cmd_dataset,
    "serve": cmd_serve,
}

DOMAIN_ERRORS = (
    DomainError,
    PipelineError,
    PlanParseError,
    UnknownTaskType,
    GatewayError,
    NoCandidate,
    ExecutionError,
    EmptyDataset,
    QuotaExceeded,
    ValueError,
    OSError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
