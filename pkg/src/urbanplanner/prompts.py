"""Prompt construction for planning, model matching and answer synthesis.

The planning prompt has three instruction components, scenario formulation (SF),
task understanding (TU) and causal understanding (CU), followed by the question.
Each component's text lives in a template file so that ablations are pure
configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from string import Template
from typing import Iterable, Mapping, Sequence

from .outputs import render_output
from .plan import Plan, TaskType, serialize_strict, to_jsonable

SF, TU, CU = "sf", "tu", "cu"
COMPONENTS = (SF, TU, CU)
TEMPLATE_FILES = {
    SF: "scenario_formulation.txt",
    TU: "task_understanding.txt",
    CU: "causal_understanding.txt",
}
SECTION_TITLES = {
    SF: "### Scenario Formulation",
    TU: "### Task Understanding",
    CU: "### Causal Understanding",
    "qa": "### Question",
}

TASK_ARGUMENTS: dict[TaskType, tuple[str, ...]] = {
    TaskType.LONG_TIME_SERIES_PREDICTION: ("location_gps_list", "time", "input", "domain"),
    TaskType.TIME_SERIES_PREDICTION: ("location_gps_list", "time", "input", "domain"),
    TaskType.EVENT_PREDICTION: ("location_gps_list", "time", "input", "domain"),
    TaskType.TRAJECTORY_COMPLETION: ("input", "domain"),
    TaskType.TRAJECTORY_PREDICTION: ("input", "time", "domain"),
    TaskType.TIME_SERIES_ANOMALY_DETECTION: ("location_gps_list", "input", "domain", "task_specific"),
    TaskType.TIME_SERIES_IMPUTATION: ("location_gps_list", "input", "domain", "task_specific"),
    TaskType.ARRIVAL_TIME_ESTIMATION: ("location_gps_list", "time"),
    TaskType.TAXI_AVAILABILITY: ("location_gps_list", "task_specific"),
    TaskType.MAP_MAPPING: ("location_name_list", "location_gps_list"),
    TaskType.BUS_ARRIVAL: ("bus_stop", "service_no", "task_specific"),
    TaskType.SPATIAL_RELATIONSHIP_INFER: ("location_gps_list",),
    TaskType.RECOMMENDATION: ("location_gps_list", "task_specific"),
}

ARGUMENT_DEFINITIONS: dict[str, str] = {
    "location_gps_list": "list of (latitude, longitude) points, usually <resource>-k from a map_mapping task",
    "location_name_list": "list of place names or street addresses",
    "time": "0 for now, a horizon such as 30m, 2h, 1d or 1w, a clock time such as 7PM, or <resource>-k",
    "input": "history_steps for recorded series, trajectory_records for trajectories",
    "domain": "data domain, e.g. 'parking', 'traffic speed', 'precipitation', 'air', 'traffic accident'",
    "task_specific": "extra detail for the task: a category, a radius such as '2km', or 'next' / 'next 30 mins'",
    "bus_stop": "bus stop code as a string",
    "service_no": "bus service number",
}

QA_DIRECTIVE = (
    "Decompose the question into sub-tasks. Reply with the plan only, "
    "as a JSON list of objects with the fields task, id, dep and args."
)


def task_schema() -> str:
    return "\n".join(
        f"{t.number}. {t.value}: {', '.join(TASK_ARGUMENTS[t])}" for t in TaskType
    )


def argument_schema() -> str:
    return "\n".join(f"- {name}: {text}" for name, text in ARGUMENT_DEFINITIONS.items())


def _read_template(path) -> str:
    lines = path.read_text("utf-8").splitlines()
    return "\n".join(l for l in lines if not l.startswith("#")).strip()


@dataclass(frozen=True)
class Templates:
    scenario_formulation: str
    task_understanding: str
    causal_understanding: str

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "Templates":
        if directory is None:
            return default_templates()
        root = Path(directory)
        missing = [name for name in TEMPLATE_FILES.values() if not (root / name).is_file()]
        if missing:
            raise FileNotFoundError(f"template directory {root} lacks {', '.join(missing)}")
        return cls._from(lambda name: root / name)

    @classmethod
    def _from(cls, locate) -> "Templates":
        sf = Template(_read_template(locate(TEMPLATE_FILES[SF])))
        return cls(
            scenario_formulation=sf.substitute(
                task_schema=task_schema(), argument_schema=argument_schema()
            ),
            task_understanding=_read_template(locate(TEMPLATE_FILES[TU])),
            causal_understanding=_read_template(locate(TEMPLATE_FILES[CU])),
        )

    def component(self, name: str) -> str:
        return {
            SF: self.scenario_formulation,
            TU: self.task_understanding,
            CU: self.causal_understanding,
        }[name]


@lru_cache(maxsize=1)
def default_templates() -> Templates:
    root = resources.files("urbanplanner").joinpath("templates")
    return Templates._from(root.joinpath)


def parse_ablation(spec: str | Iterable[str] | None) -> frozenset[str]:
    """``"sf,tu"`` -> {"sf", "tu"}; raises ValueError on unknown names."""
    if spec is None:
        return frozenset()
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    names = frozenset(s.strip().lower() for s in items if s.strip())
    unknown = names - set(COMPONENTS)
    if unknown:
        raise ValueError(f"unknown prompt component(s): {', '.join(sorted(unknown))}")
    return names


@dataclass(frozen=True)
class PromptBundle:
    scenario_formulation: str
    task_understanding: str
    causal_understanding: str
    qa_query: str
    enabled: frozenset[str] = frozenset(COMPONENTS)

    def sections(self) -> list[tuple[str, str]]:
        texts = {SF: self.scenario_formulation, TU: self.task_understanding, CU: self.causal_understanding}
        out = [(name, texts[name]) for name in COMPONENTS if name in self.enabled]
        out.append(("qa", f"Q: {self.qa_query}\n{QA_DIRECTIVE}\nA:"))
        return out

    def render(self) -> str:
        return "\n\n".join(f"{SECTION_TITLES[name]}\n{body}" for name, body in self.sections()) + "\n"


def split_sections(prompt: str) -> dict[str, str]:
    """Inverse of :meth:`PromptBundle.render`: section name -> body."""
    titles = {v: k for k, v in SECTION_TITLES.items()}
    out: dict[str, str] = {}
    current = None
    buf: list[str] = []
    for line in prompt.rstrip("\n").split("\n"):
        if line in titles:
            if current is not None:
                out[current] = "\n".join(buf).strip("\n")
            current, buf = titles[line], []
        else:
            buf.append(line)
    if current is not None:
        out[current] = "\n".join(buf).strip("\n")
    return out


def build_inference_prompt(
    query: str,
    enabled: Iterable[str] = COMPONENTS,
    templates: Templates | None = None,
) -> str:
    if not query.strip():
        raise ValueError("query must be non-empty")
    templates = templates or default_templates()
    return PromptBundle(
        templates.scenario_formulation,
        templates.task_understanding,
        templates.causal_understanding,
        query.strip(),
        frozenset(enabled),
    ).render()


def card_text(card) -> str:
    return json.dumps(card.to_card_json(), ensure_ascii=False)


def build_matching_prompt(plan: Plan, candidates: Mapping[int, Sequence], chat_log: str) -> str:
    lines = ["### Chat Log", chat_log.strip(), "", "### Sub-tasks"]
    for node in plan.tasks:
        args = json.dumps({k: to_jsonable(v) for k, v in node.args.items()}, ensure_ascii=False)
        lines.append(f"Task {node.id}: {node.task.value} {args}")
        lines.append("Candidates:")
        lines.extend(card_text(c) for c in candidates[node.id])
        lines.append("")
    lines.append("### Instruction")
    lines.append(
        "For each sub-task pick the most suitable candidate model. "
        'Reply with a JSON object mapping task id to model id, for example {"0": 2}.'
    )
    return "\n".join(lines) + "\n"


def chat_log(query: str, plan: Plan) -> str:
    return f"User: {query.strip()}\nPlan: {serialize_strict(plan)}"


def build_synthesis_prompt(query: str, trace) -> str:
    lines = ["### Question", query.strip(), "", "### Results"]
    for task_id in trace.order:
        rec = trace.records[task_id]
        if rec.status == "ok":
            body = render_output(rec.output)
        elif rec.status == "failed":
            body = f"failed: {rec.error}"
        else:
            body = "skipped: an upstream task did not finish"
        lines.append(f"[{task_id}] {rec.task.value} ({rec.status}):")
        lines.append(body)
    if not trace.order:
        lines.append("no result")
    lines += [
        "",
        "### Instruction",
        "Answer the question using only the results above. Mention tasks that failed or were skipped.",
    ]
    return "\n".join(lines) + "\n"
