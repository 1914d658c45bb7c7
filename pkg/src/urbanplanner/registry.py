"""Model zoo: model cards, candidate filtering and sub-task to model matching."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from .gateway import Gateway, GatewayError, ReplayMiss
from .parser import PlanParseError, loads_relaxed
from .plan import Plan, TaskNode, TaskType
from .prompts import build_matching_prompt

log = logging.getLogger(__name__)

_FIELD_ALIASES = {
    "model id": "model_id",
    "model name": "model_name",
    "data domain": "data_domain",
    "task types": "task_types",
    "adapter": "adapter_binding",
}


class NoCandidate(LookupError):
    def __init__(self, task_id: int, task: TaskType):
        super().__init__(f"no model in the registry serves task {task_id} ({task.value})")
        self.task_id = task_id
        self.task = task


@dataclass(frozen=True)
class ModelCard:
    model_id: int
    model_name: str
    data_domain: tuple[str, ...]
    description: str
    task_types: frozenset[TaskType]
    adapter_binding: str = ""

    def __post_init__(self):
        if self.model_id <= 0:
            raise ValueError(f"model id must be positive, got {self.model_id}")
        if not self.task_types:
            raise ValueError(f"model {self.model_id} ({self.model_name}) declares no task types")

    @classmethod
    def from_jsonable(cls, raw: Mapping[str, Any]) -> "ModelCard":
        data = {_FIELD_ALIASES.get(k, k): v for k, v in raw.items()}
        domain = data.get("data_domain", ())
        if isinstance(domain, str):
            domain = [d.strip() for d in domain.split(",")]
        types = data.get("task_types", ())
        if isinstance(types, str):
            types = [types]
        return cls(
            model_id=int(data["model_id"]),
            model_name=str(data["model_name"]),
            data_domain=tuple(d for d in domain if d),
            description=str(data.get("description", "")),
            task_types=frozenset(TaskType.lookup(t) for t in types),
            adapter_binding=str(data.get("adapter_binding", "")),
        )

    def to_card_json(self) -> dict:
        """The card as a prompt sees it."""
        return {
            "model id": self.model_id,
            "model name": self.model_name,
            "data domain": ", ".join(self.data_domain),
            "description": self.description,
        }

    def to_jsonable(self) -> dict:
        return {
            **self.to_card_json(),
            "task types": sorted(t.value for t in self.task_types),
            "adapter": self.adapter_binding,
        }


@dataclass(frozen=True)
class Registry:
    cards: tuple[ModelCard, ...]

    def __post_init__(self):
        ids = [c.model_id for c in self.cards]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ValueError(f"duplicate model ids in registry: {dupes}")

    def __iter__(self):
        return iter(self.cards)

    def __len__(self) -> int:
        return len(self.cards)

    def __getitem__(self, model_id: int) -> ModelCard:
        for card in self.cards:
            if card.model_id == model_id:
                return card
        raise KeyError(model_id)

    def __contains__(self, model_id: int) -> bool:
        return any(c.model_id == model_id for c in self.cards)

    @classmethod
    def from_jsonable(cls, rows: Iterable[Mapping[str, Any]]) -> "Registry":
        return cls(tuple(ModelCard.from_jsonable(r) for r in rows))

    @classmethod
    def load(cls, path: str | Path) -> "Registry":
        return cls.from_jsonable(json.loads(Path(path).read_text("utf-8")))

    def to_jsonable(self) -> list[dict]:
        return [c.to_jsonable() for c in self.cards]


def default_registry() -> Registry:
    text = resources.files("urbanplanner.data").joinpath("zoo.json").read_text("utf-8")
    return Registry.from_jsonable(json.loads(text))


def candidates_for(task: TaskNode, registry: Registry) -> list[ModelCard]:
    found = sorted((c for c in registry if task.task in c.task_types), key=lambda c: c.model_id)
    if not found:
        raise NoCandidate(task.id, task.task)
    return found


# -- deterministic fallback ---------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9.]+")


def _stem(token: str) -> str:
    if len(token) > 5 and token.endswith("ing"):
        return token[:-3]
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def _tokens(text: str) -> list[str]:
    return [_stem(t) for t in _TOKEN_RE.findall(text.lower())]


def _token_match(a: str, b: str) -> bool:
    if a == b:
        return True
    short, long_ = sorted((a, b), key=len)
    # Compound words: "park" inside "carpark".
    return len(short) >= 3 and (long_.startswith(short) or long_.endswith(short))


def tag_matches(tag: str, data_domain: Iterable[str]) -> bool:
    """True when every token of ``tag`` matches a token of one data-domain entry."""
    wanted = _tokens(tag)
    if not wanted:
        return False
    for entry in data_domain:
        have = _tokens(entry)
        if all(any(_token_match(w, h) for h in have) for w in wanted):
            return True
    return False


def domain_tags(task: TaskNode) -> list[str]:
    raw = task.args.get("domain")
    if raw is None:
        return []
    items = raw if isinstance(raw, tuple) else (raw,)
    tags = []
    for item in items:
        if isinstance(item, str):
            tags.extend(t.strip() for t in item.split(",") if t.strip())
    return tags


def domain_score(task: TaskNode, card: ModelCard) -> int:
    return sum(tag_matches(tag, card.data_domain) for tag in domain_tags(task))


def match_fallback(task: TaskNode, candidates: list[ModelCard]) -> ModelCard:
    """Highest domain score wins; ties go to the lowest model id."""
    if not candidates:
        raise NoCandidate(task.id, task.task)
    return min(candidates, key=lambda c: (-domain_score(task, c), c.model_id))


# -- model-assisted selection -------------------------------------------------------


@dataclass(frozen=True)
class MatchResult:
    assignments: dict[int, int]
    sources: dict[int, str] = field(default_factory=dict)

    @property
    def method(self) -> str:
        """``llm`` when the model chose every assignment, otherwise ``fallback``."""
        if self.sources and all(s == "llm" for s in self.sources.values()):
            return "llm"
        return "fallback"

    def to_jsonable(self) -> dict:
        return {
            "assignments": {str(k): v for k, v in sorted(self.assignments.items())},
            "sources": {str(k): v for k, v in sorted(self.sources.items())},
            "method": self.method,
        }

    @classmethod
    def from_jsonable(cls, raw: Mapping[str, Any]) -> "MatchResult":
        return cls(
            {int(k): int(v) for k, v in raw["assignments"].items()},
            {int(k): str(v) for k, v in raw.get("sources", {}).items()},
        )


def match_all_fallback(plan: Plan, registry: Registry) -> MatchResult:
    assignments, sources = {}, {}
    for node in plan.tasks:
        assignments[node.id] = match_fallback(node, candidates_for(node, registry)).model_id
        sources[node.id] = "fallback"
    return MatchResult(assignments, sources)


def parse_selection(text: str) -> dict[int, int]:
    """Pull a ``{task id: model id}`` mapping out of a model reply; {} if none."""
    start, end = text.find("{"), text.rfind("}")
    if start == -1 or end <= start:
        return {}
    try:
        raw = loads_relaxed(text[start : end + 1])
    except PlanParseError:
        return {}
    if not isinstance(raw, dict):
        return {}
    out = {}
    for key, value in raw.items():
        try:
            out[int(str(key).strip())] = int(value)
        except (TypeError, ValueError):
            continue
    return out


def match_llm(
    plan: Plan,
    registry: Registry,
    gateway: Gateway,
    backend: str = "replay",
    chat_log: str = "",
    allow_fallback: bool = True,
) -> MatchResult:
    candidates = {node.id: candidates_for(node, registry) for node in plan.tasks}
    prompt = build_matching_prompt(plan, candidates, chat_log)
    try:
        reply = gateway.ask(prompt, backend=backend).content
    except GatewayError as exc:
        if not allow_fallback:
            raise
        level = logging.INFO if isinstance(exc, ReplayMiss) else logging.WARNING
        log.log(level, "model matching call failed (%s); using the deterministic fallback", exc)
        reply = ""
    chosen = parse_selection(reply)
    assignments, sources = {}, {}
    for node in plan.tasks:
        allowed = {c.model_id for c in candidates[node.id]}
        pick = chosen.get(node.id)
        if pick in allowed:
            assignments[node.id], sources[node.id] = pick, "llm"
        else:
            assignments[node.id] = match_fallback(node, candidates[node.id]).model_id
            sources[node.id] = "fallback"
    return MatchResult(assignments, sources)
