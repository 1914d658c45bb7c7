"""The 34 reference query/plan combinations, stored as printed."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .parser import extract_plan_text, parse_relaxed
from .plan import Plan


@dataclass(frozen=True)
class GoldenItem:
    index: int
    query: str
    answer: str  # plan text exactly as printed, including trailing punctuation

    @property
    def plan_text(self) -> str:
        return extract_plan_text(self.answer)

    @property
    def plan(self) -> Plan:
        return parse_relaxed(self.plan_text)


@lru_cache(maxsize=1)
def golden_corpus() -> tuple[GoldenItem, ...]:
    text = resources.files("urbanplanner.data").joinpath("golden.jsonl").read_text("utf-8")
    return tuple(GoldenItem(**json.loads(line)) for line in text.splitlines() if line.strip())


def golden_item(index: int) -> GoldenItem:
    return golden_corpus()[index - 1]


# Carpark case study: a single parking forecast for a named carpark at a clock time.
CASE_STUDY_QUERY = "Will there be parking lots available at Marina Square Carpark at 7PM tonight?"
CASE_STUDY_ANSWER = (
    "[{task: time_series_prediction, id: 0, dep: [1], args: {location_gps_list: <resource>-1, "
    "time: 7PM, input: history_steps, domain: 'parking'}}, {task: map_mapping, id: 1, dep: [-1], "
    "args: {location_name_list: ['Marina Square Carpark']}}]"
)
