"""Values produced by task adapters, plus their text and JSON renderings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Any, Union


@dataclass(frozen=True)
class GpsPoints:
    points: tuple[tuple[float, float], ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.names and len(self.names) != len(self.points):
            raise ValueError("names and points differ in length")


@dataclass(frozen=True)
class Series:
    """Uniformly spaced values; ``None`` marks a missing observation."""

    label: str
    unit: str
    start: datetime
    step_seconds: int
    values: tuple[float | None, ...]

    def __post_init__(self):
        if self.step_seconds <= 0:
            raise ValueError("step must be positive")
        if self.start.tzinfo is None:
            raise ValueError("series start must be timezone-aware")

    @property
    def step(self) -> timedelta:
        return timedelta(seconds=self.step_seconds)

    @property
    def timestamps(self) -> list[datetime]:
        return [self.start + i * self.step for i in range(len(self.values))]

    @property
    def end(self) -> datetime:
        return self.start + (len(self.values) - 1) * self.step


@dataclass(frozen=True)
class SeriesSet:
    series: tuple[Series, ...]


@dataclass(frozen=True)
class Records:
    rows: tuple[dict, ...]
    primary_time: datetime | None = None
    label: str = ""


@dataclass(frozen=True)
class Verdict:
    value: bool
    explanation: str


@dataclass(frozen=True)
class Text:
    text: str


OutputValue = Union[GpsPoints, SeriesSet, Records, Verdict, Text]


def is_empty(output: OutputValue | None) -> bool:
    if output is None:
        return True
    if isinstance(output, GpsPoints):
        return not output.points
    if isinstance(output, SeriesSet):
        return not output.series
    if isinstance(output, Records):
        return not output.rows
    if isinstance(output, Text):
        return not output.text
    return False


def _num(v: Any) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _scalar(v: Any) -> str:
    if isinstance(v, datetime):
        return v.isoformat()
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if isinstance(v, (int, float)) or v is None:
        return _num(v)
    return str(v)


def render_output(output: OutputValue | None) -> str:
    """One deterministic human-readable line (or block) per output."""
    if is_empty(output):
        return "no result"
    if isinstance(output, GpsPoints):
        names = output.names or tuple("" for _ in output.points)
        parts = []
        for name, (lat, lon) in zip(names, output.points):
            coords = f"({lat:.5f}, {lon:.5f})"
            parts.append(f"{name} {coords}" if name else coords)
        return "; ".join(parts)
    if isinstance(output, SeriesSet):
        blocks = []
        for s in output.series:
            points = ", ".join(f"{t.isoformat()}={_num(v)}" for t, v in zip(s.timestamps, s.values))
            blocks.append(f"{s.label} [{s.unit}]: {points}")
        return "\n".join(blocks)
    if isinstance(output, Records):
        rows = ["; ".join(f"{k}={_scalar(v)}" for k, v in row.items()) for row in output.rows]
        head = f"{output.label}: " if output.label else ""
        return head + " | ".join(rows)
    if isinstance(output, Verdict):
        return f"{'yes' if output.value else 'no'}: {output.explanation}"
    return output.text


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)  # "inf", "-inf", "nan": keeps the JSON strict
    if isinstance(v, datetime):
        return v.isoformat()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def output_to_jsonable(output: OutputValue | None) -> dict | None:
    if output is None:
        return None
    if isinstance(output, GpsPoints):
        return {"kind": "gps", "points": [list(p) for p in output.points], "names": list(output.names)}
    if isinstance(output, SeriesSet):
        return {
            "kind": "series",
            "series": [
                {
                    "label": s.label,
                    "unit": s.unit,
                    "start": s.start.isoformat(),
                    "step_seconds": s.step_seconds,
                    "values": _jsonable(list(s.values)),
                }
                for s in output.series
            ],
        }
    if isinstance(output, Records):
        return {
            "kind": "records",
            "label": output.label,
            "primary_time": _jsonable(output.primary_time),
            "rows": _jsonable(list(output.rows)),
        }
    if isinstance(output, Verdict):
        return {"kind": "verdict", "value": output.value, "explanation": output.explanation}
    return {"kind": "text", "text": output.text}
