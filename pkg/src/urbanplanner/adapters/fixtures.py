"""Read-only urban data fixtures loaded from a directory.

Layout::

    clock.json                 {"now": ISO-8601}  reference "now" for the fixtures
    gazetteer.json             {"entries": [{name, category, gps}], "category_aliases": {...}}
    series/<domain>.json       {dataset, unit, step_seconds, locations: [{name, gps, start, values}]}
    events/<domain>.json       {dataset, window: {start, end}, events: [{time, gps}]}
    trajectories/<domain>.json {dataset, fixes: [{time, gps: [lat, lon] | [null, null]}]}
    taxis.json                 {snapshot, points: [[lat, lon], ...]}
    bus_timetable.json         {stops: {code: {name, services: {no: [{time, load}]}}}}

Domain names map to file stems by lower-casing and joining words with ``_``
("traffic speed" -> ``traffic_speed.json``). Everything is loaded eagerly, so a
:class:`Fixtures` instance is immutable and safe to share between threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path

from ..outputs import Series
from .errors import FixtureMissing
from .geo import Gazetteer, check_point
from .trajectory import Fix
from .transit import Timetable


def domain_key(domain: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", domain.strip().lower()).strip("_")


@dataclass(frozen=True)
class SeriesLocation:
    name: str
    gps: tuple[float, float]
    series: Series


@dataclass(frozen=True)
class SeriesFixture:
    dataset: str
    unit: str
    locations: tuple[SeriesLocation, ...]

    @classmethod
    def from_jsonable(cls, raw: dict) -> "SeriesFixture":
        step = int(raw["step_seconds"])
        locs = []
        for loc in raw["locations"]:
            series = Series(
                label=f"{raw['dataset']} @ {loc['name']}",
                unit=raw["unit"],
                start=datetime.fromisoformat(loc["start"]),
                step_seconds=step,
                values=tuple(None if v is None else float(v) for v in loc["values"]),
            )
            locs.append(SeriesLocation(loc["name"], check_point(loc["gps"]), series))
        names = [l.name for l in locs]
        if len(set(names)) != len(names):
            raise ValueError(f"{raw['dataset']}: duplicate location names")
        return cls(raw["dataset"], raw["unit"], tuple(locs))


@dataclass(frozen=True)
class EventFixture:
    dataset: str
    start: datetime
    end: datetime
    events: tuple[tuple[datetime, tuple[float, float]], ...]

    @classmethod
    def from_jsonable(cls, raw: dict) -> "EventFixture":
        events = tuple(
            sorted((datetime.fromisoformat(e["time"]), check_point(e["gps"])) for e in raw["events"])
        )
        w = raw["window"]
        return cls(raw["dataset"], datetime.fromisoformat(w["start"]), datetime.fromisoformat(w["end"]), events)


def _fixes(raw: dict) -> tuple[Fix, ...]:
    out = []
    for f in raw["fixes"]:
        lat, lon = f["gps"]
        out.append((datetime.fromisoformat(f["time"]), lat, lon))
    times = [f[0] for f in out]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError(f"{raw.get('dataset', 'trajectory')}: fix times must strictly increase")
    return tuple(out)


def _read(path: Path):
    return json.loads(path.read_text("utf-8"))


def _by_stem(directory: Path, parse) -> dict:
    if not directory.is_dir():
        return {}
    return {domain_key(p.stem): parse(_read(p)) for p in sorted(directory.glob("*.json"))}


class Fixtures:
    def __init__(self, root: str | Path, now: datetime | None = None):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FixtureMissing(f"fixture directory not found: {self.root}")
        clock = self.root / "clock.json"
        if now is None:
            if not clock.is_file():
                raise FixtureMissing(f"{clock} is missing and no reference time was given")
            now = datetime.fromisoformat(_read(clock)["now"])
        if now.tzinfo is None:
            raise ValueError("the reference time must be timezone-aware")
        self.now = now
        gaz = self.root / "gazetteer.json"
        self._gazetteer = Gazetteer.load(gaz) if gaz.is_file() else None
        self._series = _by_stem(self.root / "series", SeriesFixture.from_jsonable)
        self._events = _by_stem(self.root / "events", EventFixture.from_jsonable)
        self._trajectories = _by_stem(self.root / "trajectories", _fixes)
        taxis = self.root / "taxis.json"
        self._taxis = tuple(check_point(p) for p in _read(taxis)["points"]) if taxis.is_file() else None
        bus = self.root / "bus_timetable.json"
        self._timetable = Timetable.from_jsonable(_read(bus)) if bus.is_file() else None

    def _need(self, value, what: str):
        if value is None:
            raise FixtureMissing(f"no {what} fixture under {self.root}")
        return value

    @property
    def gazetteer(self) -> Gazetteer:
        return self._need(self._gazetteer, "gazetteer.json")

    @property
    def taxis(self) -> tuple[tuple[float, float], ...]:
        return self._need(self._taxis, "taxis.json")

    @property
    def timetable(self) -> Timetable:
        return self._need(self._timetable, "bus_timetable.json")

    def series(self, domain: str) -> SeriesFixture:
        return self._need(self._series.get(domain_key(domain)), f"series/{domain_key(domain)}.json")

    def events(self, domain: str) -> EventFixture:
        return self._need(self._events.get(domain_key(domain)), f"events/{domain_key(domain)}.json")

    def trajectory(self, domain: str) -> tuple[Fix, ...]:
        return self._need(
            self._trajectories.get(domain_key(domain)), f"trajectories/{domain_key(domain)}.json"
        )

    @property
    def domains(self) -> dict[str, list[str]]:
        return {
            "series": sorted(self._series),
            "events": sorted(self._events),
            "trajectories": sorted(self._trajectories),
        }


def bundled_fixture_dir() -> Path:
    return Path(str(resources.files("urbanplanner.data").joinpath("fixtures")))


def default_fixtures() -> Fixtures:
    return Fixtures(bundled_fixture_dir())
