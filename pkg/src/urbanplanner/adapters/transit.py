"""Vehicle-side adapters: arrival time, taxi counts and bus timetables."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence

from .errors import BadArgument, MissingDeparture, UnknownService, UnknownStop
from .geo import haversine_m

SPEED_KMH = 40.0


def arrival_time(
    origin: Sequence[float],
    destination: Sequence[float],
    departure: datetime | None,
    speed_kmh: float = SPEED_KMH,
) -> tuple[datetime, float]:
    """(arrival, distance in metres) at a constant ground speed."""
    if departure is None:
        raise MissingDeparture("a departure time is required")
    if speed_kmh <= 0:
        raise BadArgument("speed must be positive")
    dist = haversine_m(origin, destination)
    return departure + timedelta(seconds=dist / (speed_kmh / 3.6)), dist


_RADIUS_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(km|m)?\s*$", re.I)


def parse_radius(value, default_m: float) -> float:
    """'2km' -> 2000.0; a bare number is metres; lists use their first item."""
    if isinstance(value, (list, tuple)):
        value = value[0] if value else None
    if value is None:
        return default_m
    if isinstance(value, (int, float)):
        return float(value)
    m = _RADIUS_RE.match(str(value))
    if not m:
        raise BadArgument(f"cannot read {value!r} as a radius")
    return float(m.group(1)) * (1000.0 if (m.group(2) or "m").lower() == "km" else 1.0)


def within(points: Sequence[Sequence[float]], center: Sequence[float], radius_m: float) -> list[tuple[float, float]]:
    return [tuple(p) for p in points if haversine_m(center, p) < radius_m]


@dataclass(frozen=True)
class Arrival:
    service: str
    stop: str
    time: datetime
    load: str


class Timetable:
    def __init__(self, stops: dict):
        self.stops = stops

    @classmethod
    def from_jsonable(cls, raw: dict) -> "Timetable":
        stops = {}
        for code, stop in raw["stops"].items():
            services = {}
            for svc, rows in stop["services"].items():
                times = [(datetime.fromisoformat(r["time"]), r.get("load", "")) for r in rows]
                services[str(svc)] = sorted(times)
            stops[str(code)] = {"name": stop.get("name", ""), "services": services}
        return cls(stops)

    def arrivals(self, stop: str, service: str) -> list[Arrival]:
        stop, service = str(stop).strip(), str(service).strip()
        if stop not in self.stops:
            raise UnknownStop(f"unknown bus stop {stop!r}")
        services = self.stops[stop]["services"]
        if service not in services:
            raise UnknownService(f"service {service!r} does not call at stop {stop}")
        return [Arrival(service, stop, t, load) for t, load in services[service]]


_WINDOW_RE = re.compile(r"next\s+(\d+)\s*(m|min|mins|minute|minutes|h|hr|hrs|hour|hours)\b", re.I)


def parse_window(spec) -> timedelta | None:
    """None for 'next' (first arrival only), else the look-ahead window."""
    if isinstance(spec, (list, tuple)):
        spec = spec[0] if spec else "next"
    text = str(spec or "next").strip()
    m = _WINDOW_RE.search(text)
    if m:
        n = int(m.group(1))
        return timedelta(hours=n) if m.group(2).lower().startswith("h") else timedelta(minutes=n)
    if text.lower() == "next":
        return None
    raise BadArgument(f"cannot read bus query {text!r}; use 'next' or 'next N mins'")


def bus_arrivals(table: Timetable, stop: str, service, spec, now: datetime) -> list[Arrival]:
    upcoming = [a for a in table.arrivals(stop, str(service)) if a.time > now]
    window = parse_window(spec)
    if window is None:
        return upcoming[:1]
    return [a for a in upcoming if a.time <= now + window]
