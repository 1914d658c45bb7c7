"""Dispatch from (task type, resolved args) to the baseline adapters over fixtures."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Callable, Mapping

from ..outputs import GpsPoints, OutputValue, Records, SeriesSet
from ..plan import TaskType
from . import geo, series as ts, trajectory, transit
from .errors import AdapterError, BadArgument, FixtureMissing
from .fixtures import Fixtures, SeriesFixture

Adapter = Callable[[TaskType, Mapping], OutputValue]


@dataclass(frozen=True)
class AdapterSettings:
    period: int = ts.PERIOD
    window: int = ts.WINDOW
    z_threshold: float = ts.Z_THRESHOLD
    speed_kmh: float = transit.SPEED_KMH
    same_place_m: float = 150.0
    top_k: int = 5
    taxi_radius_m: float = 1000.0
    event_radius_m: float = 5000.0
    event_horizon_s: float = 86400.0


def _points(args: Mapping) -> tuple[list[tuple[float, float]], tuple[str, ...]]:
    value = args.get("location_gps_list")
    if value is None:
        return [], ()
    if isinstance(value, GpsPoints):
        return [tuple(p) for p in value.points], value.names
    try:
        return [geo.check_point(p) for p in value], ()
    except (TypeError, ValueError, IndexError) as exc:
        raise BadArgument(f"location_gps_list is not a list of (lat, lon) points: {value!r}") from exc


def _first_text(value) -> str | None:
    if isinstance(value, (list, tuple)):
        value = value[0] if value else None
    return None if value is None else str(value)


def _domain(args: Mapping, default: str | None = None) -> str:
    d = _first_text(args.get("domain")) or default
    if not d:
        raise BadArgument("a domain is required")
    return d


class Toolkit:
    """All thirteen task types over one fixture set. Stateless, so thread-safe."""

    def __init__(self, fixtures: Fixtures, settings: AdapterSettings | None = None):
        self.fixtures = fixtures
        self.settings = settings or AdapterSettings()
        self._handlers: dict[TaskType, Callable[[Mapping], OutputValue]] = {
            TaskType.LONG_TIME_SERIES_PREDICTION: lambda a: self.forecast(a, long=True),
            TaskType.TIME_SERIES_PREDICTION: self.forecast,
            TaskType.EVENT_PREDICTION: self.event_prediction,
            TaskType.TRAJECTORY_COMPLETION: self.trajectory_completion,
            TaskType.TRAJECTORY_PREDICTION: self.trajectory_prediction,
            TaskType.TIME_SERIES_ANOMALY_DETECTION: self.anomaly_detection,
            TaskType.TIME_SERIES_IMPUTATION: self.imputation,
            TaskType.ARRIVAL_TIME_ESTIMATION: self.arrival_time_estimation,
            TaskType.TAXI_AVAILABILITY: self.taxi_availability,
            TaskType.MAP_MAPPING: self.map_mapping,
            TaskType.BUS_ARRIVAL: self.bus_arrival,
            TaskType.SPATIAL_RELATIONSHIP_INFER: self.spatial_relationship_infer,
            TaskType.RECOMMENDATION: self.recommendation,
        }

    @property
    def now(self) -> datetime:
        return self.fixtures.now

    def __call__(self, task: TaskType, args: Mapping) -> OutputValue:
        return self._handlers[task](args)

    def adapters(self, registry) -> dict[int, Adapter]:
        """One adapter per model card with a ``stub:`` binding; real bindings are skipped."""
        out = {}
        for card in registry:
            if card.adapter_binding.startswith("stub:"):
                out[card.model_id] = self._bound(card)
        return out

    def _bound(self, card) -> Adapter:
        def run(task: TaskType, args: Mapping) -> OutputValue:
            if task not in card.task_types:
                raise AdapterError(f"model {card.model_id} ({card.model_name}) does not serve {task.value}")
            return self(task, args)

        return run

    # -- series -------------------------------------------------------------------

    def _select(self, data: SeriesFixture, points) -> list:
        if not points:
            return sorted(data.locations, key=lambda l: l.name)
        chosen = []
        for p in points:
            loc = min(data.locations, key=lambda l: (geo.haversine_m(p, l.gps), l.name))
            if loc not in chosen:
                chosen.append(loc)
        return chosen

    def forecast(self, args: Mapping, long: bool = False) -> SeriesSet:
        data = self.fixtures.series(_domain(args))
        points, _ = _points(args)
        until = ts.resolve_time(args.get("time"), self.now)
        return SeriesSet(
            tuple(ts.forecast(loc.series, until, long, self.settings.period) for loc in self._select(data, points))
        )

    def imputation(self, args: Mapping) -> SeriesSet:
        data = self.fixtures.series(_domain(args))
        points, _ = _points(args)
        return SeriesSet(tuple(ts.impute(loc.series) for loc in self._select(data, points)))

    def anomaly_detection(self, args: Mapping) -> Records:
        data = self.fixtures.series(_domain(args))
        points, _ = _points(args)
        rows = []
        for loc in self._select(data, points):
            values = ts.interpolate(loc.series.values)
            stamps = loc.series.timestamps
            for i, z in ts.anomaly_scores(values, self.settings.window, self.settings.z_threshold):
                rows.append({"location": loc.name, "timestamp": stamps[i], "value": values[i], "z": z})
        return Records(tuple(rows), label=f"{data.dataset} anomalies")

    def event_prediction(self, args: Mapping) -> Records:
        domain = _domain(args)
        data = self.fixtures.events(domain)
        points, _ = _points(args)
        events = data.events
        if points:
            r = self.settings.event_radius_m
            events = tuple(e for e in events if any(geo.haversine_m(p, e[1]) < r for p in points))
        rate = ts.event_rate([t for t, _ in events], data.start, data.end)
        horizon = ts.horizon_seconds(args.get("time"), self.now) if args.get("time") is not None else 0.0
        horizon = horizon or self.settings.event_horizon_s
        row = {
            "domain": data.dataset,
            "events_in_history": sum(data.start <= t <= data.end for t, _ in events),
            "history_days": (data.end - data.start).total_seconds() / 86400,
            "rate_per_day": rate * 86400,
            "horizon_hours": horizon / 3600,
            "expected_count": rate * horizon,
        }
        return Records((row,), primary_time=self.now + timedelta(seconds=horizon), label="event forecast")

    # -- trajectories -------------------------------------------------------------

    @staticmethod
    def _fix_rows(fixes, filled: set[int] = frozenset()) -> tuple[dict, ...]:
        return tuple(
            {"time": t, "gps": [lat, lon], "estimated": i in filled} for i, (t, lat, lon) in enumerate(fixes)
        )

    def trajectory_completion(self, args: Mapping) -> Records:
        fixes = self.fixtures.trajectory(_domain(args, "user trajectory"))
        done = trajectory.complete(fixes)
        filled = {i for i, f in enumerate(fixes) if f[1] is None or f[2] is None}
        return Records(self._fix_rows(done, filled), primary_time=done[-1][0], label="completed trajectory")

    def trajectory_prediction(self, args: Mapping) -> Records:
        fixes = self.fixtures.trajectory(_domain(args, "user trajectory"))
        t = args.get("time")
        horizon = None
        if t is not None:
            # Horizons are measured from the last recorded fix.
            horizon = (ts.resolve_time(t, self.now) - self.now).total_seconds() or None
        pred = trajectory.predict(fixes, horizon)
        return Records(
            self._fix_rows(pred, set(range(len(pred)))), primary_time=pred[-1][0], label="predicted trajectory"
        )

    # -- vehicles -----------------------------------------------------------------

    def arrival_time_estimation(self, args: Mapping) -> Records:
        points, names = _points(args)
        if len(points) < 2:
            raise BadArgument("arrival time needs a destination and an origin point")
        names = names or ("destination", "origin")
        departure = ts.resolve_time(args.get("time"), self.now)
        arrival, dist = transit.arrival_time(points[1], points[0], departure, self.settings.speed_kmh)
        row = {
            "origin": names[1],
            "destination": names[0],
            "departure": departure,
            "arrival": arrival,
            "distance_m": round(dist, 1),
            "minutes": round((arrival - departure).total_seconds() / 60, 1),
        }
        return Records((row,), primary_time=arrival, label="arrival estimate")

    def taxi_availability(self, args: Mapping) -> Records:
        points, _ = _points(args)
        if not points:
            raise BadArgument("taxi availability needs a location")
        radius = transit.parse_radius(args.get("task_specific"), self.settings.taxi_radius_m)
        hits = transit.within(self.fixtures.taxis, points[0], radius)
        hits.sort(key=lambda p: geo.haversine_m(points[0], p))
        row = {"count": len(hits), "radius_m": radius, "points": [list(p) for p in hits]}
        return Records((row,), primary_time=self.now, label="available taxis")

    def bus_arrival(self, args: Mapping) -> Records:
        stop, service = args.get("bus_stop"), args.get("service_no")
        if stop is None or service is None:
            raise BadArgument("bus_stop and service_no are required")
        stop, service = _first_text(stop), _first_text(service)
        found = transit.bus_arrivals(self.fixtures.timetable, stop, service, args.get("task_specific"), self.now)
        rows = tuple(
            {
                "service": a.service,
                "stop": a.stop,
                "arrival": a.time,
                "minutes_away": round((a.time - self.now).total_seconds() / 60, 1),
                "load": a.load,
            }
            for a in found
        )
        return Records(rows, primary_time=found[0].time if found else None, label=f"bus {service} at {stop}")

    # -- places -------------------------------------------------------------------

    def map_mapping(self, args: Mapping) -> GpsPoints:
        gaz = self.fixtures.gazetteer
        names = args.get("location_name_list")
        if names is not None:
            if isinstance(names, str):
                names = (names,)
            places = [gaz.lookup(str(n)) for n in names]
            return GpsPoints(tuple(p.gps for p in places), tuple(str(n) for n in names))
        points, _ = _points(args)
        if not points:
            raise BadArgument("map_mapping needs location_name_list or location_gps_list")
        return GpsPoints(tuple(points), tuple(gaz.nearest(p).name for p in points))

    def spatial_relationship_infer(self, args: Mapping) -> Records:
        points, names = _points(args)
        rows = geo.pairwise(points, names, self.settings.same_place_m)
        return Records(tuple(rows), label="pairwise distances")

    def recommendation(self, args: Mapping) -> Records:
        category = _first_text(args.get("task_specific"))
        if not category:
            raise BadArgument("recommendation needs a category in task_specific")
        points, _ = _points(args)
        ranked = geo.recommend(self.fixtures.gazetteer, category, points[0] if points else None, self.settings.top_k)
        rows = tuple(
            {"name": p.name, "category": p.category, "gps": list(p.gps), "distance_m": None if d is None else round(d, 1)}
            for p, d in ranked
        )
        return Records(rows, label=f"{category} recommendations")


def stub_toolkit(fixtures: Fixtures | None = None, settings: AdapterSettings | None = None) -> Toolkit:
    from .fixtures import default_fixtures

    return Toolkit(fixtures or default_fixtures(), settings)


__all__ = ["AdapterSettings", "Toolkit", "stub_toolkit", "FixtureMissing"]
