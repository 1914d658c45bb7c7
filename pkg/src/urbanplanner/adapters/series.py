"""Baseline series models: seasonal-naive forecast, linear imputation, rolling z-score
anomalies and a homogeneous-rate event model."""

from __future__ import annotations

import math
from dataclasses import replace
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

from ..outputs import Series
from ..plan import TimeSpec
from .errors import AllMissing, BadArgument, EmptyHistory, HorizonExceedsGuard, SeriesTooShort

PERIOD = 24
WINDOW = 24
Z_THRESHOLD = 3.0


def resolve_time(value, now: datetime) -> datetime:
    """Turn a ``time`` argument into an absolute instant.

    Clock times name the next occurrence strictly after ``now``; a resolved
    resource time arrives as a datetime already.
    """
    if value is None or value == 0:
        return now
    if isinstance(value, datetime):
        return value
    if isinstance(value, str):
        parsed = TimeSpec.parse(value)
        if parsed is None:
            raise BadArgument(f"cannot read {value!r} as a time")
        value = parsed
    if not isinstance(value, TimeSpec):
        raise BadArgument(f"cannot read {value!r} as a time")
    if value.kind == "now":
        return now
    if value.kind == "relative":
        return now + timedelta(seconds=value.seconds)
    if value.kind == "clock":
        target = now.replace(hour=value.hour24, minute=value.minute, second=0, microsecond=0)
        if target <= now:
            target += timedelta(days=1)
        return target
    raise BadArgument(f"time {value} must be resolved before the adapter runs")


def horizon_seconds(value, now: datetime) -> float:
    return max(0.0, (resolve_time(value, now) - now).total_seconds())


def horizon_steps(series: Series, until: datetime) -> int:
    """Steps past the last observation needed to reach ``until`` (at least one)."""
    gap = (until - series.end).total_seconds()
    return max(1, math.ceil(gap / series.step_seconds))


def seasonal_naive(history: Sequence[float], steps: int, period: int = PERIOD) -> list[float]:
    n = len(history)
    if n < period:
        raise SeriesTooShort(f"need at least {period} observations, got {n}")
    base = list(history[n - period :])
    return [base[k % period] for k in range(steps)]


def interpolate(values: Sequence[float | None]) -> list[float]:
    known = [i for i, v in enumerate(values) if v is not None]
    if not known:
        raise AllMissing("every value in the series is missing")
    idx = np.arange(len(values), dtype=float)
    filled = np.interp(idx, np.array(known, dtype=float), np.array([values[i] for i in known], dtype=float))
    return [float(v) for v in filled]


def impute(series: Series) -> Series:
    return replace(series, values=tuple(interpolate(series.values)))


def forecast(
    series: Series,
    until: datetime,
    long: bool = False,
    period: int = PERIOD,
) -> Series:
    steps = horizon_steps(series, until)
    limit = period * (56 if long else 2)
    if steps > limit:
        kind = "long" if long else "short"
        raise HorizonExceedsGuard(f"{steps} steps exceeds the {kind}-horizon limit of {limit}")
    history = series.values
    if any(v is None for v in history[-period:]):
        history = interpolate(history)
    values = seasonal_naive(history, steps, period)
    return Series(
        label=f"forecast {series.label}",
        unit=series.unit,
        start=series.end + series.step,
        step_seconds=series.step_seconds,
        values=tuple(values),
    )


def anomaly_scores(
    values: Sequence[float], window: int = WINDOW, threshold: float = Z_THRESHOLD
) -> list[tuple[int, float]]:
    """(index, z) for every flagged point. Each point is scored against the
    ``window`` values before it; a flat window flags any deviation with z = ±inf."""
    if len(values) < window:
        raise SeriesTooShort(f"need at least {window} observations, got {len(values)}")
    x = np.asarray(values, dtype=float)
    flagged = []
    for t in range(window, len(x)):
        ref = x[t - window : t]
        mu, sd = ref.mean(), ref.std()
        diff = x[t] - mu
        if sd == 0.0:
            if diff != 0.0:
                flagged.append((t, math.copysign(math.inf, diff)))
            continue
        z = diff / sd
        if abs(z) > threshold:
            flagged.append((t, float(z)))
    return flagged


def event_rate(times: Sequence[datetime], start: datetime, end: datetime) -> float:
    """Events per second over the history window."""
    elapsed = (end - start).total_seconds()
    if elapsed <= 0:
        raise EmptyHistory("event history window has no duration")
    return sum(start <= t <= end for t in times) / elapsed
