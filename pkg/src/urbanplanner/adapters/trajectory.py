"""Trajectory gap filling and constant-velocity extrapolation.

A fix is ``(time, lat, lon)`` with ``lat``/``lon`` set to ``None`` for a missing fix.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta
from typing import Sequence

from .errors import BadArgument, FewerThanTwoFixes

Fix = tuple[datetime, float | None, float | None]

MAX_PREDICTED = 10_000


def _known(fixes: Sequence[Fix]) -> list[int]:
    return [i for i, (_, lat, lon) in enumerate(fixes) if lat is not None and lon is not None]


def complete(fixes: Sequence[Fix]) -> list[Fix]:
    known = _known(fixes)
    if len(known) < 2:
        raise FewerThanTwoFixes(f"need two located fixes, got {len(known)}")
    out = []
    for i, (t, lat, lon) in enumerate(fixes):
        if lat is not None and lon is not None:
            out.append((t, lat, lon))
            continue
        before = [k for k in known if k < i]
        after = [k for k in known if k > i]
        if not before or not after:
            # Edge gaps hold the nearest located fix.
            k = after[0] if not before else before[-1]
            out.append((t, fixes[k][1], fixes[k][2]))
            continue
        a, b = fixes[before[-1]], fixes[after[0]]
        span = (b[0] - a[0]).total_seconds()
        w = 0.0 if span == 0 else (t - a[0]).total_seconds() / span
        out.append((t, a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])))
    return out


def predict(fixes: Sequence[Fix], horizon_s: float | None = None) -> list[Fix]:
    """Extend the line through the last two located fixes, one step per sampling interval."""
    known = _known(fixes)
    if len(known) < 2:
        raise FewerThanTwoFixes(f"need two located fixes, got {len(known)}")
    (t0, la0, lo0), (t1, la1, lo1) = fixes[known[-2]], fixes[known[-1]]
    dt = (t1 - t0).total_seconds()
    if dt <= 0:
        raise BadArgument("the last two located fixes are not in time order")
    steps = 1 if not horizon_s else max(1, math.ceil(horizon_s / dt))
    if steps > MAX_PREDICTED:
        raise BadArgument(f"horizon needs {steps} steps; at most {MAX_PREDICTED} are produced")
    vlat, vlon = (la1 - la0) / dt, (lo1 - lo0) / dt
    out = []
    for k in range(1, steps + 1):
        s = k * dt
        out.append((t1 + timedelta(seconds=s), la1 + vlat * s, lo1 + vlon * s))
    return out
