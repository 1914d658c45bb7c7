"""Great-circle geometry and the gazetteer used for place lookup and recommendation."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import FewerThanTwoPoints, NameNotFound, NoMatch

EARTH_RADIUS_M = 6_371_000.0

Point = tuple[float, float]


def haversine_m(a: Sequence[float], b: Sequence[float]) -> float:
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def check_point(p: Sequence[float]) -> Point:
    lat, lon = float(p[0]), float(p[1])
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise ValueError(f"coordinates out of range: ({lat}, {lon})")
    return (lat, lon)


_WORD_RE = re.compile(r"[a-z0-9]+")


def category_tokens(text: str) -> tuple[str, ...]:
    """'Japanese_restaurants' -> ('japanese', 'restaurant')."""
    out = []
    for tok in _WORD_RE.findall(text.lower().replace("_", " ")):
        if len(tok) > 3 and tok.endswith("s") and not tok.endswith("ss"):
            tok = tok[:-1]
        out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class Place:
    name: str
    category: str
    gps: Point


class Gazetteer:
    def __init__(self, entries: Iterable[Place], category_aliases: dict[str, str] | None = None):
        self.entries = tuple(entries)
        self._by_name: dict[str, Place] = {}
        for e in self.entries:
            check_point(e.gps)
            key = e.name.strip().casefold()
            if key in self._by_name:
                raise ValueError(f"duplicate gazetteer name: {e.name!r}")
            self._by_name[key] = e
        self.category_aliases = {
            category_tokens(k): category_tokens(v) for k, v in (category_aliases or {}).items()
        }

    @classmethod
    def from_jsonable(cls, raw: dict) -> "Gazetteer":
        entries = [Place(e["name"], e.get("category", ""), check_point(e["gps"])) for e in raw["entries"]]
        return cls(entries, raw.get("category_aliases"))

    @classmethod
    def load(cls, path: str | Path) -> "Gazetteer":
        return cls.from_jsonable(json.loads(Path(path).read_text("utf-8")))

    def lookup(self, name: str) -> Place:
        try:
            return self._by_name[name.strip().casefold()]
        except KeyError:
            raise NameNotFound(name) from None

    def nearest(self, point: Sequence[float]) -> Place:
        if not self.entries:
            raise NoMatch("gazetteer is empty")
        return min(self.entries, key=lambda e: (haversine_m(point, e.gps), e.name))

    def by_category(self, category: str) -> list[Place]:
        wanted = category_tokens(category)
        wanted = self.category_aliases.get(wanted, wanted)
        if not wanted:
            return []
        return [e for e in self.entries if set(wanted) <= set(category_tokens(e.category))]


def pairwise(points: Sequence[Point], names: Sequence[str] = (), same_place_m: float = 150.0) -> list[dict]:
    if len(points) < 2:
        raise FewerThanTwoPoints(f"need at least two points, got {len(points)}")
    labels = list(names) if names else [f"point {i}" for i in range(len(points))]
    rows = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = haversine_m(points[i], points[j])
            rows.append({"a": labels[i], "b": labels[j], "distance_m": round(d, 3), "same_place": d < same_place_m})
    return rows


def recommend(
    gazetteer: Gazetteer,
    category: str,
    center: Sequence[float] | None = None,
    top_k: int = 5,
) -> list[tuple[Place, float | None]]:
    hits = gazetteer.by_category(category)
    if not hits:
        raise NoMatch(f"nothing in the gazetteer matches category {category!r}")
    if center is None:
        ranked = [(e, None) for e in sorted(hits, key=lambda e: e.name.casefold())]
    else:
        ranked = sorted(((e, haversine_m(center, e.gps)) for e in hits), key=lambda x: (x[1], x[0].name))
    return ranked[:top_k]
