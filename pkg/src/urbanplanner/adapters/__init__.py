"""Deterministic desk-scale stand-ins for the model zoo, backed by JSON fixtures."""

from .errors import (
    AdapterError,
    AllMissing,
    BadArgument,
    EmptyHistory,
    FewerThanTwoFixes,
    FewerThanTwoPoints,
    FixtureMissing,
    HorizonExceedsGuard,
    MissingDeparture,
    NameNotFound,
    NoMatch,
    SeriesTooShort,
    UnknownService,
    UnknownStop,
)
from .fixtures import Fixtures, bundled_fixture_dir, default_fixtures
from .geo import EARTH_RADIUS_M, Gazetteer, Place, haversine_m
from .toolkit import AdapterSettings, Toolkit, stub_toolkit

__all__ = [
    "AdapterError",
    "AllMissing",
    "BadArgument",
    "EmptyHistory",
    "FewerThanTwoFixes",
    "FewerThanTwoPoints",
    "FixtureMissing",
    "HorizonExceedsGuard",
    "MissingDeparture",
    "NameNotFound",
    "NoMatch",
    "SeriesTooShort",
    "UnknownService",
    "UnknownStop",
    "Fixtures",
    "bundled_fixture_dir",
    "default_fixtures",
    "EARTH_RADIUS_M",
    "Gazetteer",
    "Place",
    "haversine_m",
    "AdapterSettings",
    "Toolkit",
    "stub_toolkit",
]
