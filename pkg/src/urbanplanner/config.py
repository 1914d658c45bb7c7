"""Run configuration: a TOML file, overridden by explicit values (flags > file > defaults).

Example ``urbanplanner.toml``::

    backend = "replay"            # replay | http
    replay = ["recorded.jsonl"]   # replay stores; the bundled planner store when omitted
    model = "default"             # model name sent to the http backend
    registry = "zoo.json"         # model cards; the bundled zoo when omitted
    fixtures = "fixtures"         # fixture directory; the bundled fixtures when omitted
    templates = "templates"       # prompt template directory; the bundled one when omitted
    ablate = ["cu"]               # prompt components to leave out: sf, tu, cu
    mode = "serial"               # serial | parallel
    workers = 0                   # parallel worker budget; 0 picks one from the plan
    strict_args = false
    matching = "llm"              # llm (with deterministic fallback) | fallback
    synthesis = "template"        # template | llm
    port = 8080

    [adapters]                    # baseline constants
    period = 24
    speed_kmh = 40.0

Relative paths resolve against the directory holding the file.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .adapters.toolkit import AdapterSettings
from .prompts import parse_ablation

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BACKENDS = ("replay", "http")
PATH_KEYS = ("registry", "fixtures", "templates")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config {key}: {message}")
        self.key = key


def bundled_replay() -> Path:
    return Path(str(resources.files("urbanplanner.data").joinpath("replay", "planner.jsonl")))


@dataclass(frozen=True)
class Config:
    backend: str = "replay"
    replay: tuple[Path, ...] = ()
    model: str = "default"
    registry: Path | None = None
    fixtures: Path | None = None
    templates: Path | None = None
    ablate: frozenset[str] = frozenset()
    mode: str = "serial"
    workers: int = 0
    strict_args: bool = False
    matching: str = "llm"
    synthesis: str = "template"
    port: int = 8080
    adapters: AdapterSettings = field(default_factory=AdapterSettings)

    def replay_paths(self) -> tuple[Path, ...]:
        return self.replay or (bundled_replay(),)

    def check(self) -> "Config":
        """Fail fast, naming the offending key."""
        if self.backend not in BACKENDS:
            raise ConfigError("backend", f"expected one of {BACKENDS}, got {self.backend!r}")
        if self.mode not in ("serial", "parallel"):
            raise ConfigError("mode", f"expected serial or parallel, got {self.mode!r}")
        if self.matching not in ("llm", "fallback"):
            raise ConfigError("matching", f"expected llm or fallback, got {self.matching!r}")
        if self.synthesis not in ("template", "llm"):
            raise ConfigError("synthesis", f"expected template or llm, got {self.synthesis!r}")
        if self.workers < 0:
            raise ConfigError("workers", "must be >= 0")
        if not 0 < self.port < 65536:
            raise ConfigError("port", f"out of range: {self.port}")
        if self.backend == "replay":
            for p in self.replay_paths():
                if not p.is_file():
                    raise ConfigError("replay", f"file not found: {p}")
        if self.registry is not None and not self.registry.is_file():
            raise ConfigError("registry", f"file not found: {self.registry}")
        for key in ("fixtures", "templates"):
            p = getattr(self, key)
            if p is not None and not p.is_dir():
                raise ConfigError(key, f"directory not found: {p}")
        return self


def _coerce(raw: Mapping[str, Any], base: Path) -> dict:
    known = {f.name for f in fields(Config)}
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(key, "unknown key")
        if key in PATH_KEYS:
            value = base / Path(value)
        elif key == "replay":
            items = [value] if isinstance(value, (str, Path)) else list(value)
            value = tuple(base / Path(v) for v in items)
        elif key == "ablate":
            try:
                value = parse_ablation(value)
            except ValueError as exc:
                raise ConfigError("ablate", str(exc)) from None
        elif key == "adapters":
            if isinstance(value, AdapterSettings):
                pass
            else:
                allowed = {f.name for f in fields(AdapterSettings)}
                bad = sorted(set(value) - allowed)
                if bad:
                    raise ConfigError("adapters", f"unknown setting(s) {bad}")
                value = replace(AdapterSettings(), **value)
        elif key in ("workers", "port"):
            value = int(value)
        elif key == "strict_args":
            value = bool(value)
        out[key] = value
    return out


def load_config(path: str | Path | None = None, **overrides) -> Config:
    """Defaults, then the file (if any), then non-None ``overrides``; validated."""
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        try:
            raw = tomllib.loads(path.read_text("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"{path}: {exc}") from None
        values.update(_coerce(raw, path.parent))
    values.update(_coerce(overrides, Path.cwd()))
    return Config(**values).check()
