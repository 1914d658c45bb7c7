"""Reader for the relaxed plan dialect that language models emit.

The dialect is JSON with the edges sanded off: keys may be bare identifiers, strings
may use single or double quotes, values may be bare words (``history_steps``,
``2h``, ``<resource>-1``), and trailing commas are tolerated.  Parsing happens in two
passes: :class:`_Reader` turns text into plain Python values (keeping track of which
strings were quoted), then :func:`build_plan` shapes those values into a
:class:`~urbanplanner.plan.Plan`.
"""

from __future__ import annotations

import math
import re
from typing import Any

from .plan import (
    Plan,
    ResourceRef,
    TaskNode,
    TaskType,
    TimeSpec,
    UnknownTaskType,
    serialize_strict,
)

__all__ = [
    "PlanParseError",
    "PlanSyntaxError",
    "PlanStructureError",
    "UnknownTaskType",
    "NoPlanFound",
    "extract_plan_text",
    "parse_relaxed",
    "loads_relaxed",
    "serialize_strict",
]

MAX_DEPTH = 64
TASK_KEYS = ("task", "id", "dep", "args")

_DELIMS = set("[]{},:'\"")
_INT_RE = re.compile(r"^-?\d+$")
_FLOAT_RE = re.compile(r"^-?(\d+\.\d*|\.\d+|\d+(\.\d*)?[eE][+-]?\d+)$")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "/": "/", "\\": "\\", "'": "'", '"': '"'}


class PlanParseError(ValueError):
    """Base class for everything the parser can reject."""


class PlanSyntaxError(PlanParseError):
    def __init__(self, message: str, text: str, position: int, expected: frozenset[str] = frozenset()):
        self.position = position
        self.offset = len(text[:position].encode("utf-8", errors="surrogatepass"))
        self.expected = frozenset(expected)
        hint = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at byte {self.offset}{hint}")


class PlanStructureError(PlanParseError):
    """The text is well-formed but does not have the shape of a plan."""


class NoPlanFound(PlanParseError):
    pass


class Bare(str):
    """An unquoted word that is not a number."""


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, message: str, expected=()) -> PlanSyntaxError:
        return PlanSyntaxError(message, self.text, self.pos, frozenset(expected))

    def skip_ws(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def document(self) -> Any:
        value = self.value(0)
        if self.peek():
            raise self.fail("unexpected trailing text", {"end of input"})
        return value

    def value(self, depth: int) -> Any:
        if depth > MAX_DEPTH:
            raise self.fail("nesting too deep")
        ch = self.peek()
        if ch == "[":
            return self.array(depth)
        if ch == "{":
            return self.obj(depth)
        if ch in ("'", '"'):
            return self.string()
        if ch and ch not in _DELIMS:
            return self.bare(stop=",]}")
        raise self.fail("expected a value", {"[", "{", "string", "word"})

    def array(self, depth: int) -> list:
        self.pos += 1
        items = []
        while True:
            if self.peek() == "]":
                self.pos += 1
                return items
            items.append(self.value(depth + 1))
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch == "]":
                self.pos += 1
                return items
            else:
                raise self.fail("unterminated list", {",", "]"})

    def obj(self, depth: int) -> list[tuple[str, Any]]:
        # Pairs stay a list so duplicate keys can be reported later.
        self.pos += 1
        pairs: list[tuple[str, Any]] = []
        while True:
            ch = self.peek()
            if ch == "}":
                self.pos += 1
                return _Pairs(pairs)
            if ch in ("'", '"'):
                key = str(self.string())
            elif ch and ch not in _DELIMS:
                key = str(self.bare(stop=":,]}"))
            else:
                raise self.fail("expected a key", {"}", "string", "identifier"})
            if self.peek() != ":":
                raise self.fail("expected ':' after key", {":"})
            self.pos += 1
            pairs.append((key, self.value(depth + 1)))
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch != "}":
                raise self.fail("unterminated object", {",", "}"})

    def string(self) -> str:
        quote = self.text[self.pos]
        start = self.pos
        self.pos += 1
        out = []
        text, n = self.text, len(self.text)
        while self.pos < n:
            ch = text[self.pos]
            if ch == quote:
                self.pos += 1
                return "".join(out)
            if ch == "\\":
                if self.pos + 1 >= n:
                    break
                esc = text[self.pos + 1]
                if esc == "u":
                    digits = text[self.pos + 2 : self.pos + 6]
                    if not re.fullmatch(r"[0-9a-fA-F]{4}", digits):
                        raise self.fail("bad \\u escape", {"4 hex digits"})
                    out.append(chr(int(digits, 16)))
                    self.pos += 6
                    continue
                out.append(_ESCAPES.get(esc, esc))
                self.pos += 2
                continue
            out.append(ch)
            self.pos += 1
        self.pos = start
        raise self.fail("unterminated string", {quote})

    def bare(self, stop: str) -> Any:
        text, n = self.text, len(self.text)
        start = self.pos
        while self.pos < n:
            ch = text[self.pos]
            if ch.isspace() or ch in stop or ch in "[{'\"":
                break
            self.pos += 1
        word = text[start : self.pos]
        if not word:
            raise self.fail("expected a word", {"word"})
        if _INT_RE.match(word):
            return int(word)
        if _FLOAT_RE.match(word):
            number = float(word)
            if math.isfinite(number):
                return number
        return Bare(word)


class _Pairs(list):
    """Key/value pairs of a parsed object, in source order."""


def loads_relaxed(text: str) -> Any:
    """Parse relaxed-dialect text into lists, dicts, strings and numbers."""
    return _plain(_Reader(text).document())


def _plain(value: Any) -> Any:
    if isinstance(value, _Pairs):
        return {k: _plain(v) for k, v in value}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, Bare):
        return str(value)
    return value


# -- shaping values into a plan -----------------------------------------------------


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise PlanStructureError(f"{where}: expected an integer, got {value!r}")
    if isinstance(value, str):
        if not _INT_RE.match(value.strip()):
            raise PlanStructureError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    return value


def _arg_value(key: str, raw: Any, where: str) -> Any:
    if isinstance(raw, _Pairs):
        raise PlanStructureError(f"{where}.{key}: object values are not supported")
    if isinstance(raw, list):
        return tuple(_arg_value(key, item, where) for item in raw)
    if isinstance(raw, str):
        ref = ResourceRef.parse(raw)
        if key == "time":
            spec = TimeSpec.parse(raw)
            if spec is not None:
                return spec
        if ref is not None:
            return ref
        return str(raw)
    if key == "time" and raw == 0 and isinstance(raw, int):
        return TimeSpec.now()
    return raw


def _task_node(raw: Any, index: int) -> TaskNode:
    where = f"task[{index}]"
    if not isinstance(raw, _Pairs):
        raise PlanStructureError(f"{where}: expected an object, got {type(raw).__name__}")
    fields: dict[str, Any] = {}
    extra: list[tuple[str, Any]] = []
    for key, value in raw:
        if key in TASK_KEYS:
            if key in fields:
                raise PlanStructureError(f"{where}: duplicate key {key!r}")
            fields[key] = value
        else:
            extra.append((key, value))
    for key in ("task", "id"):
        if key not in fields:
            raise PlanStructureError(f"{where}: missing {key!r}")

    name = fields["task"]
    if not isinstance(name, str):
        raise PlanStructureError(f"{where}.task: expected a name, got {name!r}")
    task = TaskType.lookup(name)
    task_id = _as_int(fields["id"], f"{where}.id")

    dep_raw = fields.get("dep", [-1])
    if not isinstance(dep_raw, list):
        dep_raw = [dep_raw]
    dep = tuple(_as_int(d, f"{where}.dep") for d in dep_raw)

    args_raw = fields.get("args", _Pairs())
    if not isinstance(args_raw, _Pairs):
        raise PlanStructureError(f"{where}.args: expected an object")
    args: dict[str, Any] = {}
    # Task-level keys other than task/id/dep belong to args (misplaced closing brace).
    for key, value in [*args_raw, *extra]:
        if key in args:
            raise PlanStructureError(f"{where}.args: duplicate argument {key!r}")
        args[key] = _arg_value(key, value, f"{where}.args")
    return TaskNode(task, task_id, dep, args)


def _as_pairs(value: Any) -> Any:
    # Plain JSON (dicts) arrives from files; the shaper works on ordered pairs.
    if isinstance(value, _Pairs):
        return value
    if isinstance(value, dict):
        return _Pairs((str(k), _as_pairs(v)) for k, v in value.items())
    if isinstance(value, list):
        return [_as_pairs(v) for v in value]
    return value


def build_plan(document: Any) -> Plan:
    """Shape a parsed document (relaxed-reader output or plain JSON values) into a plan."""
    if not isinstance(document, list) or isinstance(document, _Pairs):
        raise PlanStructureError("a plan must be a list of task objects")
    document = _as_pairs(document)
    return Plan(tuple(_task_node(raw, i) for i, raw in enumerate(document)))


def parse_relaxed(plan_text: str) -> Plan:
    """Parse one plan written in the relaxed dialect (strict JSON included)."""
    return build_plan(_Reader(plan_text).document())


def _bracket_end(text: str, start: int) -> int | None:
    depth = 0
    quote = None
    i = start
    n = len(text)
    while i < n:
        ch = text[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in ("'", '"'):
            quote = ch
        elif ch in "[{":
            depth += 1
        elif ch in "]}":
            depth -= 1
            if depth == 0:
                return i + 1 if ch == "]" else None
        i += 1
    return None


def extract_plan_text(llm_output: str) -> str:
    """Return the first bracketed region of ``llm_output`` that parses as a plan."""
    start = llm_output.find("[")
    while start != -1:
        end = _bracket_end(llm_output, start)
        if end is not None:
            candidate = llm_output[start:end]
            try:
                parse_relaxed(candidate)
            except (PlanParseError, UnknownTaskType):
                pass
            else:
                return candidate
        start = llm_output.find("[", start + 1)
    raise NoPlanFound("no parseable plan in model output")
