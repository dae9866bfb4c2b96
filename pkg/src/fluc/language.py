"""The constrained mission command language the model must emit.

One primitive call per line, e.g.::

    takeoff(20)
    go_to_real_world_coords(41.1783107, -8.591609, 17)
    upload_and_start_supply_mission(x=[25,50], y=[50,50], z=[0,0], traffic=[200,200])

Blank lines and ``#`` comments are ignored. Parsing is all-or-nothing:
a script with any bad line is rejected, never partially executed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

Value = Union[float, list, str]


class EmptyOutput(ValueError):
    """Model output contained no script text at all."""


@dataclass(frozen=True)
class ParseError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class SemanticError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


class ParseFailure(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class ValidationFailure(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class PrimitiveCall:
    name: str
    args: tuple = ()
    kwargs: tuple = ()  # ordered (name, value) pairs
    line: int = 0

    def all_values(self):
        return list(self.args) + [v for _, v in self.kwargs]


@dataclass(frozen=True)
class MissionScript:
    calls: tuple
    source_text: str = ""


@dataclass(frozen=True)
class ValidatedMission:
    """A script that passed semantic validation, with any inserted calls flagged."""

    calls: tuple
    inserted_indices: tuple = ()
    source_text: str = ""


@dataclass(frozen=True)
class Extracted:
    text: str
    fenced: bool


# ---------------------------------------------------------------------------
# Function library
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "number" | "list" | "string"
    units: str = ""
    lo: Optional[float] = None
    hi: Optional[float] = None
    exclusive_lo: bool = False


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    params: tuple
    doc: str

    def signature(self) -> str:
        return f"{self.name}({', '.join(p.name for p in self.params)})"


DEFAULT_TAKEOFF_ALT_M = 20.0

DEFAULT_LIBRARY = (
    FunctionSpec(
        "go_to_real_world_coords",
        (
            ParamSpec("lat", "number", "deg", -90.0, 90.0),
            ParamSpec("lon", "number", "deg", -180.0, 180.0),
            ParamSpec("alt", "number", "m", 0.0, None),
        ),
        "Fly to an absolute WGS84 position at the given altitude above home ground.",
    ),
    FunctionSpec(
        "move_relative",
        (
            ParamSpec("d_east", "number", "m"),
            ParamSpec("d_north", "number", "m"),
            ParamSpec("d_up", "number", "m"),
        ),
        "Move by an east/north/up offset from the current position.",
    ),
    FunctionSpec(
        "set_return",
        (),
        "Return to the home position and land.",
    ),
    FunctionSpec(
        "takeoff",
        (ParamSpec("alt", "number", "m", 0.0, None, exclusive_lo=True),),
        "Arm and climb vertically to the given altitude.",
    ),
    FunctionSpec(
        "land",
        (),
        "Land at the current position; must be the last call if present.",
    ),
    FunctionSpec(
        "go_to_place",
        (ParamSpec("name", "string"),),
        "Fly to a named place resolved by geocoding, at the default altitude.",
    ),
    FunctionSpec(
        "fly_waypoints",
        (
            ParamSpec("points_list", "list", "m"),
            ParamSpec("optimize_flag", "number", "", 0.0, 1.0),
        ),
        "Visit waypoints given as a flat [e1,n1,u1,e2,n2,u2,...] list; "
        "optimize_flag=1 reorders them for minimum path length.",
    ),
    FunctionSpec(
        "set_obstacle",
        (
            ParamSpec("cx", "number", "m"),
            ParamSpec("cy", "number", "m"),
            ParamSpec("radius", "number", "m", 0.0, None, exclusive_lo=True),
            ParamSpec("height", "number", "m", 0.0, None, exclusive_lo=True),
        ),
        "Register a cylindrical no-fly zone (center east/north, radius, height); "
        "later motion routes around it.",
    ),
    FunctionSpec(
        "upload_and_start_supply_mission",
        (
            ParamSpec("x", "list", "m"),
            ParamSpec("y", "list", "m"),
            ParamSpec("z", "list", "m"),
            ParamSpec("traffic", "list", "Mbit/s"),
        ),
        "Position the UAV to serve ground users at (x,y,z) with the given "
        "traffic demands at minimum energy.",
    ),
)

# Calls that make the vehicle fly; used for implicit-takeoff insertion.
MOTION_PRIMITIVES = frozenset({
    "go_to_real_world_coords", "move_relative", "go_to_place",
    "fly_waypoints", "upload_and_start_supply_mission", "set_return", "land",
})


def library_by_name(library=DEFAULT_LIBRARY):
    return {spec.name: spec for spec in library}


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_script(raw_model_output: str) -> Extracted:
    """Pull the script out of raw model output.

    Returns the contents of the first fenced code block; if no fence is
    present the whole trimmed text is returned flagged unfenced.
    """
    m = _FENCE_RE.search(raw_model_output)
    if m:
        text = m.group(1).strip()
        fenced = True
    else:
        text = raw_model_output.strip()
        fenced = False
    if not text:
        raise EmptyOutput("model output contains no script text")
    return Extracted(text=text, fenced=fenced)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<punct>[()\[\],=])
""", re.VERBOSE)


def _tokenize(line_text: str, line_no: int):
    tokens = []
    pos = 0
    while pos < len(line_text):
        m = _TOKEN_RE.match(line_text, pos)
        if m is None:
            raise ParseFailure([ParseError(line_no, f"unknown token at column {pos + 1}: {line_text[pos:pos + 10]!r}")])
        pos = m.end()
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group()))
    return tokens


class _LineParser:
    def __init__(self, tokens, line_no):
        self.tokens = tokens
        self.line_no = line_no
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text):
        kind, val = self.next()
        if val != text:
            got = repr(val) if val is not None else "end of line"
            raise ParseFailure([ParseError(self.line_no, f"expected {text!r}, got {got}")])

    def fail(self, message):
        raise ParseFailure([ParseError(self.line_no, message)])

    def parse_call(self) -> PrimitiveCall:
        kind, name = self.next()
        if kind != "ident":
            self.fail(f"expected a call name, got {name!r}" if name else "expected a call name")
        self.expect("(")
        args = []
        kwargs = []
        if self.peek()[1] != ")":
            while True:
                self.parse_arg(args, kwargs)
                kind, val = self.peek()
                if val == ",":
                    self.next()
                    continue
                break
        self.expect(")")
        if self.i != len(self.tokens):
            self.fail(f"trailing garbage after call: {self.tokens[self.i][1]!r}")
        return PrimitiveCall(name=name, args=tuple(args), kwargs=tuple(kwargs), line=self.line_no)

    def parse_arg(self, args, kwargs):
        kind, val = self.peek()
        if kind == "ident":
            # keyword argument: ident "=" value
            name = self.next()[1]
            self.expect("=")
            value = self.parse_value()
            if args and not kwargs:
                pass  # positional-after-keyword is checked below
            if any(k == name for k, _ in kwargs):
                self.fail(f"duplicate keyword argument {name!r}")
            kwargs.append((name, value))
        else:
            if kwargs:
                self.fail("positional argument after keyword argument")
            args.append(self.parse_value())

    def parse_value(self) -> Value:
        kind, val = self.next()
        if kind == "number":
            return float(val)
        if kind == "string":
            return _unquote(val)
        if val == "[":
            items = []
            if self.peek()[1] != "]":
                while True:
                    kind, v = self.next()
                    if kind != "number":
                        self.fail(f"expected a number inside list, got {v!r}")
                    items.append(float(v))
                    kind, v = self.peek()
                    if v == ",":
                        self.next()
                        continue
                    break
            self.expect("]")
            return items
        got = repr(val) if val is not None else "end of line"
        self.fail(f"expected a value, got {got}")


def _unquote(tok: str) -> str:
    body = tok[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse(script_text: str) -> MissionScript:
    """Parse script text; raises :class:`ParseFailure` with every line error."""
    calls = []
    errors = []
    any_content = False
    for line_no, line_text in enumerate(script_text.splitlines(), start=1):
        stripped = line_text.split("#", 1)[0].strip()
        if not stripped:
            continue
        any_content = True
        try:
            tokens = _tokenize(stripped, line_no)
            calls.append(_LineParser(tokens, line_no).parse_call())
        except ParseFailure as e:
            errors.extend(e.errors)
    if not any_content:
        errors.append(ParseError(0, "empty script"))
    if errors:
        raise ParseFailure(errors)
    return MissionScript(calls=tuple(calls), source_text=script_text)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _render_value(v: Value) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ",".join(repr(float(x)) for x in v) + "]"
    return _quote(v)


def render(script) -> str:
    """Canonical text form; parse(render(s)) is structurally equal to s."""
    lines = []
    for call in script.calls:
        parts = [_render_value(a) for a in call.args]
        parts += [f"{k}={_render_value(v)}" for k, v in call.kwargs]
        lines.append(f"{call.name}({', '.join(parts)})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _bind_args(call: PrimitiveCall, spec: FunctionSpec, errors) -> Optional[dict]:
    """Map positional + keyword args onto the spec's parameters by position/name."""
    if len(call.args) > len(spec.params):
        errors.append(SemanticError(
            call.line,
            f"{call.name} takes {len(spec.params)} argument(s), got {len(call.args) + len(call.kwargs)}"))
        return None
    bound = {}
    for p, v in zip(spec.params, call.args):
        bound[p.name] = v
    names = {p.name for p in spec.params}
    ok = True
    for k, v in call.kwargs:
        if k not in names:
            errors.append(SemanticError(call.line, f"{call.name} has no parameter {k!r}"))
            ok = False
        elif k in bound:
            errors.append(SemanticError(call.line, f"parameter {k!r} given twice"))
            ok = False
        else:
            bound[k] = v
    missing = [p.name for p in spec.params if p.name not in bound]
    if missing:
        errors.append(SemanticError(call.line, f"{call.name} missing argument(s): {', '.join(missing)}"))
        ok = False
    return bound if ok else None


_KIND_CHECK = {
    "number": lambda v: isinstance(v, float),
    "list": lambda v: isinstance(v, list),
    "string": lambda v: isinstance(v, str),
}


def _check_kinds_and_ranges(call, spec, bound, errors):
    for p in spec.params:
        v = bound[p.name]
        if not _KIND_CHECK[p.kind](v):
            errors.append(SemanticError(call.line, f"{call.name}: {p.name} must be a {p.kind}"))
            continue
        if p.kind == "number":
            if p.lo is not None and (v < p.lo or (p.exclusive_lo and v == p.lo)):
                errors.append(SemanticError(call.line, f"{call.name}: {p.name}={v!r} below minimum {p.lo}"))
            if p.hi is not None and v > p.hi:
                errors.append(SemanticError(call.line, f"{call.name}: {p.name}={v!r} above maximum {p.hi}"))


def _check_call_specific(call, bound, errors):
    if call.name == "upload_and_start_supply_mission":
        lens = {k: len(bound[k]) for k in ("x", "y", "z", "traffic") if isinstance(bound.get(k), list)}
        if len(set(lens.values())) > 1:
            errors.append(SemanticError(
                call.line,
                "list length mismatch: " + ", ".join(f"{k} has {n}" for k, n in lens.items())))
        elif lens and next(iter(lens.values())) == 0:
            errors.append(SemanticError(call.line, "supply mission needs at least one ground user"))
        if isinstance(bound.get("traffic"), list):
            for t in bound["traffic"]:
                if t <= 0:
                    errors.append(SemanticError(call.line, f"traffic demand must be positive, got {t!r}"))
        if isinstance(bound.get("z"), list):
            for z in bound["z"]:
                if z < 0:
                    errors.append(SemanticError(call.line, f"ground user z must be >= 0, got {z!r}"))
    elif call.name == "fly_waypoints":
        pts = bound.get("points_list")
        if isinstance(pts, list):
            if len(pts) == 0 or len(pts) % 3 != 0:
                errors.append(SemanticError(
                    call.line,
                    f"points_list length {len(pts)} is not a positive multiple of 3 (e,n,u triples)"))
        flag = bound.get("optimize_flag")
        if isinstance(flag, float) and flag not in (0.0, 1.0):
            errors.append(SemanticError(call.line, f"optimize_flag must be 0 or 1, got {flag!r}"))
    elif call.name == "go_to_place":
        name = bound.get("name")
        if isinstance(name, str) and not name.strip():
            errors.append(SemanticError(call.line, "place name is empty"))


def validate(script: MissionScript, library=DEFAULT_LIBRARY) -> ValidatedMission:
    """Semantic validation; raises :class:`ValidationFailure` with all errors.

    Inserts an implicit ``takeoff(20)`` before the first motion call when
    the script never takes off explicitly; the insertion is recorded in
    ``inserted_indices`` rather than applied silently.
    """
    specs = library_by_name(library)
    errors = []
    for call in script.calls:
        spec = specs.get(call.name)
        if spec is None:
            errors.append(SemanticError(call.line, f"unknown primitive {call.name!r}"))
            continue
        bound = _bind_args(call, spec, errors)
        if bound is None:
            continue
        _check_kinds_and_ranges(call, spec, bound, errors)
        _check_call_specific(call, bound, errors)

    # Ordering rules.
    seen_return = False
    seen_land_at = None
    for call in script.calls:
        if seen_land_at is not None:
            errors.append(SemanticError(call.line, f"no call may follow land() (line {seen_land_at})"))
            seen_land_at = None  # report once per offending region
            break
        if call.name == "set_return":
            if seen_return:
                errors.append(SemanticError(call.line, "at most one set_return() per mission"))
            seen_return = True
        elif call.name == "land":
            seen_land_at = call.line

    if errors:
        raise ValidationFailure(errors)

    calls = list(script.calls)
    inserted = ()
    airborne = any(c.name == "takeoff" for c in calls)
    if not airborne:
        for i, call in enumerate(calls):
            if call.name in MOTION_PRIMITIVES:
                calls.insert(i, PrimitiveCall(
                    name="takeoff", args=(DEFAULT_TAKEOFF_ALT_M,), line=call.line))
                inserted = (i,)
                break
    return ValidatedMission(calls=tuple(calls), inserted_indices=inserted,
                            source_text=script.source_text)


def bound_args(call: PrimitiveCall, library=DEFAULT_LIBRARY) -> dict:
    """Parameter-name -> value map for an already-validated call."""
    spec = library_by_name(library)[call.name]
    bound = {p.name: v for p, v in zip(spec.params, call.args)}
    bound.update(dict(call.kwargs))
    return bound
