"""The line-oriented mechanism description language.

One joint declaration per line::

    name = Static(x, y)
    name = Crank(joint0, distance, angle[, x, y])
    name = Revolute(joint0, distance0, joint1, distance1[, x, y])
    name = Linear(joint0, revolute_radius, la, lb[, x, y])

Reference slots accept the name of a previously declared joint or a
literal ``(x, y)`` anchor. Keyword arguments may appear in any order;
``#`` starts a comment. Parsing collects every error in the document
instead of stopping at the first, and never raises on malformed input.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .linkage import Crank, Linear, MechanismSpec, Revolute, Static, validate

API_DOC = """\
Each line declares one joint: name = Command(arguments).
Arguments may be positional or keyword (in any order). Reference slots accept
the name of a previously declared joint or a literal anchor written (x, y).
The joint that must trace the desired path has to be named "target".

Static(x, y)
    A fixed anchor at coordinates (x, y).
Crank(joint0, distance, angle, x, y)
    A driven link revolving around joint0 at the given distance, advancing
    by `angle` radians per simulation step. Optional x, y give the starting
    position.
Revolute(joint0, distance0, joint1, distance1, x, y)
    A pin joint constrained to distance0 from joint0 and distance1 from
    joint1. Optional x, y select the starting branch.
Linear(joint0, revolute_radius, la, lb, x, y)
    A slider confined to the line through la and lb, at revolute_radius
    from joint0. Optional x, y select the starting branch.
"""


@dataclass
class DslError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass
class ParseResult:
    spec: MechanismSpec | None
    errors: list

    @property
    def ok(self) -> bool:
        return self.spec is not None


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<sym>[=(),])
    """,
    re.VERBOSE,
)

# (required slots, optional slots); "ref" accepts a joint name or anchor.
_SCHEMAS = {
    "Static": ((("x", "num"), ("y", "num")), ()),
    "Crank": (
        (("joint0", "ref"), ("distance", "num"), ("angle", "num")),
        (("x", "num"), ("y", "num")),
    ),
    "Revolute": (
        (("joint0", "ref"), ("distance0", "num"), ("joint1", "ref"), ("distance1", "num")),
        (("x", "num"), ("y", "num")),
    ),
    "Linear": (
        (("joint0", "ref"), ("revolute_radius", "num"), ("la", "ref"), ("lb", "ref")),
        (("x", "num"), ("y", "num")),
    ),
}

_CTORS = {"Static": Static, "Crank": Crank, "Revolute": Revolute, "Linear": Linear}


def _lex_line(line: str):
    """Token list for one line, or an error string."""
    tokens = []
    pos = 0
    while pos < len(line):
        if line[pos] == "#":
            break
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            return None, f"unexpected character {line[pos]!r}"
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append((m.lastgroup, m.group()))
    return tokens, None


class _LineParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None:
            raise _SyntaxError("unexpected end of line")
        if kind is not None and tok[0] != kind:
            raise _SyntaxError(f"expected {kind}, got {tok[1]!r}")
        if value is not None and tok[1] != value:
            raise _SyntaxError(f"expected {value!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def done(self):
        return self.i >= len(self.tokens)


class _SyntaxError(Exception):
    pass


def _parse_value(p: _LineParser):
    kind, text = p.peek()
    if kind == "number":
        p.take()
        return ("num", float(text))
    if kind == "name":
        p.take()
        return ("ref", text)
    if kind == "sym" and text == "(":
        p.take()
        x = p.take("number")[1]
        p.take("sym", ",")
        y = p.take("number")[1]
        p.take("sym", ")")
        return ("anchor", (float(x), float(y)))
    raise _SyntaxError(f"expected a value, got {text!r}" if text else "expected a value")


def _parse_statement(tokens):
    """One `name = Kind(args)` statement -> (name, kind, args) where args is
    a list of (keyword-or-None, tagged value)."""
    p = _LineParser(tokens)
    name = p.take("name")[1]
    p.take("sym", "=")
    kind = p.take("name")[1]
    if kind not in _SCHEMAS:
        raise _SyntaxError(f"unknown joint kind {kind!r}")
    p.take("sym", "(")
    args = []
    if p.peek() != ("sym", ")"):
        while True:
            key = None
            if (
                p.peek()[0] == "name"
                and p.i + 1 < len(p.tokens)
                and p.tokens[p.i + 1] == ("sym", "=")
            ):
                key = p.take("name")[1]
                p.take("sym", "=")
            args.append((key, _parse_value(p)))
            if p.peek() == ("sym", ","):
                p.take()
                continue
            break
    p.take("sym", ")")
    if not p.done():
        raise _SyntaxError(f"trailing tokens after statement: {p.peek()[1]!r}")
    return name, kind, args


def _bind_args(kind, args):
    """Match positional/keyword args against the joint schema -> slot dict."""
    required, optional = _SCHEMAS[kind]
    slots = list(required) + list(optional)
    by_name = dict(slots)
    bound = {}
    pos_index = 0
    seen_keyword = False
    for key, (vtag, value) in args:
        if key is None:
            if seen_keyword:
                raise _SyntaxError("positional argument after keyword argument")
            if pos_index >= len(slots):
                raise _SyntaxError(f"too many arguments for {kind}")
            slot, stype = slots[pos_index]
            pos_index += 1
        else:
            seen_keyword = True
            if key not in by_name:
                raise _SyntaxError(f"unknown keyword {key!r} for {kind}")
            if key in bound:
                raise _SyntaxError(f"duplicate argument {key!r}")
            slot, stype = key, by_name[key]
        if slot in bound:
            raise _SyntaxError(f"duplicate argument {slot!r}")
        if stype == "num" and vtag != "num":
            raise _SyntaxError(f"argument {slot!r} of {kind} must be a number")
        if stype == "ref" and vtag == "num":
            raise _SyntaxError(f"argument {slot!r} of {kind} must be a joint or anchor")
        bound[slot] = value
    missing = [s for s, _ in required if s not in bound]
    if missing:
        raise _SyntaxError(f"{kind} missing required argument(s): {', '.join(missing)}")
    return bound


def parse(text: str) -> ParseResult:
    """Parse a document; on any error the spec is None and every problem in
    the document is reported with its line number."""
    errors: list[DslError] = []
    joints = []
    declared: dict[str, int] = {}
    if not isinstance(text, str):
        return ParseResult(None, [DslError(0, "input is not text")])
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        tokens, lex_err = _lex_line(raw)
        if lex_err is not None:
            errors.append(DslError(lineno, lex_err))
            continue
        if not tokens:
            continue
        try:
            name, kind, args = _parse_statement(tokens)
            bound = _bind_args(kind, args)
        except _SyntaxError as exc:
            errors.append(DslError(lineno, str(exc)))
            continue
        if name in declared:
            errors.append(
                DslError(lineno, f"duplicate joint name '{name}' (first declared on line {declared[name]})")
            )
            continue
        for slot, value in bound.items():
            if isinstance(value, str) and value not in declared:
                errors.append(DslError(lineno, f"forward reference to '{value}' in {slot!r}"))
        declared[name] = lineno
        joints.append(_CTORS[kind](name, **bound))
    if not joints and not errors:
        errors.append(DslError(0, "no statements"))
    if errors:
        return ParseResult(None, errors)

    spec = MechanismSpec(joints)
    for msg in validate(spec):
        m = re.search(r"'(\w+)'", msg)
        line = declared.get(m.group(1), 0) if m else 0
        errors.append(DslError(line, msg))
    if errors:
        return ParseResult(None, errors)
    return ParseResult(spec, [])


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_STMT_SHAPE_RE = re.compile(r"^\s*[A-Za-z_]\w*\s*=\s*(?:Static|Crank|Revolute|Linear)\s*\(")


def extract_block(agent_text: str) -> str | None:
    """Isolate the code region of an agent reply.

    Returns the content of the last fenced code block when one exists,
    otherwise the longest run of statement-shaped lines (blank lines and
    comments may sit inside the run). None when there is no code at all.
    """
    if not isinstance(agent_text, str):
        return None
    fences = _FENCE_RE.findall(agent_text)
    if fences:
        return fences[-1].strip("\n")

    lines = agent_text.split("\n")
    best: tuple[int, list[str]] | None = None
    run: list[str] = []
    run_stmts = 0

    def flush():
        nonlocal best, run, run_stmts
        if run_stmts > 0:
            while run and not _STMT_SHAPE_RE.match(run[-1]):
                run.pop()
            while run and not _STMT_SHAPE_RE.match(run[0]):
                run.pop(0)
            if best is None or run_stmts > best[0]:
                best = (run_stmts, run[:])
        run = []
        run_stmts = 0

    for line in lines:
        if _STMT_SHAPE_RE.match(line):
            run.append(line)
            run_stmts += 1
        elif not line.strip() or line.lstrip().startswith("#"):
            if run:
                run.append(line)
        else:
            flush()
    flush()
    if best is None:
        return None
    return "\n".join(best[1])


def fmt_number(v: float) -> str:
    """Shortest exact rendering: integers bare, everything else repr."""
    v = float(v)
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_ref(ref) -> str:
    if isinstance(ref, tuple):
        return f"({fmt_number(ref[0])}, {fmt_number(ref[1])})"
    return str(ref)


def format_canonical(spec: MechanismSpec) -> str:
    """Deterministic, idempotent rendering: one statement per line, all
    arguments keyworded in schema order, shortest-round-trip numbers."""
    out = []
    for j in spec.joints:
        if isinstance(j, Static):
            parts = [f"x={fmt_number(j.x)}", f"y={fmt_number(j.y)}"]
            kind = "Static"
        elif isinstance(j, Crank):
            parts = [
                f"joint0={_fmt_ref(j.joint0)}",
                f"distance={fmt_number(j.distance)}",
                f"angle={fmt_number(j.angle)}",
            ]
            kind = "Crank"
        elif isinstance(j, Revolute):
            parts = [
                f"joint0={_fmt_ref(j.joint0)}",
                f"distance0={fmt_number(j.distance0)}",
                f"joint1={_fmt_ref(j.joint1)}",
                f"distance1={fmt_number(j.distance1)}",
            ]
            kind = "Revolute"
        else:
            parts = [
                f"joint0={_fmt_ref(j.joint0)}",
                f"revolute_radius={fmt_number(j.revolute_radius)}",
                f"la={_fmt_ref(j.la)}",
                f"lb={_fmt_ref(j.lb)}",
            ]
            kind = "Linear"
        if not isinstance(j, Static) and j.x is not None and j.y is not None:
            parts.append(f"x={fmt_number(j.x)}")
            parts.append(f"y={fmt_number(j.y)}")
        out.append(f"{j.name} = {kind}({', '.join(parts)})")
    return "\n".join(out) + "\n"
