"""Analytic target-curve families, instance sampling, and the benchmark dataset.

Six planar curve families (circle, ellipse, line, parabola, lemniscate of
Bernoulli, NACA four-digit airfoil), each with an implicit residual, a
parametric sampler verified against the residual, and a canonical equation
rendering that parses back. ``generate_dataset`` draws random instances
into the MSynth benchmark, serialized one JSON object per line.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .geometry import Trajectory
from .rng import SplitMix64

FAMILIES = ("circle", "ellipse", "line", "parabola", "lemniscate", "naca")

CLOSED_FAMILIES = frozenset({"circle", "ellipse", "lemniscate"})

# Parameter domains for random instance sampling. Kept as data so that
# alternative benchmark configurations can override them.
DEFAULT_RANGES = {
    "circle": {"r": (0.5, 5.0), "x1": (-5.0, 5.0), "y1": (-5.0, 5.0)},
    "ellipse": {"a": (0.5, 5.0), "b": (0.5, 5.0), "x1": (-5.0, 5.0), "y1": (-5.0, 5.0)},
    "line": {"x1": (-5.0, 5.0), "y1": (-5.0, 5.0), "x2": (-5.0, 5.0), "y2": (-5.0, 5.0)},
    "parabola": {"a": (0.2, 3.0), "h": (-5.0, 5.0), "k": (-5.0, 5.0)},
    "lemniscate": {"a": (0.5, 5.0)},
    "naca": {"series": (2000, 3000)},
}

LINE_MIN_SEPARATION = 0.5

# Parabolas are sampled over x in [h - w, h + w].
PARABOLA_WINDOW = 2.0


@dataclass(frozen=True)
class CurveSpec:
    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown curve family: {self.family!r}")
        p = self.params
        if self.family == "circle" and p["r"] <= 0:
            raise ValueError("circle radius must be positive")
        if self.family == "ellipse" and (p["a"] <= 0 or p["b"] <= 0):
            raise ValueError("ellipse semi-axes must be positive")
        if self.family == "line" and (p["x1"], p["y1"]) == (p["x2"], p["y2"]):
            raise ValueError("line endpoints must be distinct")
        if self.family == "parabola" and p["a"] == 0:
            raise ValueError("parabola coefficient must be nonzero")
        if self.family == "lemniscate" and p["a"] <= 0:
            raise ValueError("lemniscate scale must be positive")
        if self.family == "naca" and not 0 <= int(p["series"]) <= 9999:
            raise ValueError("NACA series must be a four-digit code")

    @property
    def closed(self) -> bool:
        return self.family in CLOSED_FAMILIES


# --- NACA four-digit surfaces ------------------------------------------------

def _naca_coeffs(series: int):
    m = (series // 1000) / 100.0
    p = ((series // 100) % 10) / 10.0
    t = (series % 100) / 100.0
    return m, p, t


def _naca_thickness(t: float, x):
    # Open trailing edge: the -0.1015 closing coefficient.
    return 5.0 * t * (
        0.2969 * np.sqrt(x)
        - 0.1260 * x
        - 0.3516 * x**2
        + 0.2843 * x**3
        - 0.1015 * x**4
    )


def _naca_camber(m: float, p: float, x):
    x = np.asarray(x, dtype=np.float64)
    if m == 0.0 or p == 0.0:
        # Degenerate codes (zero camber or zero camber position) flatten to
        # the symmetric section.
        return np.zeros_like(x), np.zeros_like(x)
    yc = np.where(
        x < p,
        m / p**2 * (2 * p * x - x**2),
        m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x - x**2),
    )
    dyc = np.where(x < p, 2 * m / p**2 * (p - x), 2 * m / (1 - p) ** 2 * (p - x))
    return yc, dyc


def naca_surface(series: int, x, upper: bool):
    """Surface point(s) at chordwise station(s) x in [0, 1], unit chord."""
    m, p, t = _naca_coeffs(int(series))
    x = np.asarray(x, dtype=np.float64)
    yt = _naca_thickness(t, x)
    yc, dyc = _naca_camber(m, p, x)
    theta = np.arctan(dyc)
    if upper:
        return np.stack([x - yt * np.sin(theta), yc + yt * np.cos(theta)], axis=-1)
    return np.stack([x + yt * np.sin(theta), yc - yt * np.cos(theta)], axis=-1)


def _naca_surface_distance(series: int, point, upper: bool) -> float:
    """Distance from a point to one airfoil surface (coarse scan + golden refine)."""
    px, py = float(point[0]), float(point[1])

    def d2(x):
        s = naca_surface(series, x, upper)
        return float((s[0] - px) ** 2 + (s[1] - py) ** 2)

    xs = (1 - np.cos(np.linspace(0.0, np.pi, 257))) / 2
    vals = [d2(float(x)) for x in xs]
    k = int(np.argmin(vals))
    lo = float(xs[max(k - 1, 0)])
    hi = float(xs[min(k + 1, len(xs) - 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - (b - a) * invphi
    d = a + (b - a) * invphi
    fc, fd = d2(c), d2(d)
    for _ in range(90):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * invphi
            fc = d2(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * invphi
            fd = d2(d)
    return math.sqrt(min(fc, fd))


# --- Implicit residuals -------------------------------------------------------

def implicit_residual(curve: CurveSpec, point) -> float:
    """Implicit-equation residual; zero exactly when the point lies on the curve.

    For airfoils the residual is the signed distance to the nearer of the
    upper/lower surfaces (negative between them).
    """
    x, y = float(point[0]), float(point[1])
    p = curve.params
    f = curve.family
    if f == "circle":
        return (x - p["x1"]) ** 2 + (y - p["y1"]) ** 2 - p["r"] ** 2
    if f == "ellipse":
        return (x - p["x1"]) ** 2 / p["a"] ** 2 + (y - p["y1"]) ** 2 / p["b"] ** 2 - 1.0
    if f == "line":
        return (y - p["y1"]) * (p["x2"] - p["x1"]) - (p["y2"] - p["y1"]) * (x - p["x1"])
    if f == "parabola":
        return y - p["a"] * (x - p["h"]) ** 2 - p["k"]
    if f == "lemniscate":
        return (x**2 + y**2) ** 2 - 2.0 * p["a"] ** 2 * (x**2 - y**2)
    # naca
    series = int(p["series"])
    du = _naca_surface_distance(series, (x, y), upper=True)
    dl = _naca_surface_distance(series, (x, y), upper=False)
    if du <= dl:
        xu = naca_surface(series, _project_chordwise(series, (x, y), True), True)
        return du if y >= xu[1] else -du
    xl = naca_surface(series, _project_chordwise(series, (x, y), False), False)
    return dl if y <= xl[1] else -dl


def _project_chordwise(series: int, point, upper: bool) -> float:
    """Chordwise station of the nearest surface point (coarse scan only)."""
    xs = (1 - np.cos(np.linspace(0.0, np.pi, 257))) / 2
    s = naca_surface(series, xs, upper)
    d2 = (s[:, 0] - point[0]) ** 2 + (s[:, 1] - point[1]) ** 2
    return float(xs[int(np.argmin(d2))])


# --- Parametric samplers ------------------------------------------------------

def _sample_param_values(curve: CurveSpec, n: int, seed: int, mode: str) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    if mode == "uniform":
        if curve.closed or curve.family == "naca":
            return np.arange(n, dtype=np.float64) / n
        return np.linspace(0.0, 1.0, n)
    if mode == "random":
        rng = SplitMix64(seed)
        return np.array([rng.random() for _ in range(n)])
    raise ValueError(f"unknown sampling mode: {mode!r}")


def curve_point(curve: CurveSpec, u: float, index: int = 0) -> tuple[float, float]:
    """Point on the curve at normalized parameter u in [0, 1).

    ``index`` only matters for airfoils, where consecutive samples
    alternate between upper and lower surfaces.
    """
    p = curve.params
    f = curve.family
    if f == "circle":
        th = 2 * math.pi * u
        return (p["x1"] + p["r"] * math.cos(th), p["y1"] + p["r"] * math.sin(th))
    if f == "ellipse":
        th = 2 * math.pi * u
        return (p["x1"] + p["a"] * math.cos(th), p["y1"] + p["b"] * math.sin(th))
    if f == "line":
        return (
            p["x1"] + u * (p["x2"] - p["x1"]),
            p["y1"] + u * (p["y2"] - p["y1"]),
        )
    if f == "parabola":
        x = p["h"] + (2 * u - 1) * PARABOLA_WINDOW
        return (x, p["a"] * (x - p["h"]) ** 2 + p["k"])
    if f == "lemniscate":
        th = 2 * math.pi * u
        a = p["a"]
        den = 1 + math.sin(th) ** 2
        return (
            a * math.sqrt(2) * math.cos(th) / den,
            a * math.sqrt(2) * math.cos(th) * math.sin(th) / den,
        )
    # naca: cosine-clustered chordwise station, alternating surfaces
    x = (1 - math.cos(math.pi * u)) / 2
    pt = naca_surface(int(p["series"]), x, upper=(index % 2 == 0))
    return (float(pt[0]), float(pt[1]))


def sample_points(curve: CurveSpec, n: int, seed: int = 0, mode: str = "uniform") -> Trajectory:
    """n on-curve points; ``mode`` is "uniform" (evenly spaced parameters)
    or "random" (parameters drawn from the seeded generator)."""
    us = _sample_param_values(curve, n, seed, mode)
    pts = np.array([curve_point(curve, float(u), i) for i, u in enumerate(us)])
    return Trajectory(pts, closed=curve.closed and mode == "uniform")


# --- Canonical equation text ---------------------------------------------------

def _fmt(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _center_term(var: str, c: float) -> str:
    if c == 0:
        return f"{var}^2"
    if c > 0:
        return f"({var} - {_fmt(c)})^2"
    return f"({var} + {_fmt(-c)})^2"


def _const_tail(c: float) -> str:
    if c == 0:
        return ""
    if c > 0:
        return f" + {_fmt(c)}"
    return f" - {_fmt(-c)}"


def _coef_prefix(a: float) -> str:
    if a == 1:
        return ""
    if a == -1:
        return "-"
    return f"{_fmt(a)}*"


def equation_text(curve: CurveSpec) -> str:
    """Canonical, locale-independent equation string; parses back via
    ``parse_equation``."""
    p = curve.params
    f = curve.family
    if f == "circle":
        return f"{_center_term('x', p['x1'])} + {_center_term('y', p['y1'])} = {_fmt(p['r'] ** 2)}"
    if f == "ellipse":
        return (
            f"{_center_term('x', p['x1'])}/{_fmt(p['a'] ** 2)}"
            f" + {_center_term('y', p['y1'])}/{_fmt(p['b'] ** 2)} = 1"
        )
    if f == "line":
        if p["x1"] == p["x2"]:
            return f"x = {_fmt(p['x1'])}"
        m = (p["y2"] - p["y1"]) / (p["x2"] - p["x1"])
        c = p["y1"] - m * p["x1"]
        if m == 0:
            return f"y = {_fmt(c)}"
        return f"y = {_coef_prefix(m)}x{_const_tail(c)}"
    if f == "parabola":
        sq = _center_term("x", p["h"])
        return f"y = {_coef_prefix(p['a'])}{sq}{_const_tail(p['k'])}"
    if f == "lemniscate":
        return f"(x^2 + y^2)^2 = {_fmt(2 * p['a'] ** 2)}*(x^2 - y^2)"
    return f"naca({int(p['series']):04d})"


_F = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _center_pat(var: str) -> str:
    return rf"(?:\({var} (?P<{var}sgn>[+-]) (?P<{var}val>{_F})\)|{var})\^2"


_CIRCLE_RE = re.compile(rf"^{_center_pat('x')} \+ {_center_pat('y')} = (?P<r2>{_F})$")
_ELLIPSE_RE = re.compile(
    rf"^{_center_pat('x')}/(?P<a2>{_F}) \+ {_center_pat('y')}/(?P<b2>{_F}) = 1$"
)
_LEMNISCATE_RE = re.compile(rf"^\(x\^2 \+ y\^2\)\^2 = (?P<c>{_F})\*\(x\^2 - y\^2\)$")
_NACA_RE = re.compile(r"^naca\((\d{1,4})\)$")
_VLINE_RE = re.compile(rf"^x = (?P<c>{_F})$")
_PARABOLA_RE = re.compile(
    rf"^y = (?P<coef>-|{_F}\*)?{_center_pat('x')}(?: (?P<tsgn>[+-]) (?P<tval>{_F}))?$"
)
_LINE_RE = re.compile(
    rf"^y = (?:(?P<coef>-|{_F}\*)?x(?: (?P<tsgn>[+-]) (?P<tval>{_F}))?|(?P<const>{_F}))$"
)


def _signed(m: re.Match, prefix: str) -> float:
    if m.group(f"{prefix}val") is None:
        return 0.0
    v = float(m.group(f"{prefix}val"))
    return -v if m.group(f"{prefix}sgn") == "+" else v


def _coef_value(g) -> float:
    if g is None:
        return 1.0
    if g == "-":
        return -1.0
    return float(g[:-1])


def _tail_value(m: re.Match) -> float:
    if m.group("tval") is None:
        return 0.0
    v = float(m.group("tval"))
    return -v if m.group("tsgn") == "-" else v


def parse_equation(text: str) -> CurveSpec:
    """Inverse of ``equation_text``. Lines reconstruct as canonical endpoints
    on the same zero set (the slope-intercept form has no endpoint memory)."""
    text = text.strip()
    m = _CIRCLE_RE.match(text)
    if m:
        return CurveSpec(
            "circle",
            {"r": math.sqrt(float(m.group("r2"))), "x1": _signed(m, "x"), "y1": _signed(m, "y")},
        )
    m = _ELLIPSE_RE.match(text)
    if m:
        return CurveSpec(
            "ellipse",
            {
                "a": math.sqrt(float(m.group("a2"))),
                "b": math.sqrt(float(m.group("b2"))),
                "x1": _signed(m, "x"),
                "y1": _signed(m, "y"),
            },
        )
    m = _LEMNISCATE_RE.match(text)
    if m:
        return CurveSpec("lemniscate", {"a": math.sqrt(float(m.group("c")) / 2.0)})
    m = _NACA_RE.match(text)
    if m:
        return CurveSpec("naca", {"series": int(m.group(1))})
    m = _VLINE_RE.match(text)
    if m:
        c = float(m.group("c"))
        return CurveSpec("line", {"x1": c, "y1": 0.0, "x2": c, "y2": 1.0})
    m = _PARABOLA_RE.match(text)
    if m:
        return CurveSpec(
            "parabola",
            {"a": _coef_value(m.group("coef")), "h": _signed(m, "x"), "k": _tail_value(m)},
        )
    m = _LINE_RE.match(text)
    if m:
        if m.group("const") is not None:
            c = float(m.group("const"))
            return CurveSpec("line", {"x1": 0.0, "y1": c, "x2": 1.0, "y2": c})
        slope = _coef_value(m.group("coef"))
        c = _tail_value(m)
        return CurveSpec("line", {"x1": 0.0, "y1": c, "x2": 1.0, "y2": slope + c})
    raise ValueError(f"unrecognized equation: {text!r}")


# --- Dataset generation ---------------------------------------------------------

@dataclass
class TaskInstance:
    id: str
    curve: CurveSpec
    target_points: Trajectory
    equation_text: str
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "family": self.curve.family,
                "params": self.curve.params,
                "points": [[float(x), float(y)] for x, y in self.target_points.points],
                "equation_text": self.equation_text,
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "TaskInstance":
        d = json.loads(line)
        curve = CurveSpec(d["family"], d["params"])
        return cls(
            id=d["id"],
            curve=curve,
            target_points=Trajectory(np.array(d["points"]), closed=curve.closed),
            equation_text=d["equation_text"],
            seed=d["seed"],
        )


def _sample_params(family: str, rng: SplitMix64, ranges: dict) -> dict:
    r = ranges[family]
    if family == "circle":
        return {
            "r": rng.uniform(*r["r"]),
            "x1": rng.uniform(*r["x1"]),
            "y1": rng.uniform(*r["y1"]),
        }
    if family == "ellipse":
        return {
            "a": rng.uniform(*r["a"]),
            "b": rng.uniform(*r["b"]),
            "x1": rng.uniform(*r["x1"]),
            "y1": rng.uniform(*r["y1"]),
        }
    if family == "line":
        while True:
            params = {
                "x1": rng.uniform(*r["x1"]),
                "y1": rng.uniform(*r["y1"]),
                "x2": rng.uniform(*r["x2"]),
                "y2": rng.uniform(*r["y2"]),
            }
            dx = params["x2"] - params["x1"]
            dy = params["y2"] - params["y1"]
            if math.hypot(dx, dy) >= LINE_MIN_SEPARATION:
                return params
    if family == "parabola":
        mag = rng.uniform(*r["a"])
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return {"a": sign * mag, "h": rng.uniform(*r["h"]), "k": rng.uniform(*r["k"])}
    if family == "lemniscate":
        return {"a": rng.uniform(*r["a"])}
    if family == "naca":
        lo, hi = r["series"]
        return {"series": rng.randint(int(lo), int(hi))}
    raise ValueError(f"unknown family: {family!r}")


def generate_dataset(
    seed: int,
    families=FAMILIES,
    instances_per_family: int = 5,
    n_points: int = 4,
    ranges: dict | None = None,
    param_mode: str = "uniform",
) -> list[TaskInstance]:
    """Deterministic benchmark instances: parameters drawn uniformly over the
    configured ranges, one sub-seed per instance for its point sampling."""
    ranges = ranges or DEFAULT_RANGES
    rng = SplitMix64(seed)
    out = []
    for family in families:
        for k in range(instances_per_family):
            params = _sample_params(family, rng, ranges)
            point_seed = rng.next_u64() & 0x7FFFFFFF
            curve = CurveSpec(family, params)
            out.append(
                TaskInstance(
                    id=f"{family}-{k:02d}",
                    curve=curve,
                    target_points=sample_points(curve, n_points, point_seed, param_mode),
                    equation_text=equation_text(curve),
                    seed=point_seed,
                )
            )
    return out


def write_dataset(instances, path) -> None:
    with open(path, "w") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")


def read_dataset(path) -> list[TaskInstance]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(TaskInstance.from_json(line))
    return out
