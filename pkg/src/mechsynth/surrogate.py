"""Compact analytic surrogates of simulated traces.

Fits x(t), y(t) over t in [0, 2pi) (t = normalized step index) by least
squares on a fixed dictionary {1, t, t^2, sin(kt), cos(kt) for k = 1..K},
then prunes terms by greedy backward elimination. Among pruned models
within the RMSE tolerance of the best, the fewest-node expression wins, so
a clean periodic trace comes back as a bare sinusoid. Deterministic by
construction (no stochastic search).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Trajectory


# --- Expression trees ----------------------------------------------------------

def _sig4(v: float) -> str:
    return "%.4g" % float(v)


@dataclass(frozen=True)
class Const:
    value: float

    def eval(self, ts):
        return np.full_like(ts, self.value, dtype=np.float64)

    def nodes(self) -> int:
        return 1

    def text(self) -> str:
        return _sig4(self.value)


@dataclass(frozen=True)
class TVar:
    def eval(self, ts):
        return np.asarray(ts, dtype=np.float64)

    def nodes(self) -> int:
        return 1

    def text(self) -> str:
        return "t"


@dataclass(frozen=True)
class TSquared:
    def eval(self, ts):
        t = np.asarray(ts, dtype=np.float64)
        return t * t

    def nodes(self) -> int:
        return 1

    def text(self) -> str:
        return "t^2"


def _freq_text(freq: int, phase: float) -> str:
    inner = "t" if freq == 1 else f"{freq}*t"
    if phase != 0.0:
        inner += f" + {_sig4(phase)}" if phase > 0 else f" - {_sig4(-phase)}"
    return inner


@dataclass(frozen=True)
class Sin:
    freq: int
    phase: float = 0.0

    def eval(self, ts):
        return np.sin(self.freq * np.asarray(ts, dtype=np.float64) + self.phase)

    def nodes(self) -> int:
        return 1

    def text(self) -> str:
        return f"sin({_freq_text(self.freq, self.phase)})"


@dataclass(frozen=True)
class Cos:
    freq: int
    phase: float = 0.0

    def eval(self, ts):
        return np.cos(self.freq * np.asarray(ts, dtype=np.float64) + self.phase)

    def nodes(self) -> int:
        return 1

    def text(self) -> str:
        return f"cos({_freq_text(self.freq, self.phase)})"


@dataclass(frozen=True)
class Mul:
    left: object
    right: object

    def eval(self, ts):
        return self.left.eval(ts) * self.right.eval(ts)

    def nodes(self) -> int:
        return 1 + self.left.nodes() + self.right.nodes()

    def text(self) -> str:
        if isinstance(self.left, Const):
            rendered = _sig4(self.left.value)
            if rendered == "1":
                return self.right.text()
            if rendered == "-1":
                return f"-{self.right.text()}"
            return f"{rendered}*{self.right.text()}"
        return f"{self.left.text()}*{self.right.text()}"


@dataclass(frozen=True)
class Add:
    left: object
    right: object

    def eval(self, ts):
        return self.left.eval(ts) + self.right.eval(ts)

    def nodes(self) -> int:
        return 1 + self.left.nodes() + self.right.nodes()

    def text(self) -> str:
        rhs = self.right.text()
        if rhs.startswith("-"):
            return f"{self.left.text()} - {rhs[1:]}"
        return f"{self.left.text()} + {rhs}"


@dataclass
class SurrogateExpr:
    x_expr: object
    y_expr: object
    complexity: int
    fit_error: float


@dataclass
class FitConfig:
    max_frequency: int = 4
    complexity_cap: int = 25  # per coordinate
    rmse_tolerance: float = 0.01  # relative slack for the fewest-node rule


# --- Fitting -------------------------------------------------------------------

def _dictionary(config: FitConfig):
    """(basis node or None for the intercept, column evaluator) pairs."""
    entries = [
        (None, lambda t: np.ones_like(t)),
        (TVar(), lambda t: t),
        (TSquared(), lambda t: t * t),
    ]
    for k in range(1, config.max_frequency + 1):
        entries.append((Sin(k), lambda t, k=k: np.sin(k * t)))
        entries.append((Cos(k), lambda t, k=k: np.cos(k * t)))
    return entries


def _term_nodes(basis) -> int:
    # intercept -> Const (1 node); otherwise Mul(Const, basis)
    return 1 if basis is None else 2 + basis.nodes()


def _model_nodes(active, entries) -> int:
    per_term = [_term_nodes(entries[i][0]) for i in active]
    if not per_term:
        return 1  # Const(0)
    return sum(per_term) + (len(per_term) - 1)  # (+) chain


def _rmse(a, y, coef) -> float:
    r = y - a @ coef
    return float(np.sqrt(np.mean(r * r)))


def _fit_coordinate(ts, y, config: FitConfig):
    """Backward-elimination path + pure-constant fallback, then the
    fewest-node model within tolerance of the best RMSE under the cap."""
    entries = _dictionary(config)
    a_full = np.column_stack([col(ts) for _, col in entries])

    def refit(active):
        a = a_full[:, active]
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        return coef, _rmse(a, y, coef)

    active = list(range(len(entries)))
    path = []
    coef, rmse = refit(active)
    path.append((active[:], coef, rmse))
    while len(active) > 1:
        best_drop = None
        for i in range(len(active)):
            trial = active[:i] + active[i + 1 :]
            c, r = refit(trial)
            if best_drop is None or r < best_drop[1]:
                best_drop = (trial, r, c)
        active = best_drop[0]
        path.append((active[:], best_drop[2], best_drop[1]))

    const_coef = np.array([float(np.mean(y))])
    path.append(([0], const_coef, _rmse(a_full[:, [0]], y, const_coef)))

    capped = [
        (act, coef, rmse)
        for act, coef, rmse in path
        if _model_nodes(act, entries) <= config.complexity_cap
    ]
    best_rmse = min(r for _, _, r in capped)
    threshold = best_rmse * (1.0 + config.rmse_tolerance) + 1e-12
    chosen = min(
        (m for m in capped if m[2] <= threshold),
        key=lambda m: (_model_nodes(m[0], entries), m[2]),
    )
    return chosen[0], chosen[1], entries


def _build_tree(active, coef, entries):
    tree = None
    for i, c in zip(active, coef):
        basis = entries[i][0]
        c = float(c)
        term = Const(c) if basis is None else Mul(Const(c), basis)
        tree = term if tree is None else Add(tree, term)
    return tree if tree is not None else Const(0.0)


def trace_parameter(n: int) -> np.ndarray:
    """Normalized step index mapped onto [0, 2pi)."""
    return 2.0 * np.pi * np.arange(n, dtype=np.float64) / n


def fit_surrogate(trace, config: FitConfig | None = None) -> SurrogateExpr:
    """Fit compact x(t), y(t) expressions to a trace of at least 8 points."""
    config = config or FitConfig()
    pts = trace.points if isinstance(trace, Trajectory) else np.asarray(trace, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("trace must be an (n, 2) point array")
    if pts.shape[0] < 8:
        raise ValueError("trace too short to fit a surrogate (need >= 8 points)")
    ts = trace_parameter(pts.shape[0])

    ax, cx, entries = _fit_coordinate(ts, pts[:, 0], config)
    ay, cy, _ = _fit_coordinate(ts, pts[:, 1], config)
    x_expr = _build_tree(ax, cx, entries)
    y_expr = _build_tree(ay, cy, entries)

    pred = np.column_stack([x_expr.eval(ts), y_expr.eval(ts)])
    err = float(np.sqrt(np.mean(np.sum((pred - pts) ** 2, axis=1))))
    return SurrogateExpr(
        x_expr=x_expr,
        y_expr=y_expr,
        complexity=x_expr.nodes() + y_expr.nodes(),
        fit_error=err,
    )


def eval_surrogate(expr: SurrogateExpr, ts) -> Trajectory:
    ts = np.asarray(ts, dtype=np.float64)
    if not np.all(np.isfinite(ts)):
        raise ValueError("parameter values must be finite")
    return Trajectory(np.column_stack([expr.x_expr.eval(ts), expr.y_expr.eval(ts)]))


def expr_to_text(expr: SurrogateExpr) -> str:
    """Deterministic rendering with 4-significant-digit coefficients."""
    return f"x(t) = {expr.x_expr.text()}; y(t) = {expr.y_expr.text()}"
