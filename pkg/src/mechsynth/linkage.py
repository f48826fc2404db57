"""Planar linkage kinematics: joint graph, per-step dyad solving, simulation.

Joints are declared in dependency order; each may reference previously
declared joints by name or literal (x, y) anchors. Four kinds:

* ``Static``   — fixed anchor.
* ``Crank``    — driven link revolving about its parent, advancing a fixed
  angle per step.
* ``Revolute`` — pin joint at the intersection of two distance constraints
  (circle-circle dyad).
* ``Linear``   — slider confined to the line through two references, at a
  fixed distance from its parent (circle-line dyad).

Where a dyad has two solutions, the one nearer the joint's previous
position is taken (step 0 uses the declared initial guess), which keeps
traces continuous across steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Trajectory

# A joint reference: a prior joint's name or a literal (x, y) anchor.
Ref = "str | tuple[float, float]"

_SLACK = 1e-9


def _norm_ref(ref):
    if isinstance(ref, (tuple, list)) and len(ref) == 2:
        return (float(ref[0]), float(ref[1]))
    return ref


def _norm_opt(v):
    return None if v is None else float(v)


@dataclass
class Static:
    name: str
    x: float
    y: float

    def __post_init__(self):
        self.x = float(self.x)
        self.y = float(self.y)


@dataclass
class Crank:
    name: str
    joint0: Ref
    distance: float
    angle: float  # radians advanced per simulation step
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        self.joint0 = _norm_ref(self.joint0)
        self.distance = float(self.distance)
        self.angle = float(self.angle)
        self.x = _norm_opt(self.x)
        self.y = _norm_opt(self.y)


@dataclass
class Revolute:
    name: str
    joint0: Ref
    distance0: float
    joint1: Ref
    distance1: float
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        self.joint0 = _norm_ref(self.joint0)
        self.joint1 = _norm_ref(self.joint1)
        self.distance0 = float(self.distance0)
        self.distance1 = float(self.distance1)
        self.x = _norm_opt(self.x)
        self.y = _norm_opt(self.y)


@dataclass
class Linear:
    name: str
    joint0: Ref
    revolute_radius: float
    la: Ref
    lb: Ref
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        self.joint0 = _norm_ref(self.joint0)
        self.la = _norm_ref(self.la)
        self.lb = _norm_ref(self.lb)
        self.revolute_radius = float(self.revolute_radius)
        self.x = _norm_opt(self.x)
        self.y = _norm_opt(self.y)


Joint = Static | Crank | Revolute | Linear


@dataclass
class MechanismSpec:
    joints: list
    target_name: str = "target"


@dataclass
class StepFailure:
    step: int
    joint: str
    reason: str


@dataclass
class SimResult:
    trajectory: Trajectory | None
    per_joint: dict
    steps: int
    success: bool
    failure: StepFailure | None = None


class UnreachableError(Exception):
    """A dyad has no real solution at the current step."""

    def __init__(self, joint: str, reason: str):
        super().__init__(f"{joint}: {reason}")
        self.joint = joint
        self.reason = reason


def _refs(joint: Joint):
    if isinstance(joint, Crank):
        return [joint.joint0]
    if isinstance(joint, Revolute):
        return [joint.joint0, joint.joint1]
    if isinstance(joint, Linear):
        return [joint.joint0, joint.la, joint.lb]
    return []


def _is_anchor(ref) -> bool:
    return isinstance(ref, (tuple, list)) and len(ref) == 2


def validate(spec: MechanismSpec) -> list[str]:
    """All structural rule violations, empty when the spec is well-formed."""
    errors = []
    seen: set[str] = set()
    for j in spec.joints:
        if not isinstance(j, (Static, Crank, Revolute, Linear)):
            errors.append(f"unknown joint kind: {j!r}")
            continue
        if j.name in seen:
            errors.append(f"duplicate joint name '{j.name}'")
        for ref in _refs(j):
            if _is_anchor(ref):
                continue
            if not isinstance(ref, str):
                errors.append(f"joint '{j.name}': invalid reference {ref!r}")
            elif ref not in seen:
                errors.append(f"joint '{j.name}': forward reference to '{ref}'")
        if isinstance(j, Crank):
            if j.distance <= 0:
                errors.append(f"joint '{j.name}': distance must be positive")
            if j.angle == 0:
                errors.append(f"joint '{j.name}': crank angle step must be nonzero")
        if isinstance(j, Revolute):
            if j.distance0 <= 0 or j.distance1 <= 0:
                errors.append(f"joint '{j.name}': distances must be positive")
        if isinstance(j, Linear):
            if j.revolute_radius <= 0:
                errors.append(f"joint '{j.name}': revolute_radius must be positive")
            if j.la == j.lb:
                errors.append(f"joint '{j.name}': line references must differ")
        seen.add(j.name)
    names = [j.name for j in spec.joints if isinstance(j, (Static, Crank, Revolute, Linear))]
    if names.count(spec.target_name) == 0:
        errors.append(f"missing target joint '{spec.target_name}'")
    elif names.count(spec.target_name) > 1:
        errors.append(f"multiple joints named '{spec.target_name}'")
    if not any(isinstance(j, Crank) for j in spec.joints):
        errors.append("mechanism has no crank (not actuated)")
    return errors


def _resolve(ref, positions) -> np.ndarray:
    if _is_anchor(ref):
        return np.array([float(ref[0]), float(ref[1])])
    return positions[ref]


def initial_positions(spec: MechanismSpec) -> dict:
    """Step-0 seed positions: anchors, declared guesses, or defaults.

    These seed branch selection only; actual step-0 positions come from
    ``solve_step``.
    """
    pos: dict[str, np.ndarray] = {}
    for j in spec.joints:
        if isinstance(j, Static):
            pos[j.name] = np.array([j.x, j.y], dtype=np.float64)
        elif j.x is not None and j.y is not None:
            pos[j.name] = np.array([j.x, j.y], dtype=np.float64)
        elif isinstance(j, Crank):
            pos[j.name] = _resolve(j.joint0, pos) + np.array([j.distance, 0.0])
        else:
            pos[j.name] = np.zeros(2)
    return pos


def crank_phases(spec: MechanismSpec, init: dict) -> dict:
    """Initial crank angles, derived from each crank's seed position."""
    phases = {}
    for j in spec.joints:
        if isinstance(j, Crank):
            parent = _resolve(j.joint0, init)
            d = init[j.name] - parent
            phases[j.name] = math.atan2(d[1], d[0]) if np.any(d != 0) else 0.0
    return phases


def _circle_circle(c0, r0, c1, r1, prev, joint: str):
    d = float(np.hypot(*(c1 - c0)))
    if d < 1e-15:
        if abs(r0 - r1) > _SLACK:
            raise UnreachableError(joint, "concentric circles with different radii")
        # Coincident centers: every direction works; stay toward prev.
        u = prev - c0
        n = float(np.hypot(*u))
        u = u / n if n > 1e-15 else np.array([1.0, 0.0])
        return c0 + r0 * u
    if d > r0 + r1 + _SLACK:
        raise UnreachableError(joint, f"circles disjoint (separation {d:.6g} > {r0:.6g}+{r1:.6g})")
    if d < abs(r0 - r1) - _SLACK:
        raise UnreachableError(joint, f"circle contained (separation {d:.6g} < |{r0:.6g}-{r1:.6g}|)")
    a = (d * d + r0 * r0 - r1 * r1) / (2 * d)
    h2 = r0 * r0 - a * a
    h = math.sqrt(h2) if h2 > 0 else 0.0
    u = (c1 - c0) / d
    perp = np.array([-u[1], u[0]])
    base = c0 + a * u
    p_plus = base + h * perp
    p_minus = base - h * perp
    if np.sum((p_plus - prev) ** 2) <= np.sum((p_minus - prev) ** 2):
        return p_plus
    return p_minus


def _circle_line(center, radius, la, lb, prev, joint: str):
    axis = lb - la
    norm = float(np.hypot(*axis))
    if norm < 1e-15:
        raise UnreachableError(joint, "degenerate line (identical reference points)")
    u = axis / norm
    rel = center - la
    along = float(rel @ u)
    foot = la + along * u
    off2 = float(np.sum((center - foot) ** 2))
    h2 = radius * radius - off2
    if h2 < -_SLACK * max(1.0, radius * radius):
        raise UnreachableError(joint, f"circle misses line (offset {math.sqrt(off2):.6g} > {radius:.6g})")
    h = math.sqrt(h2) if h2 > 0 else 0.0
    p_plus = foot + h * u
    p_minus = foot - h * u
    if np.sum((p_plus - prev) ** 2) <= np.sum((p_minus - prev) ** 2):
        return p_plus
    return p_minus


def solve_step(
    spec: MechanismSpec,
    prev_positions: dict,
    step_index: int,
    phases: dict | None = None,
) -> dict:
    """Positions of all joints at one step, raising ``UnreachableError`` on
    geometric infeasibility.

    Within a step, each joint sees the same-step positions of earlier
    joints; ``prev_positions`` drives branch selection only.
    """
    if phases is None:
        phases = crank_phases(spec, initial_positions(spec))
    pos: dict[str, np.ndarray] = {}
    for j in spec.joints:
        if isinstance(j, Static):
            pos[j.name] = np.array([j.x, j.y], dtype=np.float64)
        elif isinstance(j, Crank):
            phi = phases[j.name] + step_index * j.angle
            parent = _resolve(j.joint0, pos)
            pos[j.name] = parent + j.distance * np.array([math.cos(phi), math.sin(phi)])
        elif isinstance(j, Revolute):
            pos[j.name] = _circle_circle(
                _resolve(j.joint0, pos),
                j.distance0,
                _resolve(j.joint1, pos),
                j.distance1,
                prev_positions[j.name],
                j.name,
            )
        else:  # Linear
            pos[j.name] = _circle_line(
                _resolve(j.joint0, pos),
                j.revolute_radius,
                _resolve(j.la, pos),
                _resolve(j.lb, pos),
                prev_positions[j.name],
                j.name,
            )
    return pos


def default_steps(spec: MechanismSpec) -> int:
    """One full revolution of the slowest crank."""
    slowest = min(abs(j.angle) for j in spec.joints if isinstance(j, Crank))
    return max(1, math.ceil(2 * math.pi / slowest))


def simulate(spec: MechanismSpec, steps: int | None = None) -> SimResult:
    """Trace every joint for ``steps`` steps (default: one full cycle).

    Geometric infeasibility is recorded as data: the result carries the
    failing step, joint, and reason, with traces truncated at the failure.
    """
    errors = validate(spec)
    if errors:
        raise ValueError("invalid mechanism spec: " + "; ".join(errors))
    if steps is None:
        steps = default_steps(spec)
    if steps < 1:
        raise ValueError("steps must be positive")

    init = initial_positions(spec)
    phases = crank_phases(spec, init)
    traces: dict[str, list] = {j.name: [] for j in spec.joints}
    prev = init
    failure = None
    for k in range(steps):
        try:
            pos = solve_step(spec, prev, k, phases)
        except UnreachableError as exc:
            failure = StepFailure(
                step=k,
                joint=exc.joint,
                reason=f"unreachable configuration at step {k}, joint {exc.joint}: {exc.reason}",
            )
            break
        for name, p in pos.items():
            traces[name].append(p)
        prev = pos

    per_joint = {
        name: Trajectory(np.array(tr)) if tr else None for name, tr in traces.items()
    }
    target = per_joint.get(spec.target_name)
    return SimResult(
        trajectory=target,
        per_joint=per_joint,
        steps=steps,
        success=failure is None,
        failure=failure,
    )


def complexity(spec: MechanismSpec) -> int:
    """Structural complexity measure: the joint count."""
    return len(spec.joints)
