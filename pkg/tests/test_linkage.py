import math

import numpy as np
import pytest

from mechsynth.linkage import (
    Crank,
    Linear,
    MechanismSpec,
    Revolute,
    Static,
    UnreachableError,
    complexity,
    default_steps,
    initial_positions,
    simulate,
    solve_step,
    validate,
)


def unit_crank(angle=0.1):
    return MechanismSpec([Crank("target", (0.0, 0.0), 1.0, angle)])


def grashof_fourbar(angle=0.1):
    # lengths: crank 2, coupler 5, rocker 4, ground 5 -> s+l = 7 <= p+q = 9
    return MechanismSpec(
        [
            Crank("crank", (0.0, 0.0), 2.0, angle, x=2.0, y=0.0),
            Revolute("target", "crank", 5.0, (5.0, 0.0), 4.0, x=4.0, y=3.0),
        ]
    )


class TestValidate:
    def test_valid_chain(self):
        assert validate(grashof_fourbar()) == []

    def test_missing_target(self):
        spec = MechanismSpec([Crank("crank", (0.0, 0.0), 1.0, 0.1)])
        assert any("missing target" in e for e in validate(spec))

    def test_forward_reference(self):
        spec = MechanismSpec(
            [
                Crank("target", "later", 1.0, 0.1),
                Static("later", 0.0, 0.0),
            ]
        )
        assert any("forward reference" in e for e in validate(spec))

    def test_duplicate_names(self):
        spec = MechanismSpec(
            [Crank("target", (0.0, 0.0), 1.0, 0.1), Static("target", 0.0, 0.0)]
        )
        assert any("duplicate" in e for e in validate(spec))

    def test_no_crank(self):
        spec = MechanismSpec([Static("target", 0.0, 0.0)])
        assert any("no crank" in e for e in validate(spec))

    def test_nonpositive_distance(self):
        spec = MechanismSpec([Crank("target", (0.0, 0.0), -1.0, 0.1)])
        assert any("distance must be positive" in e for e in validate(spec))

    def test_zero_angle_step(self):
        spec = MechanismSpec([Crank("target", (0.0, 0.0), 1.0, 0.0)])
        assert any("angle step" in e for e in validate(spec))

    def test_identical_line_refs(self):
        spec = MechanismSpec(
            [
                Crank("crank", (0.0, 0.0), 1.0, 0.1),
                Linear("target", "crank", 1.5, (0.0, 0.0), (0.0, 0.0)),
            ]
        )
        assert any("line references" in e for e in validate(spec))


class TestSolveStep:
    def test_crank_quarter_turn(self):
        spec = unit_crank(angle=math.pi / 2)
        prev = initial_positions(spec)
        pos = solve_step(spec, prev, 1)
        assert np.allclose(pos["target"], [0.0, 1.0], atol=1e-15)

    def test_revolute_upper_branch(self):
        # circle-circle oracle: centers (0,0) r=2 and (2,0) r=2 meet at (1, +-sqrt3)
        spec = MechanismSpec(
            [
                Crank("crank", (9.0, 9.0), 1.0, 0.1),
                Revolute("target", (0.0, 0.0), 2.0, (2.0, 0.0), 2.0, x=1.0, y=1.0),
            ]
        )
        pos = solve_step(spec, initial_positions(spec), 0)
        assert np.allclose(pos["target"], [1.0, math.sqrt(3.0)], atol=1e-12)

    def test_revolute_lower_branch_follows_previous(self):
        spec = MechanismSpec(
            [
                Crank("crank", (9.0, 9.0), 1.0, 0.1),
                Revolute("target", (0.0, 0.0), 2.0, (2.0, 0.0), 2.0, x=1.0, y=-1.0),
            ]
        )
        pos = solve_step(spec, initial_positions(spec), 0)
        assert np.allclose(pos["target"], [1.0, -math.sqrt(3.0)], atol=1e-12)

    def test_disjoint_circles_unreachable(self):
        spec = MechanismSpec(
            [
                Crank("crank", (9.0, 9.0), 1.0, 0.1),
                Revolute("target", (0.0, 0.0), 1.0, (10.0, 0.0), 1.0, x=5.0, y=0.0),
            ]
        )
        with pytest.raises(UnreachableError):
            solve_step(spec, initial_positions(spec), 0)

    def test_linear_projects_onto_line(self):
        spec = MechanismSpec(
            [
                Crank("crank", (0.0, 0.0), 1.0, 0.1, x=0.0, y=1.0),
                Linear("target", "crank", 1.5, (0.0, 0.0), (1.0, 0.0), x=2.0, y=0.0),
            ]
        )
        pos = solve_step(spec, initial_positions(spec), 0)
        assert abs(pos["target"][1]) < 1e-15  # on the x-axis line
        assert abs(np.hypot(*(pos["target"] - pos["crank"])) - 1.5) < 1e-12

    def test_tangent_circles_within_slack(self):
        spec = MechanismSpec(
            [
                Crank("crank", (9.0, 9.0), 1.0, 0.1),
                Revolute("target", (0.0, 0.0), 1.0, (2.0, 0.0), 1.0, x=1.0, y=0.5),
            ]
        )
        pos = solve_step(spec, initial_positions(spec), 0)
        assert np.allclose(pos["target"], [1.0, 0.0], atol=1e-9)


class TestSimulate:
    def test_unit_crank_full_cycle(self):
        sim = simulate(unit_crank(0.1))
        assert sim.success
        assert sim.steps == 63  # ceil(2*pi / 0.1)
        assert len(sim.trajectory) == 63
        radius = np.hypot(sim.trajectory.points[:, 0], sim.trajectory.points[:, 1])
        assert np.abs(radius - 1.0).max() <= 1e-12
        gap = np.hypot(*(sim.trajectory.points[-1] - sim.trajectory.points[0]))
        assert gap <= 0.1  # within one step's arc of closure

    def test_grashof_fourbar_completes_cycle(self):
        spec = grashof_fourbar(angle=2 * math.pi / 64)
        sim = simulate(spec, steps=65)  # last step returns to the start angle
        assert sim.success
        pts = sim.trajectory.points
        crank_pts = sim.per_joint["crank"].points
        # link-length conservation at every step
        assert np.abs(np.hypot(*(pts - crank_pts).T) - 5.0).max() <= 1e-9
        assert np.abs(np.hypot(*(pts - [5.0, 0.0]).T) - 4.0).max() <= 1e-9
        # closed coupler trace
        assert np.hypot(*(pts[-1] - pts[0])) <= 1e-6

    def test_branch_stability_no_jumps(self):
        spec = grashof_fourbar(angle=0.05)
        sim = simulate(spec)
        pts = sim.trajectory.points
        jumps = np.hypot(*np.diff(pts, axis=0).T)
        assert jumps.max() <= 2 * 5.0 * 0.05

    def test_non_grashof_fails_at_predicted_step(self):
        # crank 2 at origin, coupler 2, rocker 2 anchored at (5,0):
        # reachable iff 29 - 20*cos(phi) <= 16, i.e. phi <= acos(13/20) ~ 0.863.
        # with step 0.1 the first failing step index is 9.
        spec = MechanismSpec(
            [
                Crank("crank", (0.0, 0.0), 2.0, 0.1, x=2.0, y=0.0),
                Revolute("target", "crank", 2.0, (5.0, 0.0), 2.0, x=3.5, y=1.0),
            ]
        )
        sim = simulate(spec)
        assert not sim.success
        assert sim.failure.step == 9
        assert sim.failure.joint == "target"
        assert "unreachable" in sim.failure.reason
        # trajectory truncated at the failure step
        assert len(sim.trajectory) == 9

    def test_failure_at_step_zero_gives_empty_trace(self):
        spec = MechanismSpec(
            [
                Crank("crank", (0.0, 0.0), 1.0, 0.1),
                Revolute("target", "crank", 0.5, (10.0, 0.0), 0.5, x=5.0, y=0.0),
            ]
        )
        sim = simulate(spec)
        assert not sim.success
        assert sim.failure.step == 0
        assert sim.trajectory is None

    def test_invalid_spec_raises(self):
        with pytest.raises(ValueError):
            simulate(MechanismSpec([Static("target", 0.0, 0.0)]))

    def test_determinism(self):
        a = simulate(grashof_fourbar())
        b = simulate(grashof_fourbar())
        assert np.array_equal(a.trajectory.points, b.trajectory.points)

    def test_default_steps_slowest_crank(self):
        spec = MechanismSpec(
            [
                Crank("fast", (0.0, 0.0), 1.0, 0.5),
                Crank("target", (3.0, 0.0), 1.0, 0.1),
            ]
        )
        assert default_steps(spec) == 63

    def test_moving_crank_parent(self):
        # a crank mounted on a crank: epicyclic trace, still conserves radii
        spec = MechanismSpec(
            [
                Crank("arm", (0.0, 0.0), 2.0, 0.1, x=2.0, y=0.0),
                Crank("target", "arm", 0.5, 0.3, x=2.5, y=0.0),
            ]
        )
        sim = simulate(spec)
        assert sim.success
        arm = sim.per_joint["arm"].points
        tgt = sim.trajectory.points
        assert np.abs(np.hypot(*(tgt - arm).T) - 0.5).max() <= 1e-12


class TestComplexity:
    def test_two_joint_example(self):
        spec = MechanismSpec(
            [
                Crank("crank", (0.0, 0.0), 1.0, 0.1),
                Linear("target", "crank", 1.5, (0.0, 0.0), (1.0, 0.0)),
            ]
        )
        assert complexity(spec) == 2

    def test_four_joint_fourbar(self):
        spec = MechanismSpec(
            [
                Static("ground", 0.0, 0.0),
                Static("post", 5.0, 0.0),
                Crank("crank", "ground", 2.0, 0.1, x=2.0, y=0.0),
                Revolute("target", "crank", 5.0, "post", 4.0, x=4.0, y=3.0),
            ]
        )
        assert complexity(spec) == 4
