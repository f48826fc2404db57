import math

import numpy as np
import pytest

from mechsynth.curves import (
    DEFAULT_RANGES,
    FAMILIES,
    CurveSpec,
    TaskInstance,
    equation_text,
    generate_dataset,
    implicit_residual,
    naca_surface,
    parse_equation,
    read_dataset,
    sample_points,
    write_dataset,
)
from mechsynth.rng import SplitMix64


class TestImplicitResidual:
    def test_circle_on_curve(self):
        c = CurveSpec("circle", {"r": 1.0, "x1": 0.0, "y1": 0.0})
        assert implicit_residual(c, (1.0, 0.0)) == 0.0

    def test_lemniscate_right_lobe_vertex(self):
        c = CurveSpec("lemniscate", {"a": 1.0})
        assert abs(implicit_residual(c, (math.sqrt(2.0), 0.0))) < 1e-12

    def test_parabola_substitution(self):
        # direct substitution oracle: y - a(x-h)^2 - k = 5 - 2*1 - 3 = 0
        c = CurveSpec("parabola", {"a": 2.0, "h": 1.0, "k": 3.0})
        assert implicit_residual(c, (2.0, 5.0)) == 0.0
        assert implicit_residual(c, (2.0, 6.0)) == 1.0

    def test_line_off_curve_signs(self):
        c = CurveSpec("line", {"x1": 0.0, "y1": 0.0, "x2": 1.0, "y2": 0.0})
        assert implicit_residual(c, (0.5, 0.0)) == 0.0
        assert implicit_residual(c, (0.5, 1.0)) > 0.0

    def test_ellipse(self):
        c = CurveSpec("ellipse", {"a": 2.0, "b": 1.0, "x1": 0.0, "y1": 0.0})
        assert implicit_residual(c, (2.0, 0.0)) == 0.0
        assert implicit_residual(c, (0.0, 1.0)) == 0.0


class TestNaca:
    def test_leading_edge_thickness_zero(self):
        pt = naca_surface(12, 0.0, upper=True)  # symmetric 0012
        assert np.allclose(pt, [0.0, 0.0], atol=1e-15)

    def test_surfaces_coincide_at_leading_edge_with_camber(self):
        up = naca_surface(2412, 0.0, upper=True)
        lo = naca_surface(2412, 0.0, upper=False)
        assert np.allclose(up, lo, atol=1e-15)

    def test_open_trailing_edge_gap(self):
        # yt(1) = 5t * 0.0021, so the gap is ~2*yt(1)
        t = 0.12
        up = naca_surface(2412, 1.0, upper=True)
        lo = naca_surface(2412, 1.0, upper=False)
        gap = float(np.hypot(*(up - lo)))
        assert abs(gap - 2 * 5 * t * 0.0021) < 1e-4

    def test_on_surface_residual_is_zero(self):
        c = CurveSpec("naca", {"series": 2412})
        for x in (0.05, 0.3, 0.7, 0.95):
            for upper in (True, False):
                pt = naca_surface(2412, x, upper)
                assert abs(implicit_residual(c, tuple(pt))) < 1e-9

    def test_inside_negative_outside_positive(self):
        c = CurveSpec("naca", {"series": 2412})
        assert implicit_residual(c, (0.3, 0.02)) < 0.0
        assert implicit_residual(c, (0.3, 0.5)) > 0.0

    def test_degenerate_codes_do_not_crash(self):
        # p=0 with camber, and zero thickness, both inside the sampled range
        for series in (2000, 2090, 3000):
            c = CurveSpec("naca", {"series": series})
            traj = sample_points(c, 4)
            for pt in traj.points:
                assert abs(implicit_residual(c, pt)) < 1e-9


class TestSamplePoints:
    def test_circle_uniform_four(self):
        c = CurveSpec("circle", {"r": 1.0, "x1": 0.0, "y1": 0.0})
        pts = sample_points(c, 4).points
        expected = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        assert np.allclose(pts, expected, atol=1e-15)

    def test_lemniscate_theta_zero_vertex(self):
        c = CurveSpec("lemniscate", {"a": 1.0})
        pts = sample_points(c, 4).points
        assert abs(pts[0, 0] - math.sqrt(2.0)) < 1e-12
        assert abs(pts[0, 1]) < 1e-12

    def test_naca_leading_edge_first(self):
        c = CurveSpec("naca", {"series": 12})
        pts = sample_points(c, 4).points
        assert np.allclose(pts[0], [0.0, 0.0], atol=1e-15)

    def test_line_endpoints_included(self):
        c = CurveSpec("line", {"x1": 0.0, "y1": 0.0, "x2": 2.0, "y2": 2.0})
        pts = sample_points(c, 4).points
        assert np.allclose(pts[0], [0.0, 0.0])
        assert np.allclose(pts[-1], [2.0, 2.0])

    def test_random_mode_deterministic_and_on_curve(self):
        c = CurveSpec("ellipse", {"a": 2.0, "b": 1.0, "x1": 0.5, "y1": -0.25})
        a = sample_points(c, 16, seed=9, mode="random")
        b = sample_points(c, 16, seed=9, mode="random")
        assert a == b
        assert sample_points(c, 16, seed=10, mode="random") != a
        for pt in a.points:
            assert abs(implicit_residual(c, pt)) < 1e-9

    def test_rejects_nonpositive_n(self):
        c = CurveSpec("circle", {"r": 1.0, "x1": 0.0, "y1": 0.0})
        with pytest.raises(ValueError):
            sample_points(c, 0)


class TestEquationText:
    def test_circle_template(self):
        c = CurveSpec("circle", {"r": 2.0, "x1": 0.5, "y1": 1.0})
        assert equation_text(c) == "(x - 0.5)^2 + (y - 1)^2 = 4"

    def test_lemniscate_doubles_a_squared(self):
        c = CurveSpec("lemniscate", {"a": 1.5})
        assert equation_text(c) == "(x^2 + y^2)^2 = 4.5*(x^2 - y^2)"

    def test_unit_slope_line_simplifies(self):
        c = CurveSpec("line", {"x1": 0.0, "y1": 0.0, "x2": 1.0, "y2": 1.0})
        assert equation_text(c) == "y = x"

    def test_vertical_and_horizontal_lines(self):
        v = CurveSpec("line", {"x1": 3.0, "y1": 0.0, "x2": 3.0, "y2": 2.0})
        h = CurveSpec("line", {"x1": 0.0, "y1": -1.5, "x2": 2.0, "y2": -1.5})
        assert equation_text(v) == "x = 3"
        assert equation_text(h) == "y = -1.5"

    def test_negative_centers_fold_signs(self):
        c = CurveSpec("circle", {"r": 1.0, "x1": -0.25, "y1": 0.0})
        assert equation_text(c) == "(x + 0.25)^2 + y^2 = 1"

    def test_parabola(self):
        c = CurveSpec("parabola", {"a": 2.0, "h": 1.0, "k": 3.0})
        assert equation_text(c) == "y = 2*(x - 1)^2 + 3"
        d = CurveSpec("parabola", {"a": -1.0, "h": 0.0, "k": 0.0})
        assert equation_text(d) == "y = -x^2"

    def test_naca(self):
        assert equation_text(CurveSpec("naca", {"series": 2412})) == "naca(2412)"


def _line_slope_intercept(params):
    m = (params["y2"] - params["y1"]) / (params["x2"] - params["x1"])
    return m, params["y1"] - m * params["x1"]


class TestEquationRoundTrip:
    def test_randomized_round_trip_within_tolerance(self):
        rng = SplitMix64(99)
        for _ in range(300):
            fam = FAMILIES[rng.randint(0, len(FAMILIES) - 1)]
            ds = generate_dataset(
                seed=rng.randint(0, 10**6), families=(fam,), instances_per_family=1
            )
            curve = ds[0].curve
            back = parse_equation(equation_text(curve))
            assert back.family == curve.family
            if fam == "line":
                m1, c1 = _line_slope_intercept(curve.params)
                m2, c2 = _line_slope_intercept(back.params)
                scale = max(1.0, abs(m1), abs(c1))
                assert abs(m1 - m2) <= 1e-12 * scale
                assert abs(c1 - c2) <= 1e-12 * scale
            else:
                for key, val in curve.params.items():
                    assert abs(float(val) - float(back.params[key])) <= 1e-12 * max(
                        1.0, abs(float(val))
                    )

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_equation("x + y = banana")


class TestGenerateDataset:
    def test_cardinality_and_determinism(self):
        a = generate_dataset(seed=7, families=("circle",), instances_per_family=5)
        b = generate_dataset(seed=7, families=("circle",), instances_per_family=5)
        assert len(a) == 5
        assert [i.to_json() for i in a] == [i.to_json() for i in b]

    def test_seed_sensitivity(self):
        a = generate_dataset(seed=7, families=("circle",), instances_per_family=5)
        c = generate_dataset(seed=8, families=("circle",), instances_per_family=5)
        assert any(x.to_json() != y.to_json() for x, y in zip(a, c))

    def test_full_dataset_residuals(self):
        ds = generate_dataset(seed=7)
        assert len(ds) == 30
        for inst in ds:
            assert len(inst.target_points) == 4
            for pt in inst.target_points.points:
                assert abs(implicit_residual(inst.curve, pt)) <= 1e-9

    def test_parameters_within_ranges(self):
        ds = generate_dataset(seed=3)
        for inst in ds:
            fam, p = inst.curve.family, inst.curve.params
            if fam == "circle":
                assert DEFAULT_RANGES["circle"]["r"][0] <= p["r"] <= DEFAULT_RANGES["circle"]["r"][1]
            if fam == "line":
                assert math.hypot(p["x2"] - p["x1"], p["y2"] - p["y1"]) >= 0.5
            if fam == "parabola":
                assert 0.2 <= abs(p["a"]) <= 3.0
            if fam == "naca":
                assert 2000 <= p["series"] <= 3000

    def test_jsonl_round_trip(self, tmp_path):
        ds = generate_dataset(seed=11, instances_per_family=2)
        path = tmp_path / "dataset.jsonl"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert len(back) == len(ds)
        for orig, re in zip(ds, back):
            assert orig.id == re.id
            assert orig.curve == re.curve
            assert orig.equation_text == re.equation_text
            assert np.array_equal(orig.target_points.points, re.target_points.points)

    def test_byte_identical_serialization(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_dataset(generate_dataset(seed=5), p1)
        write_dataset(generate_dataset(seed=5), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestCurveSpecValidation:
    @pytest.mark.parametrize(
        "family,params",
        [
            ("circle", {"r": 0.0, "x1": 0.0, "y1": 0.0}),
            ("ellipse", {"a": -1.0, "b": 1.0, "x1": 0.0, "y1": 0.0}),
            ("line", {"x1": 1.0, "y1": 2.0, "x2": 1.0, "y2": 2.0}),
            ("parabola", {"a": 0.0, "h": 0.0, "k": 0.0}),
            ("lemniscate", {"a": 0.0}),
            ("naca", {"series": 12345}),
        ],
    )
    def test_invalid_params_rejected(self, family, params):
        with pytest.raises(ValueError):
            CurveSpec(family, params)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            CurveSpec("spiral", {"a": 1.0})
