import math

import numpy as np
import pytest

import moebius_kit as mk
from moebius_kit.errors import InputError, NotEmbeddedError


def test_circle_length():
    c = mk.arclength_reparametrize(mk.circle(radius=1.0), nodes=4096, tol=1e-12)
    assert abs(c.length - 2.0 * math.pi) < 1e-10


def test_degenerate_curve_rejected():
    point = mk.ParametricCurve(
        lambda u: np.tile([1.0, 2.0], (np.asarray(u).size, 1)), "custom", {}, 2
    )
    with pytest.raises(InputError):
        mk.arclength_reparametrize(point, nodes=256)


def test_torus_knot_length_against_trapezoid(trefoil):
    # brute-force cumulative arc length on a dense trapezoid grid
    u = np.linspace(0.0, 1.0, 1_000_001)
    speeds = np.linalg.norm(mk.torus_knot(2, 3, 2.0, 1.0).velocity(u), axis=1)
    brute = np.trapezoid(speeds, u)
    assert abs(trefoil.length - brute) < 1e-7


def test_intrinsic_distance_values():
    assert mk.intrinsic_distance(1.0, 0.1, 0.9) == pytest.approx(0.2, abs=1e-15)
    assert mk.intrinsic_distance(1.0, 0.3, 0.3) == 0.0
    assert mk.intrinsic_distance(2.0 * math.pi, 0.0, math.pi) == pytest.approx(math.pi)


def test_intrinsic_distance_is_metric():
    L = 3.7
    rng = np.random.default_rng(0)
    s, t, r = rng.uniform(0, 10 * L, size=(3, 500))
    dst = mk.intrinsic_distance(L, s, t)
    assert np.allclose(dst, mk.intrinsic_distance(L, t, s))
    assert np.all(dst <= L / 2 + 1e-15)
    assert np.all(mk.intrinsic_distance(L, s, r) <= dst + mk.intrinsic_distance(L, t, r) + 1e-12)


def test_shortcut_inequality(circle_2pi, trefoil):
    rng = np.random.default_rng(1)
    for curve in (circle_2pi, trefoil):
        s, t = rng.uniform(0.0, curve.length, size=(2, 10_000))
        chord = np.linalg.norm(curve.eval(s) - curve.eval(t), axis=1)
        assert np.all(mk.intrinsic_distance(curve.length, s, t) >= chord - 1e-9 * curve.length)


def test_unit_speed(circle_2pi, ellipse_06, trefoil):
    rng = np.random.default_rng(2)
    for curve in (circle_2pi, ellipse_06, trefoil):
        s = rng.uniform(0.0, curve.length, size=256)
        h = curve.length * 1e-5
        speed = np.linalg.norm(curve.eval(s + h) - curve.eval(s - h), axis=1) / (2.0 * h)
        assert np.all(speed >= 1.0 - 1e-6)
        # chords never beat arcs; the 1e-7 slack is lookup-table interpolation noise
        assert np.all(speed <= 1.0 + 1e-7)


def test_periodicity_and_nondegeneracy():
    for curve in (mk.circle(1.0), mk.ellipse(1.0, 0.5), mk.torus_knot(2, 3, 2.0, 1.0),
                  mk.rounded_polygon(4, 1.0, 0.2)):
        curve.validate()
        p0 = curve(np.array([0.0]))
        p1 = curve(np.array([1.0 - 1e-16]))
        assert np.max(np.abs(p0 - p1)) < 1e-12


def test_lookup_table_monotone(trefoil):
    assert np.all(np.diff(trefoil.s_table) > 0.0)


def test_scale_equivariance():
    base = mk.ellipse(1.0, 0.5)
    L1 = mk.arclength_reparametrize(base, nodes=2048).length
    for lam in (2.0, 0.5):
        scaled = mk.ParametricCurve(lambda u, f=lam: f * base(u), "custom", {}, 2,
                                    lambda u, f=lam: f * base.velocity(u))
        L2 = mk.arclength_reparametrize(scaled, nodes=2048).length
        assert abs(L2 - lam * L1) < 1e-9 * L2


def test_curvature_bound_circle():
    for radius, expected in ((1.0, 1.0), (2.0, 0.5)):
        c = mk.arclength_reparametrize(mk.circle(radius=radius), nodes=2048)
        assert mk.curvature_bound(c) / 1.05 == pytest.approx(expected, rel=0.02)


def test_curvature_bound_torus_knot(trefoil):
    # dense finite-difference oracle for max |gamma''|
    m = 200_000
    h = trefoil.length / m
    pts = trefoil.eval(np.arange(m) * h)
    second = np.roll(pts, -1, axis=0) - 2.0 * pts + np.roll(pts, 1, axis=0)
    oracle = float(np.max(np.linalg.norm(second, axis=1))) / h**2
    assert mk.curvature_bound(trefoil, grid=4096) / 1.05 == pytest.approx(oracle, rel=0.02)


def test_curvature_bound_small_grid_rejected(circle_2pi):
    with pytest.raises(InputError):
        mk.curvature_bound(circle_2pi, grid=8)


def test_bilipschitz_circle(circle_2pi):
    # the arc/chord ratio (u/2)/sin(u/2) is maximized at the antipode: pi/2
    assert mk.bilipschitz_estimate(circle_2pi) / 1.05 == pytest.approx(math.pi / 2, rel=0.03)


def test_bilipschitz_ellipse(ellipse_06):
    est = mk.bilipschitz_estimate(ellipse_06)
    assert math.isfinite(est) and est >= 1.0


def test_bilipschitz_detects_double_point():
    # out-and-back segment traced from a sample table: exact double points
    t = np.linspace(0.0, 2.0 * math.pi, 65)[:-1]
    samples = np.stack([np.cos(t), np.zeros_like(t)], axis=1)
    flat = mk.from_samples(samples)
    with pytest.raises(NotEmbeddedError):
        mk.arclength_reparametrize(flat, nodes=1024)


def test_descriptor_loading():
    curve = mk.load_curve({"kind": "circle", "params": {"radius": 2.0}}, nodes=1024)
    assert curve.kind == "circle"
    assert abs(curve.length - 4.0 * math.pi) < 1e-8
    table = mk.load_curve({"samples": [[math.cos(a), math.sin(a)]
                                       for a in np.linspace(0, 2 * math.pi, 33)[:-1]]}, nodes=1024)
    assert table.kind == "samples"
    with pytest.raises(InputError):
        mk.parametric_from_descriptor({"kind": "hyperbola"})


def test_reparametrize_node_floor():
    with pytest.raises(InputError):
        mk.arclength_reparametrize(mk.circle(1.0), nodes=128)
