import math

import numpy as np
import pytest

import moebius_kit as mk
from moebius_kit.errors import DoublePointError, InputError


def rotation_2d(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def fd_gradient(p, h):
    v = p.vertices
    g = np.zeros_like(v)
    for i in range(v.shape[0]):
        for k in range(v.shape[1]):
            vp = v.copy()
            vp[i, k] += h
            vm = v.copy()
            vm[i, k] -= h
            g[i, k] = (
                mk.discrete_moebius_energy(mk.ClosedPolygon(vp)).value
                - mk.discrete_moebius_energy(mk.ClosedPolygon(vm)).value
            ) / (2.0 * h)
    return g


class TestGradient:
    @pytest.mark.parametrize("n,dim,seed", [(12, 3, 0), (12, 2, 1), (9, 3, 2), (16, 3, 3)])
    def test_matches_central_differences(self, n, dim, seed):
        p = mk.random_equilateral_polygon(n, dim=dim, seed=seed)
        analytic = mk.energy_gradient(p)
        numeric = fd_gradient(p, 1e-6 * p.total_length)
        rel = np.abs(analytic - numeric).max() / np.abs(numeric).max()
        assert rel < 1e-5

    def test_translation_and_rotation_invariance(self):
        p = mk.random_equilateral_polygon(14, dim=3, seed=4)
        g = mk.energy_gradient(p)
        scale = np.abs(g).max()
        assert np.linalg.norm(g.sum(axis=0)) <= 1e-10 * max(1.0, scale)
        torque = np.cross(p.vertices, g).sum(axis=0)
        assert np.linalg.norm(torque) <= 1e-8 * max(1.0, scale)

    def test_regular_ngon_is_critical(self):
        for n in (4, 7, 16):
            g = mk.energy_gradient(mk.regular_ngon(n, 1.0))
            assert np.abs(g).max() <= 1e-8

    def test_translated_polygon_same_gradient(self):
        p = mk.random_equilateral_polygon(10, dim=3, seed=5)
        moved = mk.ClosedPolygon(p.vertices + np.array([3.0, -2.0, 0.5]))
        g0 = mk.energy_gradient(p)
        g1 = mk.energy_gradient(moved)
        assert np.abs(g0 - g1).max() <= 1e-9 * max(1.0, np.abs(g0).max())

    def test_double_point_rejected(self):
        v = mk.regular_ngon(8, 1.0).vertices.copy()
        v[4] = v[0] + 1e-12
        with pytest.raises((DoublePointError, InputError)):
            mk.energy_gradient(mk.ClosedPolygon(v))


class TestProjection:
    def test_fixed_point(self):
        g = mk.regular_ngon(12, 1.0)
        out = mk.project_equilateral_closed(g.vertices)
        assert np.abs(out.vertices - g.vertices).max() <= 1e-13

    def test_nudged_square_stays_close(self):
        sq = mk.regular_ngon(4, 1.0)
        v = sq.vertices.copy()
        v[2] += np.array([1e-3, -0.5e-3])
        out = mk.project_equilateral_closed(v)
        cert = out.equilaterality()
        assert cert.max_edge_deviation <= 1e-12
        hausdorff = max(
            np.linalg.norm(out.vertices[:, None, :] - v[None, :, :], axis=2).min(axis=1).max(),
            np.linalg.norm(v[:, None, :] - out.vertices[None, :, :], axis=2).min(axis=1).max(),
        )
        assert hausdorff <= 2e-3

    def test_random_chain_closes_with_same_centroid(self):
        rng = np.random.default_rng(6)
        chain = rng.standard_normal((20, 3))
        out = mk.project_equilateral_closed(chain)
        cert = out.equilaterality()
        assert cert.max_edge_deviation <= 1e-12
        assert cert.closure_residual <= 1e-12
        assert np.linalg.norm(out.vertices.mean(axis=0) - chain.mean(axis=0)) <= 1e-12


class TestDescent:
    def test_perturbed_square_recovers_regular(self):
        rng = np.random.default_rng(7)
        g = mk.regular_ngon(4, 1.0)
        noise = rng.standard_normal(g.vertices.shape)
        noise /= np.linalg.norm(noise, axis=1)[:, None]
        start = mk.ClosedPolygon(g.vertices + 0.01 * 0.25 * noise)
        trace = mk.minimize_discrete_energy(start)
        assert trace.energy_gap < 1e-8
        aligned, residual = mk.align_rigid(
            trace.final_polygon, mk.regular_ngon(4, trace.final_polygon.total_length)
        )
        assert residual < 1e-4

    def test_starts_at_critical_point(self):
        trace = mk.minimize_discrete_energy(mk.regular_ngon(8, 1.0))
        assert trace.termination == "gradient_tol"
        assert trace.iterations <= 2

    def test_random_16gons_respect_minimality(self):
        floor = mk.regular_ngon_energy(16)
        for seed in range(3):
            start = mk.random_equilateral_polygon(16, dim=3, seed=seed)
            trace = mk.minimize_discrete_energy(start)
            assert trace.energies[-1] >= floor - 1e-9

    def test_trace_monotone_and_feasible(self):
        start = mk.random_equilateral_polygon(12, dim=3, seed=8)
        trace = mk.minimize_discrete_energy(start)
        energies = np.asarray(trace.energies)
        assert np.all(np.diff(energies) <= 1e-12)
        assert all(r <= 1e-11 for r in trace.projection_residuals)
        assert trace.final_polygon.equilaterality().max_edge_deviation <= 1e-12

    def test_equivariance_under_rigid_motion(self):
        start = mk.random_equilateral_polygon(8, dim=2, seed=9)
        R = rotation_2d(0.7)
        t = np.array([0.3, -1.2])
        moved = mk.ClosedPolygon(start.vertices @ R.T + t)
        trace_a = mk.minimize_discrete_energy(start)
        trace_b = mk.minimize_discrete_energy(moved)
        expected = trace_a.final_polygon.vertices @ R.T + t
        assert np.abs(trace_b.final_polygon.vertices - expected).max() <= 1e-6

    def test_trace_csv(self, tmp_path):
        trace = mk.minimize_discrete_energy(mk.random_equilateral_polygon(8, dim=3, seed=10))
        path = tmp_path / "trace.csv"
        trace.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iter,energy,grad_norm,step"
        assert len(lines) == trace.iterations + 1


class TestAlignRigid:
    def test_exact_rigid_match(self):
        p = mk.random_equilateral_polygon(10, dim=3, seed=11)
        angle_axis = np.array([0.2, 0.5, -0.3])
        theta = np.linalg.norm(angle_axis)
        k = angle_axis / theta
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        R = np.eye(3) + math.sin(theta) * K + (1 - math.cos(theta)) * (K @ K)
        q = mk.ClosedPolygon(np.roll(p.vertices, 3, axis=0) @ R.T + np.array([1.0, 2.0, 3.0]))
        _, residual = mk.align_rigid(p, q)
        assert residual <= 1e-12

    def test_regular_ngon_on_circumcircle(self):
        g = mk.regular_ngon(12, 1.0)
        radius = float(np.linalg.norm(g.vertices[0]))
        circ = mk.arclength_reparametrize(mk.circle(radius=radius), nodes=1024, tol=1e-12)
        _, residual = mk.align_rigid(g, circ)
        assert residual <= 1e-9

    def test_reversed_traversal_matched_by_orientation_flip(self):
        p = mk.random_equilateral_polygon(9, dim=2, seed=12)
        reversed_ = mk.ClosedPolygon(p.vertices[::-1].copy())
        _, residual = mk.align_rigid(reversed_, p)
        assert residual <= 1e-12

    def test_mirrored_planar_polygon_in_3d(self):
        flat = mk.random_equilateral_polygon(9, dim=2, seed=12)
        p = mk.ClosedPolygon(np.column_stack([flat.vertices, np.zeros(9)]))
        # an in-plane reflection of a planar polygon is a rotation of R^3
        mirrored = mk.ClosedPolygon(p.vertices * np.array([-1.0, 1.0, 1.0]))
        _, residual = mk.align_rigid(mirrored, p)
        assert residual <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            mk.align_rigid(mk.regular_ngon(5, 1.0, dim=2), mk.regular_ngon(5, 1.0, dim=3))
