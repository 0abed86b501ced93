"""Minimization of the discrete Moebius energy over equilateral closed polygons.

Projected gradient descent: full Euclidean gradient of the discrete
energy (chords, weights, and intrinsic arc distances all differentiated
through the vertices), alternating projection back onto the
equal-edge-length closure constraint, and an Armijo backtracking line
search.  Rigid alignment utilities compare minimizers against regular
n-gons and circles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import ArcLengthCurve
from .energies import discrete_moebius_energy, regular_ngon_energy
from .errors import ConvergenceError, DoublePointError, InputError
from .polygon import ClosedPolygon


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 5000
    initial_step: float | None = None       # auto: 0.02 * L^2 / n^2 when None
    armijo_factor: float = 1e-4
    shrink_factor: float = 0.5
    grow_factor: float = 1.3
    grad_tol: float = 1e-9
    energy_tol: float = 1e-14
    projection_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.armijo_factor < 1.0:
            raise InputError("Armijo factor must lie in (0, 1)")
        if not 0.0 < self.shrink_factor < 1.0:
            raise InputError("shrink factor must lie in (0, 1)")
        for name in ("grad_tol", "energy_tol", "projection_tol"):
            if getattr(self, name) <= 0.0:
                raise InputError(f"{name} must be positive")


@dataclass
class DescentTrace:
    """Per-iteration descent record; energies are non-increasing over accepted steps."""

    energies: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    projection_residuals: list[float] = field(default_factory=list)
    final_polygon: ClosedPolygon | None = None
    termination: str = ""
    energy_gap: float = math.nan          # final energy minus the regular n-gon value
    barrier_pair: tuple | None = None     # offending vertex pair on "barrier" exits

    @property
    def iterations(self) -> int:
        return len(self.energies)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "energy", "grad_norm", "step"])
            for i, (e, g, s) in enumerate(zip(self.energies, self.grad_norms, self.steps)):
                writer.writerow([i, repr(e), repr(g), repr(s)])


def energy_gradient(p: ClosedPolygon, tie_tol: float = 1e-9) -> np.ndarray:
    """Euclidean gradient of the forward-weighted discrete energy.

    Differentiates chords, edge-length weights, and the intrinsic arc
    distances (through the vertex arc parameters).  Where the two arcs
    between a vertex pair tie (antipodal pairs on even equilateral
    polygons), the derivative of their minimum is taken as the branch
    average, matching central finite differences.  Expects a polygon that
    is equilateral to about 1e-9.
    """
    cert = p.equilaterality()
    if cert.max_edge_deviation > 1e-8:
        raise InputError(
            f"gradient expects an (almost) equilateral polygon; deviation {cert.max_edge_deviation:.2e}"
        )
    v = p.vertices
    n, dim = v.shape
    L = p.total_length
    ell = p.edge_lengths
    unit = p.unit_edges()
    a = p.arc_params

    diff = v[None, :, :] - v[:, None, :]          # diff[i, j] = v_j - v_i
    chord2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(chord2, np.inf)
    if chord2.min() < (1e-10 * L) ** 2:
        i, j = map(int, np.argwhere(chord2 == chord2.min())[0])
        raise DoublePointError(f"gradient undefined near double point ({i},{j})", pair=(i, j))

    s_fwd = np.mod(a[None, :] - a[:, None], L)    # arc i -> j through increasing index
    dint = np.minimum(s_fwd, L - s_fwd)
    np.fill_diagonal(dint, np.inf)
    T = 1.0 / chord2 - 1.0 / dint**2

    w = ell                                        # forward weights; ell_i <= L/2 for simple polygons

    # chord part: sum_j 4 w_m w_j (v_j - v_m) / r^4
    inv_r4 = 1.0 / chord2**2
    grad = 4.0 * w[:, None] * np.einsum("ij,ijk->ik", w[None, :] * inv_r4, diff)

    # weight part: d(w_i w_j)/dv through the edge lengths
    row = 2.0 * (T * w[None, :]).sum(axis=1)      # row[k] = 2 sum_j T_kj w_j
    edge_pull = row[:, None] * unit               # dE/d(ell_k) * unit_k
    grad += np.roll(edge_pull, 1, axis=0) - edge_pull

    # intrinsic part: d(-1/d^2)/dv = (2/d^3) dd/dv, dd/dl_k = 1 on the shorter arc
    iu, ju = np.triu_indices(n, 1)
    s1 = s_fwd[iu, ju]
    s2 = L - s1
    q = 4.0 * w[iu] * w[ju] / dint[iu, ju] ** 3   # both orders of each unordered pair
    bump = np.zeros(n + 1)
    near_tie = np.abs(s1 - s2) <= tie_tol * L
    take_fwd = (~near_tie) & (s1 < s2)
    take_bwd = (~near_tie) & (s1 > s2)

    def add_range(starts, ends, vals):
        # accumulate vals on edge index ranges [start, end) with wraparound
        wrap = ends > n
        np.add.at(bump, starts, vals)
        np.add.at(bump, np.where(wrap, n, ends), -vals)
        if np.any(wrap):
            np.add.at(bump, np.zeros(int(wrap.sum()), dtype=int), vals[wrap])
            np.add.at(bump, ends[wrap] - n, -vals[wrap])

    add_range(iu[take_fwd], ju[take_fwd], q[take_fwd])
    add_range(ju[take_bwd], iu[take_bwd] + n, q[take_bwd])
    add_range(iu[near_tie], ju[near_tie], 0.5 * q[near_tie])
    add_range(ju[near_tie], iu[near_tie] + n, 0.5 * q[near_tie])
    M = np.cumsum(bump[:n])
    arc_pull = M[:, None] * unit
    grad += np.roll(arc_pull, 1, axis=0) - arc_pull

    return grad


def project_equilateral_closed(vertices, projection_tol: float = 1e-12,
                               max_sweeps: int = 10_000) -> ClosedPolygon:
    """Project a vertex chain onto closed polygons with n equal edges.

    Alternates renormalizing every edge to L/n with subtracting the mean
    edge vector until the closure residual and the relative edge deviation
    both drop below tolerance; the result keeps the input's vertex centroid.
    """
    v = np.asarray(vertices, dtype=float)
    if isinstance(vertices, ClosedPolygon):
        v = vertices.vertices
    if v.ndim != 2 or v.shape[0] < 3:
        raise InputError("need at least 3 vertices")
    n = v.shape[0]
    centroid = v.mean(axis=0)
    e = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths == 0.0):
        raise InputError("degenerate chain: repeated consecutive vertices")
    target = lengths.sum() / n

    residuals = []
    for _ in range(max_sweeps):
        e *= target / np.linalg.norm(e, axis=1)[:, None]
        mean = e.mean(axis=0)
        e -= mean
        residual = float(np.linalg.norm(e.sum(axis=0)))
        deviation = float(np.max(np.abs(np.linalg.norm(e, axis=1) - target))) / target
        residuals.append(residual)
        if residual < projection_tol and deviation < 1e-12:
            break
    else:
        raise ConvergenceError(
            f"equilateral projection stalled; last residuals {['%.3e' % r for r in residuals[-5:]]}"
        )

    out = np.vstack([np.zeros(v.shape[1]), np.cumsum(e[:-1], axis=0)])
    out += centroid - out.mean(axis=0)
    return ClosedPolygon(out)


def minimize_discrete_energy(p0: ClosedPolygon, cfg: OptimizerConfig | None = None) -> DescentTrace:
    """Projected gradient descent for the discrete energy over the equilateral class.

    Steps along the negative gradient, projects back onto the constraint,
    and accepts by an Armijo sufficient-decrease test.  Terminates on the
    gradient norm, the energy decrease, the iteration budget, a collapsed
    step ("stalled"), or an approach to a double point ("barrier").
    """
    cfg = cfg or OptimizerConfig()
    cert = p0.equilaterality()
    p = p0 if cert.max_edge_deviation <= 1e-12 else project_equilateral_closed(
        p0.vertices, cfg.projection_tol
    )
    L = p.total_length
    n = p.n
    step = cfg.initial_step if cfg.initial_step is not None else 0.02 * L**2 / n**2
    trace = DescentTrace()
    energy = discrete_moebius_energy(p).value

    for _ in range(cfg.max_iterations):
        try:
            grad = energy_gradient(p)
        except DoublePointError as exc:
            trace.termination = "barrier"
            trace.barrier_pair = exc.pair
            break
        gnorm = float(np.max(np.linalg.norm(grad, axis=1)))
        gsq = float((grad * grad).sum())
        resid = p.equilaterality().closure_residual
        trace.energies.append(energy)
        trace.grad_norms.append(gnorm)
        trace.steps.append(step)
        trace.projection_residuals.append(resid)

        if gnorm < cfg.grad_tol:
            trace.termination = "gradient_tol"
            break

        accepted = False
        while step >= 1e-16 * L:
            try:
                candidate = project_equilateral_closed(p.vertices - step * grad, cfg.projection_tol)
                cand_energy = discrete_moebius_energy(candidate).value
            except (DoublePointError, ConvergenceError, InputError):
                step *= cfg.shrink_factor
                continue
            if cand_energy <= energy - cfg.armijo_factor * step * gsq:
                accepted = True
                break
            step *= cfg.shrink_factor
        if not accepted:
            trace.termination = "stalled"
            break

        decrease = energy - cand_energy
        p, energy = candidate, cand_energy
        if decrease < cfg.energy_tol * max(1.0, abs(energy)):
            trace.termination = "energy_tol"
            break
        step *= cfg.grow_factor
    else:
        trace.termination = "max_iterations"

    trace.final_polygon = p
    trace.energy_gap = energy - regular_ngon_energy(n)
    if not trace.energies or trace.energies[-1] != energy:
        try:
            gnorm = float(np.max(np.linalg.norm(energy_gradient(p), axis=1)))
        except DoublePointError:
            gnorm = math.nan
        trace.energies.append(energy)
        trace.grad_norms.append(gnorm)
        trace.steps.append(step)
        trace.projection_residuals.append(p.equilaterality().closure_residual)
    return trace


def _kabsch(source: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Best proper rotation + translation mapping source onto target (least squares)."""
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    H = (source - mu_s).T @ (target - mu_t)
    U, _, Vt = np.linalg.svd(H)
    sign = np.sign(np.linalg.det(U @ Vt))
    D = np.eye(H.shape[0])
    D[-1, -1] = sign if sign != 0 else 1.0
    R = (U @ D @ Vt).T
    t = mu_t - R @ mu_s
    moved = source @ R.T + t
    rms = float(np.sqrt(np.mean(np.sum((moved - target) ** 2, axis=1))))
    return R, t, rms


def align_rigid(p: ClosedPolygon, q) -> tuple[ClosedPolygon, float]:
    """Rigidly align p to a target polygon or curve, over cyclic shifts and orientations.

    The target is either a polygon with the same vertex count or an
    arc-length curve sampled at p's (proportionally matched) vertex
    parameters.  Rotation + translation only; reflections are reached by
    reversing the traversal order, never by improper rotations.  Returns
    the relabeled, transformed copy of p and the RMS residual; the
    smallest shift index wins ties.
    """
    if isinstance(q, ClosedPolygon):
        if q.n != p.n:
            raise InputError(f"vertex count mismatch: {p.n} vs {q.n}")
        if q.dim != p.dim:
            raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
        target = q.vertices
    elif isinstance(q, ArcLengthCurve):
        if q.dim != p.dim:
            raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
        target = q.eval(p.arc_params * (q.length / p.total_length))
    else:
        raise InputError(f"cannot align to {type(q).__name__}")

    n = p.n
    best = None
    idx = np.arange(n)
    for orientation in (1, -1):
        order = idx if orientation == 1 else (-idx) % n
        for shift in range(n):
            cand = p.vertices[(order + shift * orientation) % n]
            R, t, rms = _kabsch(cand, target)
            key = (rms, 0 if orientation == 1 else 1, shift)
            if best is None or key < best[0]:
                best = (key, cand @ R.T + t)
    (rms, _, _), aligned = best
    return ClosedPolygon(aligned), rms
