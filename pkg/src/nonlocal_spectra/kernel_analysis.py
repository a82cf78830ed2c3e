"""Kernel classification and empirical Harnack-ratio experiments.

Classification checks, on a lattice of sample points, the three density
conditions that make the comparison machinery work: compactly supported
jumps (offsets from a ball of radius R stay inside reach(R)), a bounded
density, and uniform local positivity of the incoming mass
min over x in B_R of the integral of g(y, x - y) over y.  The reach function
reach(R) = R + (max support radius over B_R) is computed from the kernel
rather than user-supplied.

Harnack ratios are measured on harmonic extensions of random nonnegative
exterior data: the ratio of the windowed supremum to the center value, with
a grid-refinement trend.  A stable trend is positive evidence, growth is
failure evidence; neither is a theorem claim and the growth threshold is
tunable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_operator
from .eig import principal_eig
from .errors import EigenvalueNotPositive, NegativeSolution
from .grid import ball
from .kernels import ATOMIC, DENSITY, NONE, TRANSLATION_INVARIANT, JumpKernel


@dataclass
class KernelClassRow:
    radius: float
    reach: float
    density_bound: float
    incoming_mass: float
    compact_support: bool
    bounded_density: bool
    incoming_positivity: bool

    @property
    def passes(self):
        return self.compact_support and self.bounded_density and self.incoming_positivity


@dataclass
class KernelClassReport:
    rows: list
    density_applicable: bool
    density_class: bool
    support_containment_1d: bool
    points_inwards: list          # (domain description, bool)
    decay: list                   # (rho, sup over shell of mass * exp(rho^alpha))
    alpha: float

    def table_rows(self):
        out = []
        for r in self.rows:
            out.append((r.radius, r.reach, r.density_bound, r.incoming_mass, int(r.compact_support),
                        int(r.bounded_density), int(r.incoming_positivity), int(r.passes)))
        return out


def _lattice(h, radius, dimension):
    m = int(np.floor(radius / h + 1e-12))
    axis = np.arange(-m, m + 1) * h
    if dimension == 1:
        pts = axis.reshape(-1, 1)
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]


def _density_values(kernel, x_points, offsets):
    """Density of the measure at (x, offset) pairs: raw values masked to the
    declared per-point support, since the measure carries no mass beyond it."""
    if kernel.variant == TRANSLATION_INVARIANT:
        vals = np.asarray(kernel.density(offsets), dtype=float)
        vals = np.broadcast_to(vals, (len(x_points), len(offsets))).copy()
    else:
        vals = np.asarray(kernel.density(x_points, offsets), dtype=float)
    rad = kernel.support_radius_at(x_points)
    mask = np.linalg.norm(np.atleast_2d(offsets), axis=1)[None, :] \
        <= rad[:, None] + 1e-12
    return np.where(mask, vals, 0.0)


def kernel_classify(kernel: JumpKernel, R_samples, alpha, *, h, dimension=None,
                    domains=(), decay_radii=None) -> KernelClassReport:
    """Exhaustive lattice evaluation of the kernel hypotheses.

    The density conditions are evaluated only for density-type kernels
    (atomic measures have no density; the support and decay diagnostics
    still apply).  ``domains`` are candidate domains for the points-inwards
    check, each tested with a one-lattice-cell enlargement.
    """
    dimension = dimension or kernel.dimension
    has_density = kernel.variant in (DENSITY, TRANSLATION_INVARIANT)
    rows = []
    for R in sorted(R_samples):
        ball_r = _lattice(h, R, dimension)
        support_sup = kernel.max_support_radius(ball_r)
        reach = R + support_sup
        if not has_density:
            rows.append(KernelClassRow(radius=float(R), reach=float(reach),
                                       density_bound=np.nan, incoming_mass=np.nan,
                                       compact_support=True, bounded_density=True, incoming_positivity=False))
            continue
        ball_gamma = _lattice(h, reach, dimension)
        # (a): no offset from B_R may carry density beyond reach(R)
        probe = _lattice(h, reach + 2 * support_sup + h, dimension)
        far = probe[np.linalg.norm(probe, axis=1) > reach + 1e-9]
        compact_support = True
        if len(far):
            vals = _density_values(kernel, ball_r, far)
            compact_support = bool(vals.max(initial=0.0) <= 0.0)
        # (b): evaluate g(y, y - x) over x in B_R, y in B_gamma
        diffs = ball_gamma[:, None, :] - ball_r[None, :, :]
        density_bound = 0.0
        for j, y in enumerate(ball_gamma):
            vals = _density_values(kernel, y.reshape(1, -1), diffs[j])
            density_bound = max(density_bound, float(vals.max(initial=0.0)))
        bounded_density = bool(np.isfinite(density_bound))
        # (c): incoming-mass quadrature min over x in B_R
        cell = h ** dimension
        incoming = np.zeros(len(ball_r))
        for j, y in enumerate(ball_gamma):
            vals = _density_values(kernel, y.reshape(1, -1), -diffs[j])
            incoming += vals.ravel() * cell
        incoming_mass = float(incoming.min())
        rows.append(KernelClassRow(radius=float(R), reach=float(reach),
                                   density_bound=density_bound, incoming_mass=incoming_mass, compact_support=compact_support, bounded_density=bounded_density,
                                   incoming_positivity=bool(incoming_mass > 0)))
    density_class = has_density and all(r.passes for r in rows)
    h2 = dimension == 1 and all(np.isfinite(r.reach) for r in rows)
    inwards = []
    for dom in domains:
        lo, hi = dom.bounding_box()
        pad = h
        enlarged = _lattice(h, float(np.abs(np.concatenate([lo, hi])).max())
                            + pad + h, dimension)
        near = enlarged[dom.distance(enlarged) <= pad + 1e-12]
        offsets, weights = kernel.quadrature(near, h)
        ok = True
        if len(offsets):
            targets = near[:, None, :] + offsets[None, :, :]
            inside = dom.contains(targets.reshape(-1, dimension)).reshape(
                len(near), len(offsets))
            ok = bool(np.all(weights[~inside] <= 0))
        inwards.append((dom.describe(), ok))
    decay = []
    if decay_radii is None:
        decay_radii = [float(r) for r in R_samples]
    for rho in decay_radii:
        shell_pts = _lattice(h, rho + h / 2, dimension)
        radii = np.linalg.norm(shell_pts, axis=1)
        shell = shell_pts[np.abs(radii - rho) <= h / 2 + 1e-12]
        if not len(shell):
            continue
        mass = kernel.mass_at(shell, h)
        decay.append((float(rho), float((mass * np.exp(rho ** alpha)).max())))
    return KernelClassReport(rows=rows, density_applicable=has_density,
                             density_class=density_class, support_containment_1d=h2,
                             points_inwards=inwards, decay=decay,
                             alpha=float(alpha))


def nonlocal_harmonic(op, exterior_data, *, tol=1e-10, eig=None):
    """Harmonic extension: L u = 0 in the interior, u = data on the halo.

    Requires a certified positive principal rate (well-posedness), and a
    monotone assembly guarantees the result inherits the sign of the data;
    a negative component therefore flags an assembly defect.
    """
    g = np.asarray(exterior_data, dtype=float)
    if g.shape != (op.exterior.shape[1],):
        raise ValueError(
            f"exterior data has shape {g.shape}, expected "
            f"({op.exterior.shape[1]},)")
    if np.any(g < 0):
        raise ValueError("exterior data must be nonnegative")
    if eig is None:
        eig = principal_eig(op, tol=tol)
    if eig.value <= 3 * max(eig.residual, tol):
        raise EigenvalueNotPositive(
            f"principal rate {eig.value:.6g} does not certify the harmonic "
            "extension")
    rhs = -(op.exterior @ g)
    u = spla.spsolve(sp.csc_matrix(op.matrix), rhs)
    floor = float(u.min(initial=0.0))
    if floor < -1e-10 * max(1.0, float(np.abs(u).max())):
        raise NegativeSolution(
            f"harmonic extension dipped to {floor:.3g}; monotone structure "
            "is broken")
    return np.maximum(u, 0.0)


def _philox(seed, stream):
    return np.random.Generator(np.random.Philox(key=np.array(
        [seed, stream], dtype=np.uint64)))


@dataclass
class HarnackLevel:
    h: float
    max_ratio: float
    ratios: list


@dataclass
class HarnackReport:
    window_radius: float
    ambient_radius: float
    levels: list
    growth_factor: float          # max ratio at finest level / coarsest level
    growth_threshold: float
    failure_flag: bool            # growth beyond the threshold
    drift: float                  # max relative deviation from the coarse level

    def stable_within(self, fraction):
        return self.drift <= fraction


def _cell_data(seed, sample, h0, n_cells_per_axis, dimension):
    """Per-sample coarse-cell values: a fixed enumeration shared by all
    refinement levels so the data is the same function at every h."""
    gen = _philox(seed, sample)
    count = (2 * n_cells_per_axis + 1) ** dimension
    values = gen.random(count)

    def lookup(points):
        cells = np.floor(np.asarray(points) / h0 + 1e-9).astype(np.int64)
        cells = np.clip(cells, -n_cells_per_axis, n_cells_per_axis)
        flat = cells[:, 0] + n_cells_per_axis
        if dimension == 2:
            flat = flat * (2 * n_cells_per_axis + 1) + cells[:, 1] + n_cells_per_axis
        return values[flat]

    return lookup


def harnack_ratio(problem, R, n_samples, seed, *, h, refinements=2,
                  growth_threshold=2.0, tol=1e-9) -> HarnackReport:
    """Windowed sup over center value for random nonnegative exterior data.

    The ambient ball has radius 2*reach(2R + reach(2R)) computed from the
    kernel reach, so the window sits well inside the region where the
    harmonic equation holds.  Data is piecewise constant on the cells of the
    coarsest lattice and drawn from a counter-based stream keyed on
    (seed, sample): every sample is the same function at every refinement
    level and independent of scheduling.
    """
    kernel = problem.kernel
    probe = _lattice(h, max(4 * R, 1.0), problem.dimension)

    def reach(r):
        pts = _lattice(h, r, problem.dimension)
        return r + kernel.max_support_radius(pts if len(pts) else probe)

    double_reach = reach(2 * R + reach(2 * R))
    ambient = 2 * double_reach
    reach = ambient + kernel.max_support_radius(
        _lattice(h, ambient, problem.dimension)) + 4 * h
    n_cells = int(np.ceil(reach / h)) + 2
    levels = []
    for level in range(refinements + 1):
        hl = h / (2 ** level)
        op = problem.operator(ball(ambient, problem.dimension), hl)
        eig = principal_eig(op, tol=tol)
        coords = op.grid.interior_coords
        window = np.linalg.norm(coords, axis=1) <= R + 1e-12
        center = op.grid.anchor
        ext_coords = op.grid.exterior_coords
        ratios = []
        for sample in range(n_samples):
            lookup = _cell_data(seed, sample, h, n_cells, problem.dimension)
            data = lookup(ext_coords)
            u = nonlocal_harmonic(op, data, eig=eig)
            denom = u[center]
            ratios.append(float(u[window].max() / denom) if denom > 0
                          else np.inf)
        levels.append(HarnackLevel(h=hl, max_ratio=float(max(ratios)),
                                   ratios=ratios))
    base = levels[0].max_ratio
    growth = levels[-1].max_ratio / base if base > 0 else np.inf
    drift = max(abs(lv.max_ratio - base) / base for lv in levels) \
        if base > 0 else np.inf
    return HarnackReport(window_radius=float(R), ambient_radius=float(ambient),
                         levels=levels, growth_factor=float(growth),
                         growth_threshold=float(growth_threshold),
                         failure_flag=bool(growth >= growth_threshold),
                         drift=float(drift))
