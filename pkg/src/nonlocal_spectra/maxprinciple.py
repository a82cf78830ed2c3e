"""Auxiliary eigenvalue estimates and maximum-principle checks on truncations.

Two one-parameter families of linear feasibility problems are bisected:

* the largest rate admitting a witness phi >= 1 (on interior plus the stored
  exterior ring, capped at phi_max) with  L phi + lambda phi <= 0  -- the
  uniformly-positive-subsolution value;
* the smallest rate admitting a bounded witness, same box constraints, with
  L phi + lambda phi >= 0  -- the bounded-supersolution value.

Both are truncation surrogates for whole-space quantities: the exterior ring
stands in for "bounded below away from zero at infinity" and the cap for
boundedness, and estimates are reported together with cap sensitivity rather
than as converged continuum values.

For monotone schemes feasibility is decided by iterating the row-wise
resolvent (a monotone fixed point); other operators fall back to a phase-1
linear program.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteOperator
from .errors import (BracketInvalid, EigenvalueNotPositive, SingularSystem,
                     UnboundedRatio)
from .eig import EigenResult, principal_eig
from .grid import SpatialGrid
from .kernels import JumpKernel
from .sweep import sweep

SUBSOLUTION = "subsolution"        # L phi + lambda phi <= 0
SUPERSOLUTION = "supersolution"    # L phi + lambda phi >= 0

_FEAS_MAX_ITER = 3000
_FEAS_TOL = 1e-10


@dataclass
class FeasibilityProblem:
    """One feasibility instance: box-constrained witness for a trial rate."""

    op: DiscreteOperator
    sense: str
    phi_max: float
    lam: float

    def __post_init__(self):
        if self.phi_max <= 1.0:
            raise ValueError("phi_max must exceed the lower bound 1")
        if self.sense not in (SUBSOLUTION, SUPERSOLUTION):
            raise ValueError(f"unknown sense {self.sense!r}")

    def split(self):
        matrix = self.op.matrix
        diag = matrix.diagonal() + self.lam
        off = (matrix - sp.diags(matrix.diagonal())).tocsr()
        return diag, off

    def check(self) -> bool:
        if self.op.is_monotone_scheme:
            return self._check_fixed_point()
        return self._check_lp()

    # -- monotone fixed point ---------------------------------------------------

    def _check_fixed_point(self) -> bool:
        diag, off = self.split()
        n = self.op.n
        ext_unit = (np.asarray(self.op.exterior.sum(axis=1)).ravel()
                    if self.op.exterior.shape[1] else np.zeros(n))
        if self.sense == SUBSOLUTION:
            ext = ext_unit  # leaving the exterior witness at its floor helps
            # rows with nonnegative shifted diagonal admit no witness unless
            # the whole row vanishes (ties resolve feasible)
            dead = diag >= 0
            if np.any(dead):
                incoming = np.asarray(np.abs(off[dead]).sum(axis=1)).ravel()
                if np.any((diag[dead] > _FEAS_TOL)
                          | (incoming + ext[dead] > _FEAS_TOL)):
                    return False
                diag = np.where(dead, -_FEAS_TOL, diag)
            phi = np.ones(n)
            ascending = True
        else:
            ext = ext_unit * self.phi_max  # the cap helps a supersolution
            free = diag >= 0               # rows satisfied anywhere in the box
            diag = np.where(free, -1.0, diag)
            phi = np.full(n, self.phi_max)
            ascending = False
        checkpoint = None
        rate = 0.0
        delta = np.inf
        for it in range(1, _FEAS_MAX_ITER + 1):
            target = (off @ phi + ext) / (-diag)
            if ascending:
                nxt = np.maximum(1.0, target)
                if nxt.max() > self.phi_max:
                    return False
            else:
                nxt = np.minimum(self.phi_max, np.where(free, self.phi_max, target))
                if nxt.min() < 1.0:
                    return False
            delta = float(np.abs(nxt - phi).max())
            phi = nxt
            if delta <= _FEAS_TOL * max(1.0, float(np.abs(phi).max())):
                return True
            if it % 50 == 0:
                if checkpoint is not None and checkpoint > 0:
                    rate = (delta / checkpoint) ** (1.0 / 50.0)
                    # a monotone orbit that stopped contracting is divergent
                    if it >= 150 and rate >= 1.0 - 1e-6:
                        return False
                checkpoint = delta
        if rate >= 1.0 - 1e-6:
            return False
        tail = delta * rate / (1.0 - rate)
        if ascending:
            return float(phi.max()) + tail <= self.phi_max
        return float(phi.min()) - tail >= 1.0

    # -- linear-programming fallback ---------------------------------------------

    def _check_lp(self) -> bool:
        from scipy.optimize import linprog

        n = self.op.n
        m = self.op.exterior.shape[1]
        rows = sp.hstack([self.op.matrix
                          + self.lam * sp.identity(n, format="csr"),
                          self.op.exterior]).tocsr()
        sign = 1.0 if self.sense == SUBSOLUTION else -1.0
        res = linprog(c=np.zeros(n + m), A_ub=sign * rows,
                      b_ub=np.zeros(n), bounds=(1.0, self.phi_max),
                      method="highs")
        if res.status == 0:
            return True
        if res.status == 2:
            return False
        raise RuntimeError(f"feasibility LP failed: {res.message}")


def _bisect(op, phi_max, bisect_tol, bracket, sense):
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise BracketInvalid(f"bracket {bracket} is not increasing")

    def feasible(lam):
        return FeasibilityProblem(op, sense, phi_max, lam).check()

    f_lo, f_hi = feasible(lo), feasible(hi)
    want_low = sense == SUBSOLUTION  # feasibility holds at small rates
    if f_lo == f_hi:
        raise BracketInvalid(
            f"bracket endpoints are both {'feasible' if f_lo else 'infeasible'}")
    if want_low and not f_lo:
        raise BracketInvalid("lower endpoint must be feasible for this sense")
    if not want_low and not f_hi:
        raise BracketInvalid("upper endpoint must be feasible for this sense")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid) == want_low:
            lo = mid
        else:
            hi = mid
    return lo if want_low else hi


def lambda_double_prime(op: DiscreteOperator, phi_max, bisect_tol, bracket) -> float:
    """Largest rate with a subsolution witness >= 1 on the truncation.

    The result is floored (asserted, not clamped) by minus the maximum of the
    potential: the constant witness certifies every rate below that.
    """
    value = _bisect(op, phi_max, bisect_tol, bracket, SUBSOLUTION)
    if op.coefficients is not None:
        floor = -float(op.coefficients.c.max())
        if value < floor - bisect_tol:
            raise AssertionError(
                f"bisection result {value:.6g} fell below the constant-witness "
                f"floor {floor:.6g}")
    return float(value)


def lambda_prime(op: DiscreteOperator, phi_max, bisect_tol, bracket) -> float:
    """Smallest rate with a bounded supersolution witness on the truncation."""
    return float(_bisect(op, phi_max, bisect_tol, bracket, SUPERSOLUTION))


def cap_sensitivity(op, phi_max, bisect_tol, bracket, sense=SUBSOLUTION,
                    factors=(0.1, 1.0, 10.0)):
    """Estimates across a sweep of witness caps (truncation diagnostics)."""
    out = []
    for f in factors:
        cap = max(1.0 + 1e-6, phi_max * f)
        fn = lambda_double_prime if sense == SUBSOLUTION else lambda_prime
        out.append((cap, fn(op, cap, bisect_tol, bracket)))
    return out


@dataclass
class MPCheckResult:
    verdict: str                   # "PASS" or "FAIL"
    witness: np.ndarray            # solution u (PASS) or eigenfunction (FAIL)
    eigen: EigenResult
    max_u: float = 0.0


def refined_mp_check(op: DiscreteOperator, f, tol=1e-10) -> MPCheckResult:
    """Solve L u = f (f >= 0, zero exterior data) and test the sign of u.

    With a positive principal rate the solution must be nonpositive; with a
    negative rate the eigenfunction itself is returned as the explicit
    counterexample (positive, with a nonnegative image under L).  A rate
    indistinguishable from zero is refused rather than divided through.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("refined_mp_check expects a nonnegative source")
    eig = principal_eig(op, tol=tol)
    if abs(eig.value) <= 3 * max(eig.residual, tol):
        raise SingularSystem(
            f"principal rate {eig.value:.3g} is zero within residual; "
            "the Dirichlet problem is not certifiably solvable")
    if eig.value < 0:
        return MPCheckResult(verdict="FAIL", witness=eig.psi, eigen=eig,
                             max_u=float(eig.psi.max()))
    u = spla.spsolve(sp.csc_matrix(op.matrix), f)
    scale = float(np.abs(u).max()) if np.any(u) else 0.0
    verdict = "PASS" if float(u.max(initial=0.0)) <= 1e-8 * scale else "FAIL"
    return MPCheckResult(verdict=verdict, witness=u, eigen=eig,
                         max_u=float(u.max(initial=0.0)))


EXP = "EXP"
POLY = "POLY"


@dataclass
class BarrierResult:
    kind: str
    sigma: float
    chi_interior: np.ndarray
    chi_exterior: np.ndarray
    growth_bound: float            # max of (L chi)/chi over nodes outside B_1
    argmax_radius: float


def barrier(kind, sigma, grid: SpatialGrid, coeffs, kernel: JumpKernel,
            guard=1e12) -> BarrierResult:
    """Exponential or power barrier evaluated through the assembled rows.

    chi is exp(sigma*|x|) (or |x|^sigma) outside the unit ball and the
    matched constant inside, the transition resolved within one grid cell.
    The certified outcome is a finite maximum of (L chi)/chi over interior
    nodes outside the unit ball, with the full stored-node rows (exterior
    couplings included) so the ratio sees the free-space operator.
    """
    from .assembly import assemble_operator

    if sigma <= 0:
        raise ValueError("barrier exponent must be positive")
    if kind not in (EXP, POLY):
        raise ValueError(f"unknown barrier kind {kind!r}")
    pts_i = grid.interior_coords
    pts_e = grid.exterior_coords
    probe = np.vstack([pts_i, pts_e]) if len(pts_e) else pts_i
    if not np.isfinite(kernel.max_support_radius(probe)):
        raise ValueError("barrier evaluation needs a bounded kernel support")

    def chi_of(points):
        r = np.maximum(np.linalg.norm(np.atleast_2d(points), axis=1), 1.0)
        return np.exp(sigma * r) if kind == EXP else r ** sigma

    chi_i = chi_of(pts_i)
    chi_e = chi_of(pts_e) if len(pts_e) else np.zeros(0)
    op = assemble_operator(grid, coeffs, kernel, "full")
    image = op.apply(chi_i, chi_e)
    outside = np.linalg.norm(pts_i, axis=1) > 1.0 + 1e-12
    if not np.any(outside):
        raise ValueError("no interior node lies outside the unit ball")
    ratios = image[outside] / chi_i[outside]
    if not np.all(np.isfinite(ratios)) or ratios.max() > guard:
        raise UnboundedRatio(
            f"barrier ratio exceeded the overflow guard {guard:g}; growth "
            "conditions are violated by the supplied coefficients")
    k = int(np.argmax(ratios))
    return BarrierResult(kind=kind, sigma=float(sigma),
                         chi_interior=chi_i, chi_exterior=chi_e,
                         growth_bound=float(ratios.max()),
                         argmax_radius=float(
                             np.linalg.norm(pts_i[outside][k])))


@dataclass
class RightMonotonicityResult:
    base_value: float
    bumped_value: float
    gap: float
    strict: bool
    tolerance: float
    radii: list


def right_monotonicity_check(problem, bump, radii, h, *, tol=1e-10,
                             strict_margin=None) -> RightMonotonicityResult:
    """Gap of the whole-space rate under a nonnegative compactly-supported bump.

    Runs two sweeps on shared grids (identical lattice, potential plus bump)
    and reports the gap with a strictness verdict against the combined
    residual tolerance.
    """
    probe = np.linspace(-max(radii), max(radii), 257).reshape(-1, 1)
    if problem.dimension == 2:
        probe = np.column_stack([probe.ravel(), np.zeros(len(probe))])
    bump_vals = np.asarray(bump(probe), dtype=float).reshape(-1)
    if np.any(bump_vals < 0):
        raise ValueError("bump must be nonnegative")
    if not np.all(np.isfinite(bump_vals)):
        raise ValueError("bump must be bounded")

    base_c = problem.c

    def bumped_c(points, _c=base_c, _b=bump):
        pts = np.asarray(points, dtype=float)
        base = (_c(pts) if callable(_c) else
                np.full(len(np.atleast_2d(pts)), float(_c)))
        return base + np.asarray(_b(pts), dtype=float).reshape(base.shape)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = sweep(problem, radii, h, tol=tol)
        bumped = sweep(problem.with_potential(bumped_c), radii, h, tol=tol)
    grid = base.final_grid
    on_grid = np.asarray(bump(grid.interior_coords), dtype=float)
    zero_bump = not np.any(on_grid > 0)
    gap = base.limit - bumped.limit
    tolerance = (strict_margin if strict_margin is not None
                 else base.entries[-1].residual + bumped.entries[-1].residual)
    return RightMonotonicityResult(base_value=base.limit,
                                   bumped_value=bumped.limit,
                                   gap=float(gap),
                                   strict=bool(not zero_bump and gap > tolerance),
                                   tolerance=float(tolerance),
                                   radii=list(radii))
