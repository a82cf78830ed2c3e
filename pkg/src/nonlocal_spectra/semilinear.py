"""Linear Dirichlet solves and monotone iteration between ordered barriers.

The semilinear solver runs the classical shifted fixed point: given ordered
sub/supersolutions and a shift theta that dominates both the potential and
the Lipschitz constant of the nonlinearity on the order interval, each step
solves  (L - theta) xi_next = f(x, xi) - theta xi.  The iterates ascend from
the subsolution, stay below the supersolution, and converge to a solution of
L u = f(x, u); both facts are asserted at every step rather than assumed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteOperator
from .eig import principal_eig
from .errors import (EigenvalueNotPositive, NotConverged, OrderingBroken,
                     SubsolutionSlack)

_ORDER_SLACK = 1e-12


def solve_linear(op: DiscreteOperator, f, *, tol=1e-10, eig=None):
    """Solve L u = f with zero exterior data, refusing an uncertified system.

    The principal rate must certify positivity (value above three residuals)
    before the solve is attempted; without that the Dirichlet problem has no
    uniqueness guarantee and the solver refuses.
    """
    f = np.asarray(f, dtype=float)
    if eig is None:
        eig = principal_eig(op, tol=tol)
    if eig.value <= 3 * max(eig.residual, tol):
        raise EigenvalueNotPositive(
            f"principal rate {eig.value:.6g} does not certify solvability")
    return spla.spsolve(sp.csc_matrix(op.matrix), f)


@dataclass
class IterationTrace:
    theta: float
    residuals: list = field(default_factory=list)
    max_steps: list = field(default_factory=list)   # sup |xi_{i+1} - xi_i|
    iterates: list = field(default_factory=list)
    termination: str = ""

    @property
    def iterations(self):
        return len(self.residuals)


def _lipschitz_estimate(f, points, lo, hi, samples=33):
    """Max slope of u -> f(x, u) over the order interval, sampled."""
    levels = np.linspace(lo, hi, samples)
    prev = None
    worst = 0.0
    for u0 in levels:
        vals = np.asarray(f(points, np.full(len(points), u0)), dtype=float)
        if prev is not None:
            step = levels[1] - levels[0]
            if step > 0:
                worst = max(worst, float(np.abs(vals - prev).max()) / step)
        prev = vals
    return worst


def monotone_iterate(op: DiscreteOperator, f, sub, super_, *, theta=None,
                     tol=1e-8, max_iter=200):
    """Solve L u = f(x, u) between ordered sub/supersolutions.

    ``f(points, u)`` evaluates the nonlinearity nodewise.  The barrier
    inequalities (L sub >= f(x, sub), L super <= f(x, super), sub <= super)
    are verified within ``tol`` before starting; slack inside the tolerance
    is warned about, beyond it the pair is rejected.  The shift is chosen
    automatically unless supplied, and raised until the shifted operator has
    a certified positive rate.
    """
    sub = np.asarray(sub, dtype=float).copy()
    super_ = np.asarray(super_, dtype=float).copy()
    pts = op.grid.interior_coords
    n = op.n

    def check_pair():
        gap = sub - super_
        if gap.max() > _ORDER_SLACK:
            node = int(np.argmax(gap))
            raise OrderingBroken(
                f"sub exceeds super by {gap.max():.3g} at node {node}")
        sub_defect = np.asarray(f(pts, sub), dtype=float) - op.matrix @ sub
        sup_defect = op.matrix @ super_ - np.asarray(f(pts, super_), dtype=float)
        for name, defect in (("sub", sub_defect), ("super", sup_defect)):
            worst = float(defect.max(initial=0.0))
            if worst > tol:
                node = int(np.argmax(defect))
                raise OrderingBroken(
                    f"{name}solution inequality fails by {worst:.3g} at node "
                    f"{node} (tolerance {tol:g})")
            if worst > 0:
                warnings.warn(
                    f"{name}solution inequality holds only within tolerance "
                    f"({worst:.3g})", SubsolutionSlack, stacklevel=3)

    check_pair()
    base = principal_eig(op, tol=min(tol, 1e-8))
    lip = _lipschitz_estimate(f, pts, float(sub.min()), float(super_.max()))
    c_norm = (float(np.abs(op.coefficients.c).max())
              if op.coefficients is not None else 0.0)
    if theta is None:
        theta = max(lip, c_norm) + 1.0
    # the shifted operator must keep a certified positive rate
    while base.value + theta <= 3 * max(base.residual, 1e-12):
        theta = 2.0 * theta if theta > 0 else 1.0
    if theta < lip:
        warnings.warn(
            f"supplied shift {theta:g} is below the Lipschitz estimate "
            f"{lip:g}; monotonicity of the step map is not guaranteed",
            SubsolutionSlack, stacklevel=2)

    shifted = sp.csc_matrix(op.matrix - theta * sp.identity(n, format="csr"))
    solver = spla.splu(shifted)
    trace = IterationTrace(theta=float(theta))
    xi = sub.copy()
    trace.iterates.append(xi.copy())
    for _ in range(max_iter):
        rhs = np.asarray(f(pts, xi), dtype=float) - theta * xi
        nxt = solver.solve(rhs)
        step = float(np.abs(nxt - xi).max())
        low = float((xi - nxt).max())
        high = float((nxt - super_).max())
        scale = max(1.0, float(np.abs(nxt).max()))
        if low > 1e3 * _ORDER_SLACK * scale or high > 1e3 * _ORDER_SLACK * scale:
            node = int(np.argmax(xi - nxt) if low > high else np.argmax(nxt - super_))
            raise OrderingBroken(
                f"iterate left the order interval at node {node} "
                f"(down {low:.3g}, over {high:.3g})")
        xi = np.minimum(np.maximum(nxt, xi), super_)
        residual = float(np.abs(op.matrix @ xi
                                - np.asarray(f(pts, xi), dtype=float)).max())
        trace.residuals.append(residual)
        trace.max_steps.append(step)
        trace.iterates.append(xi.copy())
        if residual <= tol and step <= max(tol, 1e-12):
            trace.termination = "converged"
            return xi, trace
    trace.termination = "max_iter"
    raise NotConverged(
        f"monotone iteration did not reach residual {tol:g} in {max_iter} "
        f"steps (last {trace.residuals[-1]:.3g})")
