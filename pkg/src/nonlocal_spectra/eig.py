"""Principal eigenpair of a monotone discrete operator.

Sign convention: the solver returns the rate lambda with  L psi = -lambda psi,
so lambda is minus the largest-real-part eigenvalue of the assembled matrix.
For a monotone scheme the shifted matrix  M = L + s*I  is entrywise
nonnegative, its dominant eigenvalue is simple on each strongly connected
component, and the dominant eigenvector is positive; the solver runs inverse
iteration on M with a certified shift above the dominant value, which keeps
every iterate positive and supplies two-sided bounds (the min/max of
-(L psi)/psi over nodes) at no extra cost.

Disconnected operators are solved per weak component; the reported rate is
the smallest component rate (the value below which a positive supersolution
exists on the whole node set), the eigenfunction is supported on the
achieving component, and a warning is issued.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .assembly import DiscreteOperator
from .errors import (NonPositiveEigenvector, NonPositiveInput, NotConverged,
                     ReducibleOperator, TooLargeForDenseCheck)

DENSE_CAP = 2000


@dataclass
class EigenResult:
    """Converged principal pair with its two-sided certificate."""

    value: float                      # rate lambda, L psi = -lambda psi
    psi: np.ndarray                   # positive on the supporting component
    residual: float                   # max-norm of L psi + lambda psi
    bracket: tuple                    # (lower, upper) bounds on lambda
    iterations: int
    anchor: int                       # psi[anchor] == 1
    component_count: int = 1
    method: str = "inverse_iteration"

    def summary_rows(self):
        return [("lambda", self.value), ("residual", self.residual),
                ("bracket_lower", self.bracket[0]),
                ("bracket_upper", self.bracket[1]),
                ("iterations", self.iterations), ("anchor", self.anchor)]


def _as_matrix(op):
    return op.matrix if isinstance(op, DiscreteOperator) else sp.csr_matrix(op)


def collatz_bounds(op, psi):
    """Two-sided bounds min/max of -(L psi)/psi for a positive vector psi.

    For a monotone irreducible matrix the principal rate lies between them.
    """
    matrix = _as_matrix(op)
    psi = np.asarray(psi, dtype=float)
    if np.any(psi <= 0) or not np.all(np.isfinite(psi)):
        raise NonPositiveInput("collatz_bounds needs a strictly positive vector")
    ratios = -(matrix @ psi) / psi
    return float(ratios.min()), float(ratios.max())


def dense_principal(matrix):
    """Dense eigensolve oracle: largest-real-part eigenvalue and eigenvector."""
    n = matrix.shape[0]
    if n > DENSE_CAP:
        raise TooLargeForDenseCheck(f"dense eigensolve capped at {DENSE_CAP}, got {n}")
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    values, vectors = sla.eig(dense)
    k = int(np.argmax(values.real))
    vec = vectors[:, k].real
    if vec.sum() < 0:
        vec = -vec
    return float(values[k].real), vec


def _component_masks(matrix):
    n_comp, labels = csgraph.connected_components(matrix, directed=True,
                                                  connection="weak")
    return [labels == k for k in range(n_comp)]


def _inverse_iteration(matrix, anchor, tol, max_iter):
    n = matrix.shape[0]
    diag = matrix.diagonal()
    shift = max(0.0, float(-diag.min(initial=0.0)))
    m = (matrix + shift * sp.identity(n, format="csr")).tocsr()
    ones = np.ones(n)
    upper0 = float((np.abs(m) @ ones).max())
    sigma = upper0 + 1.0
    solver = spla.splu(sp.csc_matrix(sigma * sp.identity(n) - m))
    v = ones / np.sqrt(n)
    lam = np.inf
    best = None
    since_improvement = 0
    for it in range(1, max_iter + 1):
        w = solver.solve(v)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0.0:
            raise NotConverged("inverse iteration produced a degenerate vector")
        v = w / norm
        if v.min() < 0 and v.max() <= 0:
            v = -v
        if v.min() <= 0:
            raise NonPositiveEigenvector(
                "iterate lost positivity; monotone structure is broken"
            )
        mv = m @ v
        ratios = mv / v
        lo_m, hi_m = float(ratios.min()), float(ratios.max())
        lam = shift - 0.5 * (lo_m + hi_m)
        psi = v / v[anchor]
        residual = float(np.abs(matrix @ psi + lam * psi).max())
        bracket = (shift - hi_m, shift - lo_m)
        if best is None or residual < best[2]:
            best = (lam, psi, residual, bracket, it)
            since_improvement = 0
        else:
            since_improvement += 1
        if residual <= tol:
            return lam, psi, residual, bracket, it
        if since_improvement >= 25:
            break  # residual has hit its floating-point floor
        if it % 40 == 0:
            # hi_m is a certified upper bound for the dominant value of M,
            # so this shift keeps sigma*I - M inverse-positive
            width = max(hi_m - lo_m, 1e-10)
            sigma = hi_m + 10.0 * width
            solver = spla.splu(sp.csc_matrix(sigma * sp.identity(n) - m))
    lam, psi, residual, bracket, it = best
    raise NotConverged(
        f"no convergence in {max_iter} iterations (residual {residual:.3g})"
    )


def _dense_fallback(matrix, anchor):
    mu, vec = dense_principal(matrix)
    if np.any(vec <= 0):
        floor = np.abs(vec).max() * 1e-13
        if np.any(vec < -floor):
            raise NonPositiveEigenvector(
                "dense fallback produced a sign-changing principal vector"
            )
        vec = np.maximum(vec, floor)
    psi = vec / vec[anchor]
    lam = -mu
    residual = float(np.abs(matrix @ psi + lam * psi).max())
    lo, hi = collatz_bounds(matrix, psi)
    return lam, psi, residual, (lo, hi), 1


def principal_eig(op, anchor=None, tol=1e-10, max_iter=500) -> EigenResult:
    """Principal rate and positive eigenfunction of a discrete operator.

    Monotone assemblies use shifted inverse iteration; non-monotone matrices
    fall back to a dense eigensolve (size-capped).  The eigenfunction is
    normalized to one at the anchor node (default: the node nearest the
    domain center).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    matrix = _as_matrix(op)
    monotone = (op.is_monotone_scheme if isinstance(op, DiscreteOperator)
                else _offdiag_nonneg(matrix))
    if anchor is None:
        anchor = op.anchor if isinstance(op, DiscreteOperator) else 0
    masks = _component_masks(matrix)
    if len(masks) == 1:
        lam, psi, residual, bracket, its = _solve_block(
            matrix, anchor, tol, max_iter, monotone)
        return EigenResult(value=lam, psi=psi, residual=residual,
                           bracket=bracket, iterations=its, anchor=anchor,
                           component_count=1,
                           method="inverse_iteration" if monotone else "dense")
    warnings.warn(
        f"operator splits into {len(masks)} components; principal rate is the "
        "componentwise minimum", ReducibleOperator, stacklevel=2)
    best = None
    for mask in masks:
        sub = matrix[mask][:, mask].tocsr()
        nodes = np.nonzero(mask)[0]
        sub_anchor = int(np.argwhere(nodes == anchor)[0][0]) if anchor in nodes else 0
        lam, psi, residual, bracket, its = _solve_block(
            sub, sub_anchor, tol, max_iter, monotone)
        if best is None or lam < best[0]:
            best = (lam, psi, residual, bracket, its, nodes, sub_anchor)
    lam, psi, residual, bracket, its, nodes, sub_anchor = best
    full = np.zeros(matrix.shape[0])
    full[nodes] = psi
    return EigenResult(value=lam, psi=full, residual=residual, bracket=bracket,
                       iterations=its, anchor=int(nodes[sub_anchor]),
                       component_count=len(masks),
                       method="inverse_iteration" if monotone else "dense")


def _offdiag_nonneg(matrix):
    coo = matrix.tocoo()
    off = coo.data[coo.row != coo.col]
    return bool(np.all(off >= -1e-13)) if len(off) else True


def _solve_block(matrix, anchor, tol, max_iter, monotone):
    if monotone:
        try:
            return _inverse_iteration(matrix, anchor, tol, max_iter)
        except NotConverged:
            # near-degenerate dominant cluster: certify densely when small
            if matrix.shape[0] > DENSE_CAP:
                raise
            return _dense_fallback(matrix, anchor)
    if matrix.shape[0] > DENSE_CAP:
        raise TooLargeForDenseCheck(
            "non-monotone operator too large for the dense fallback")
    return _dense_fallback(matrix, anchor)


@dataclass
class SimplicityReport:
    geometric_multiplicity: int
    positive: bool
    spectral_gap: float
    method: str = "dense"
    cluster_values: list = field(default_factory=list)


def check_simplicity(op, eigres: EigenResult, tol=1e-8) -> SimplicityReport:
    """Multiplicity of the principal value and the gap to the next one.

    Dense eigensolve up to the size cap; larger monotone systems use a small
    Arnoldi run around the dominant end of the spectrum for the gap estimate.
    """
    matrix = _as_matrix(op)
    n = matrix.shape[0]
    mu1 = -eigres.value
    if n <= DENSE_CAP:
        dense = matrix.toarray()
        values = sla.eigvals(dense)
        scale = max(1.0, np.abs(values).max())
        cluster = values[np.abs(values - mu1) <= max(tol * scale, 10 * eigres.residual)]
        multiplicity = n - np.linalg.matrix_rank(
            dense - mu1 * np.eye(n),
            tol=max(tol * scale, 10 * eigres.residual))
        rest = values[np.abs(values - mu1) > max(tol * scale, 10 * eigres.residual)]
        gap = float(mu1 - rest.real.max()) if len(rest) else np.inf
        return SimplicityReport(geometric_multiplicity=int(max(multiplicity, 1)),
                                positive=bool(np.all(eigres.psi > 0)),
                                spectral_gap=gap, method="dense",
                                cluster_values=sorted(float(v.real) for v in cluster))
    try:
        k = min(4, n - 2)
        values = spla.eigs(matrix.astype(float), k=k, which="LR",
                           v0=np.ones(n), return_eigenvectors=False)
    except Exception as exc:  # pragma: no cover - ARPACK failure path
        raise TooLargeForDenseCheck(
            f"deflated iteration failed for size {n}: {exc}") from exc
    values = np.sort_complex(values)[::-1]
    scale = max(1.0, np.abs(values).max())
    near = np.abs(values - mu1) <= max(tol * scale, 10 * eigres.residual)
    rest = values[~near]
    gap = float(mu1 - rest.real.max()) if len(rest) else np.inf
    return SimplicityReport(geometric_multiplicity=int(max(near.sum(), 1)),
                            positive=bool(np.all(eigres.psi > 0)),
                            spectral_gap=gap, method="arnoldi",
                            cluster_values=sorted(float(v.real) for v in values[near]))
