"""Whole-space eigenvalue estimation by sequences of growing truncations.

The spacing is held fixed across a sweep so the lattices nest and the
discrete domain monotonicity of the principal rate is exact; the limit
estimate is the conservative last term plus a Cauchy flag, never an
extrapolation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (MonotonicityViolation, NonMonotoneSequence,
                     NoWitnessWithinTruncation, WindowOutsideSmallestDomain)
from .grid import Annulus, SpatialGrid, ball
from .eig import EigenResult, principal_eig


class SweepEntry(NamedTuple):
    radius: float
    value: float
    residual: float


@dataclass
class SweepResult:
    entries: list
    limit: float
    converged: bool
    monotone: bool
    violations: list                      # (radius, increase) pairs
    snapshots: dict                        # radius -> (coords, psi on probe window)
    probe_halfwidth: float
    final_grid: SpatialGrid = None
    final_psi: np.ndarray = None
    final_result: EigenResult = None

    def values(self):
        return [e.value for e in self.entries]


def estimate_limit(entries, cauchy_tol):
    """Conservative limit of a sweep sequence: last value plus a Cauchy flag.

    ``entries`` is a sequence of (radius, value) pairs (extra fields are
    ignored).  Converged means the last two values agree within
    ``cauchy_tol`` and the sequence is nonincreasing within the same
    tolerance; an increasing stretch emits a NonMonotoneSequence warning.
    """
    values = [e[1] for e in entries]
    if len(values) < 2:
        raise ValueError("estimate_limit needs at least two sweep entries")
    diffs = np.diff(values)
    monotone = bool(np.all(diffs <= cauchy_tol))
    if not monotone:
        warnings.warn(
            f"sweep sequence increases by {diffs.max():.3g}; domain "
            "monotonicity violated", NonMonotoneSequence, stacklevel=2)
    converged = monotone and abs(values[-1] - values[-2]) <= cauchy_tol
    return float(values[-1]), converged


def _probe_nodes(grid: SpatialGrid, halfwidth: float):
    coords = grid.interior_coords
    mask = np.all(np.abs(coords) <= halfwidth + 1e-12, axis=1)
    return grid.interior_idx[mask], mask


def sweep(problem, radii, h, *, variant="full", probe_halfwidth=1.0,
          cauchy_tol=0.02, tol=1e-10, max_iter=500, strict=False) -> SweepResult:
    """Solve the Dirichlet problem on balls of increasing radius.

    Eigenfunctions are renormalized at the common anchor (the node nearest
    the origin) and recorded on the probe window for stability analysis.
    With ``strict`` a monotonicity violation beyond the combined residuals
    raises instead of being reported.
    """
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("sweep radii must be strictly increasing")
    entries = []
    snapshots = {}
    violations = []
    final = None
    probe_keys = None
    for r in radii:
        op = problem.operator(ball(r, problem.dimension), h, variant=variant)
        res = principal_eig(op, tol=tol, max_iter=max_iter)
        entries.append(SweepEntry(float(r), res.value, res.residual))
        idx, mask = _probe_nodes(op.grid, probe_halfwidth)
        keys = [tuple(map(int, row)) for row in idx]
        if probe_keys is None:
            probe_keys = keys
            probe_coords = op.grid.interior_coords[mask]
        elif keys != probe_keys:
            raise WindowOutsideSmallestDomain(
                "probe window is not contained in every sweep domain")
        snapshots[float(r)] = (probe_coords, res.psi[mask].copy())
        final = (op.grid, res)
        if len(entries) >= 2:
            prev, cur = entries[-2], entries[-1]
            allowed = prev.residual + cur.residual
            if cur.value > prev.value + allowed:
                violations.append((cur.radius, cur.value - prev.value))
    if strict and violations:
        r, inc = violations[0]
        raise MonotonicityViolation(
            f"rate increased by {inc:.3g} at radius {r} beyond combined residuals")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonMonotoneSequence)
        limit, converged = estimate_limit(entries, cauchy_tol)
    return SweepResult(entries=entries, limit=limit, converged=converged,
                       monotone=not violations, violations=violations,
                       snapshots=snapshots, probe_halfwidth=probe_halfwidth,
                       final_grid=final[0], final_psi=final[1].psi,
                       final_result=final[1])


@dataclass
class ExteriorSweepResult:
    inner_radius: float
    entries: list
    limit: float
    converged: bool
    upper_bound_heuristic: bool = True     # truncated annuli approximate from above


def exterior_sweep(problem, inner_radius, outer_radii, h, *, variant="full",
                   cauchy_tol=0.02, tol=1e-10, max_iter=500) -> ExteriorSweepResult:
    """Dirichlet rates of truncated exterior shells inner < |x| < n.

    In one dimension the shell is two disjoint intervals solved as one
    disconnected grid; the principal rate is the componentwise minimum.
    """
    outer_radii = list(outer_radii)
    if any(n <= inner_radius for n in outer_radii):
        raise ValueError("outer radii must exceed the inner radius")
    if any(b <= a for a, b in zip(outer_radii, outer_radii[1:])):
        raise ValueError("outer radii must be strictly increasing")
    entries = []
    for n in outer_radii:
        domain = Annulus(inner_radius, float(n), dimension=problem.dimension)
        op = problem.operator(domain, h, variant=variant)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = principal_eig(op, tol=tol, max_iter=max_iter)
        entries.append(SweepEntry(float(n), res.value, res.residual))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonMonotoneSequence)
        limit, converged = estimate_limit(entries, cauchy_tol)
    return ExteriorSweepResult(inner_radius=float(inner_radius), entries=entries,
                               limit=limit, converged=converged)


@dataclass
class StabilityReport:
    deviations: list          # sup_K |psi_{r_{i+1}} - psi_{r_i}| per step
    sup_values: list          # sup_K psi_r per radius
    growing: bool             # deviation trend flagged as blow-up evidence


def eigenfunction_stability(result: SweepResult, halfwidth=None) -> StabilityReport:
    """Successive deviations of anchored eigenfunctions on the probe window."""
    if halfwidth is None:
        halfwidth = result.probe_halfwidth
    if halfwidth > result.probe_halfwidth + 1e-12:
        raise WindowOutsideSmallestDomain(
            f"requested window {halfwidth} exceeds stored probe window "
            f"{result.probe_halfwidth}")
    radii = sorted(result.snapshots)
    series = []
    for r in radii:
        coords, vals = result.snapshots[r]
        mask = np.all(np.abs(coords) <= halfwidth + 1e-12, axis=1)
        series.append(vals[mask])
    sups = [float(np.abs(v).max()) for v in series]
    deviations = [float(np.abs(b - a).max()) for a, b in zip(series, series[1:])]
    growing = (len(deviations) >= 2
               and all(d2 > d1 for d1, d2 in zip(deviations, deviations[1:])))
    return StabilityReport(deviations=deviations, sup_values=sups, growing=growing)


class GrowthWitness(NamedTuple):
    scale: float            # k with k*psi <= v outside the witness radius
    radius: float           # smallest lattice radius >= rho where it holds
    success: bool


def growth_dominance(grid: SpatialGrid, psi, v, rho) -> GrowthWitness:
    """Search for (k, R) with k*psi <= v on all stored nodes outside B_R.

    k is fixed from the outermost lattice shell (the minimum of v/psi there);
    the reported radius is the smallest node radius >= rho from which the
    domination holds on the truncation.  No claim is made past the stored
    lattice.
    """
    psi = np.asarray(psi, dtype=float)
    v = np.asarray(v, dtype=float)
    radii = grid.interior_radii()
    outside = radii >= rho - 1e-12
    if not np.any(outside):
        raise NoWitnessWithinTruncation(
            f"no stored node lies outside radius {rho}")
    if np.any(psi[outside] <= 0) or np.any(v[outside] <= 0):
        raise NoWitnessWithinTruncation(
            "witness search needs positive psi and v outside rho")
    rmax = radii.max()
    shell = outside & (radii >= rmax - grid.h - 1e-12)
    k = float((v[shell] / psi[shell]).min())
    ok = k * psi <= v * (1 + 1e-12) + 1e-300
    candidates = np.unique(np.round(radii[outside] / grid.h) * grid.h)
    for r in candidates:
        sel = radii >= r - 1e-12
        if np.all(ok[sel]):
            return GrowthWitness(scale=k, radius=float(max(r, rho)), success=True)
    raise NoWitnessWithinTruncation(
        "domination fails even on the outermost stored shell")
