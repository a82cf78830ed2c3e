"""Finite jump measures: atomic, density and translation-invariant variants.

A kernel assigns to each point x a finite nonnegative measure of jump
offsets with bounded support.  Density variants are integrated with the
midpoint rule on the offset lattice (positivity-preserving, and jump targets
then land exactly on lattice nodes); atomic variants are used exactly, with
off-grid targets split multilinearly during assembly.  The zero offset never
carries weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NegativeWeight

ATOMIC = "atomic"
DENSITY = "density"
TRANSLATION_INVARIANT = "translation_invariant"
NONE = "none"


@dataclass
class JumpKernel:
    variant: str
    dimension: int
    offsets: Optional[np.ndarray] = None      # atomic: (m, d)
    weights: Optional[np.ndarray] = None      # atomic: (m,)
    density: Optional[Callable] = None        # density(x, z) or profile(z)
    support: object = 0.0                      # float or callable(points)->(n,)
    name: str = field(default="")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def none(cls, dimension=1):
        return cls(variant=NONE, dimension=dimension, support=0.0, name="none")

    @classmethod
    def atomic(cls, offsets, weights, dimension=None):
        offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(offsets) != len(weights):
            raise ValueError("offsets and weights must pair up")
        if np.any(weights < 0):
            raise NegativeWeight(f"atomic weight {weights.min():g} < 0")
        keep = weights > 0
        # zero offsets carry no weight by convention
        keep &= np.linalg.norm(offsets, axis=1) > 0
        offsets, weights = offsets[keep], weights[keep]
        d = dimension or (offsets.shape[1] if offsets.size else 1)
        sup = float(np.linalg.norm(offsets, axis=1).max()) if len(offsets) else 0.0
        return cls(variant=ATOMIC, dimension=d, offsets=offsets.reshape(-1, d),
                   weights=weights, support=sup, name="atomic")

    @classmethod
    def from_density(cls, g, support, dimension=1, name="density"):
        """g(x, z) evaluated with x of shape (n, d) and z of shape (m, d),
        returning (n, m); ``support`` is a radius or callable(points)->(n,)."""
        return cls(variant=DENSITY, dimension=dimension, density=g,
                   support=support, name=name)

    @classmethod
    def translation_invariant(cls, profile, support, dimension=1, name="profile"):
        """profile(z) with z of shape (m, d) returning (m,) nonneg values."""
        return cls(variant=TRANSLATION_INVARIANT, dimension=dimension,
                   density=profile, support=float(support), name=name)

    # -- geometry -------------------------------------------------------------

    def support_radius_at(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        if callable(self.support):
            return np.asarray(self.support(pts), dtype=float).reshape(len(pts))
        return np.full(len(pts), float(self.support))

    def max_support_radius(self, points) -> float:
        if len(np.atleast_2d(points)) == 0:
            return 0.0
        return float(self.support_radius_at(points).max())

    # -- quadrature -----------------------------------------------------------

    def lattice_offsets(self, h: float, radius: float) -> np.ndarray:
        """Nonzero lattice offsets within ``radius`` (midpoint-rule nodes)."""
        if radius <= 0:
            return np.zeros((0, self.dimension))
        m = int(np.floor(radius / h + 1e-12))
        rng = np.arange(-m, m + 1)
        if self.dimension == 1:
            z = rng.reshape(-1, 1) * h
        else:
            gx, gy = np.meshgrid(rng, rng, indexing="ij")
            z = np.column_stack([gx.ravel(), gy.ravel()]) * h
        norms = np.linalg.norm(z, axis=1)
        return z[(norms > 0) & (norms <= radius + 1e-12 * max(1.0, radius))]

    def quadrature(self, points, h: float):
        """Per-node atoms approximating the measure: (offsets (m,d), weights (n,m)).

        Atomic kernels are returned exactly; density variants use the midpoint
        rule with cell volume h^d on the shared offset lattice, masked per node
        by the local support radius.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        n = len(pts)
        if self.variant == NONE or n == 0:
            return np.zeros((0, self.dimension)), np.zeros((n, 0))
        if self.variant == ATOMIC:
            w = np.broadcast_to(self.weights, (n, len(self.weights))).copy()
            return self.offsets, w
        radius = self.support_radius_at(pts)
        z = self.lattice_offsets(h, float(radius.max(initial=0.0)))
        if len(z) == 0:
            return np.zeros((0, self.dimension)), np.zeros((n, 0))
        cell = h ** self.dimension
        if self.variant == TRANSLATION_INVARIANT:
            vals = np.asarray(self.density(z), dtype=float).reshape(len(z))
            w = np.broadcast_to(vals, (n, len(z))).copy() * cell
        else:
            w = np.asarray(self.density(pts, z), dtype=float).reshape(n, len(z)) * cell
        if np.any(w < 0):
            raise NegativeWeight("kernel density produced a negative value")
        # mask offsets beyond the per-node support radius
        mask = np.linalg.norm(z, axis=1)[None, :] <= radius[:, None] + 1e-12
        return z, np.where(mask, w, 0.0)

    def mass_at(self, points, h: float) -> np.ndarray:
        _, w = self.quadrature(points, h)
        return w.sum(axis=1)


def uniform_density(total_mass: float, radius: float, dimension=1) -> JumpKernel:
    """Constant density on the centered ball of given radius."""
    if dimension == 1:
        level = total_mass / (2.0 * radius)
    else:
        level = total_mass / (np.pi * radius**2)

    def profile(z):
        return np.full(len(np.atleast_2d(z)), level)

    return JumpKernel.translation_invariant(profile, radius, dimension,
                                            name=f"uniform(mass={total_mass})")
