"""Uniform lattices over 1D/2D domains with interior/exterior-halo bookkeeping.

Nodes live on the origin-anchored lattice ``h * Z^d``.  This makes grids for
nested domains literal subsets of each other, which is what turns the
continuum domain-monotonicity of the principal eigenvalue into an exact
discrete statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInterior, HaloTooSmall, InvalidSpacing

# Pad added to the requested halo (in units of h): one cell so multilinear
# snapping of a jump target at halo distance still finds stored corners, plus
# one more for the Dirichlet boundary ring of the local stencil.
_HALO_PAD_CELLS = 2.0


class Domain:
    """Base class: a bounded open set with analytic membership and distance."""

    dimension: int

    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance to the closed domain (0 inside)."""
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Interval(Domain):
    left: float
    right: float
    dimension: int = 1

    def __post_init__(self):
        if not self.right > self.left:
            raise EmptyInterior(f"empty interval ({self.left}, {self.right})")

    def contains(self, points):
        x = np.asarray(points).reshape(-1)
        return (x > self.left) & (x < self.right)

    def distance(self, points):
        x = np.asarray(points).reshape(-1)
        return np.maximum.reduce([self.left - x, x - self.right, np.zeros_like(x)])

    def bounding_box(self):
        return np.array([self.left]), np.array([self.right])

    def center(self):
        return np.array([0.5 * (self.left + self.right)])

    def describe(self):
        return f"interval({self.left},{self.right})"


@dataclass(frozen=True)
class Ball(Domain):
    """Open Euclidean ball; in one dimension this is the symmetric interval."""

    radius: float
    dimension: int = 2
    center_point: tuple = None  # defaults to the origin

    def __post_init__(self):
        if self.radius <= 0:
            raise EmptyInterior(f"ball with radius {self.radius}")
        if self.center_point is None:
            object.__setattr__(self, "center_point", (0.0,) * self.dimension)

    def _r(self, points):
        x = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.linalg.norm(x - np.asarray(self.center_point), axis=1)

    def contains(self, points):
        return self._r(points) < self.radius

    def distance(self, points):
        return np.maximum(self._r(points) - self.radius, 0.0)

    def bounding_box(self):
        c = np.asarray(self.center_point, dtype=float)
        return c - self.radius, c + self.radius

    def center(self):
        return np.asarray(self.center_point, dtype=float)

    def describe(self):
        return f"ball(r={self.radius},d={self.dimension})"


@dataclass(frozen=True)
class Box(Domain):
    """Open axis-aligned box in 2D."""

    extents: tuple  # ((x0,x1),(y0,y1))
    dimension: int = 2

    def contains(self, points):
        x = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        mask = np.ones(len(x), dtype=bool)
        for k, (lo, hi) in enumerate(self.extents):
            mask &= (x[:, k] > lo) & (x[:, k] < hi)
        return mask

    def distance(self, points):
        x = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        d = np.zeros((len(x), self.dimension))
        for k, (lo, hi) in enumerate(self.extents):
            d[:, k] = np.maximum.reduce([lo - x[:, k], x[:, k] - hi,
                                         np.zeros(len(x))])
        return np.linalg.norm(d, axis=1)

    def bounding_box(self):
        lo = np.array([e[0] for e in self.extents], dtype=float)
        hi = np.array([e[1] for e in self.extents], dtype=float)
        return lo, hi

    def center(self):
        lo, hi = self.bounding_box()
        return 0.5 * (lo + hi)

    def describe(self):
        return f"box({self.extents})"


@dataclass(frozen=True)
class Annulus(Domain):
    """Points with inner < |x| < outer.  In 1D this is two disjoint intervals."""

    inner: float
    outer: float
    dimension: int = 1

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise EmptyInterior(f"annulus({self.inner},{self.outer})")

    def _r(self, points):
        x = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.linalg.norm(x, axis=1)

    def contains(self, points):
        r = self._r(points)
        return (r > self.inner) & (r < self.outer)

    def distance(self, points):
        r = self._r(points)
        return np.maximum.reduce([self.inner - r, r - self.outer,
                                  np.zeros_like(r)])

    def bounding_box(self):
        return (np.full(self.dimension, -self.outer),
                np.full(self.dimension, self.outer))

    def center(self):
        return np.zeros(self.dimension)

    def describe(self):
        return f"annulus({self.inner},{self.outer},d={self.dimension})"


def ball(radius: float, dimension: int) -> Domain:
    """Ball of given radius centered at the origin in 1 or 2 dimensions."""
    if dimension == 1:
        return Interval(-radius, radius)
    return Ball(radius, dimension=2)


_ENC_SHIFT = np.int64(2) ** 32


def _encode(idx: np.ndarray, dimension: int) -> np.ndarray:
    """Pack lattice multi-indices into sortable int64 keys (lex order kept)."""
    idx = np.asarray(idx, dtype=np.int64).reshape(-1, dimension)
    if dimension == 1:
        return idx[:, 0].copy()
    return idx[:, 0] * _ENC_SHIFT + idx[:, 1]


@dataclass
class SpatialGrid:
    """Uniform lattice covering a domain plus its nonlocal halo.

    Attributes
    ----------
    interior_idx, exterior_idx : (n, d) integer lattice multi-indices, in
        lexicographic coordinate order.  Interior nodes lie strictly inside
        the domain; exterior nodes are the halo on which Dirichlet data
        (zero, unless supplied) lives.
    """

    domain: Domain
    h: float
    halo_radius: float
    interior_idx: np.ndarray
    exterior_idx: np.ndarray
    _lookup: dict = field(repr=False, default_factory=dict)
    _enc_interior: np.ndarray = field(repr=False, default=None)
    _enc_exterior: np.ndarray = field(repr=False, default=None)

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def n_interior(self):
        return len(self.interior_idx)

    @property
    def n_exterior(self):
        return len(self.exterior_idx)

    @property
    def interior_coords(self):
        return self.interior_idx * self.h

    @property
    def exterior_coords(self):
        return self.exterior_idx * self.h

    def locate(self, idx) -> int:
        """Map a lattice multi-index to storage: i >= 0 interior position,
        -(j+1) for exterior position j, or None when the node is not stored."""
        return self._lookup.get(tuple(int(v) for v in np.atleast_1d(idx)))

    def locate_many(self, idx: np.ndarray):
        """Vectorized locate: returns (interior_pos, exterior_pos) arrays with
        -1 marking 'not in that set' for a (k, d) block of multi-indices."""
        keys = _encode(idx, self.dimension)

        def search(sorted_keys):
            if len(sorted_keys) == 0:
                return np.full(len(keys), -1, dtype=np.int64)
            pos = np.searchsorted(sorted_keys, keys)
            pos_c = np.minimum(pos, len(sorted_keys) - 1)
            hit = sorted_keys[pos_c] == keys
            return np.where(hit, pos_c, -1)

        return search(self._enc_interior), search(self._enc_exterior)

    @property
    def anchor(self) -> int:
        """Interior node nearest the domain center (lexicographic tie-break)."""
        coords = self.interior_coords
        c = self.domain.center()
        d2 = np.sum((coords - c) ** 2, axis=1)
        # interior_idx is lexicographically sorted, so argmin ties resolve
        # to the lexicographically smallest node.
        return int(np.argmin(d2))

    def interior_radii(self):
        return np.linalg.norm(self.interior_coords, axis=1)


def build_grid(domain: Domain, h: float, halo_radius: float = 0.0) -> SpatialGrid:
    """Enumerate the lattice h*Z^d covering ``domain`` plus its halo.

    The stored exterior set reaches ``halo_radius`` plus a two-cell pad past
    the domain, so every jump target within the declared kernel support (and
    the corners of its interpolation cell) is a stored node.
    """
    if not h > 0:
        raise InvalidSpacing(f"grid spacing must be positive, got {h}")
    if halo_radius < 0:
        raise HaloTooSmall(f"halo radius must be nonnegative, got {halo_radius}")
    d = domain.dimension
    reach = halo_radius + _HALO_PAD_CELLS * h
    lo, hi = domain.bounding_box()
    imin = np.floor((lo - reach) / h).astype(np.int64)
    imax = np.ceil((hi + reach) / h).astype(np.int64)
    axes = [np.arange(imin[k], imax[k] + 1, dtype=np.int64) for k in range(d)]
    if d == 1:
        idx = axes[0].reshape(-1, 1)
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        idx = np.column_stack([gx.ravel(), gy.ravel()])
    # meshgrid with "ij" already yields lexicographic (x, then y) order
    points = idx * h
    inside = domain.contains(points)
    dist = domain.distance(points)
    halo = ~inside & (dist <= reach + 1e-12 * max(1.0, reach))
    interior_idx = idx[inside]
    exterior_idx = idx[halo]
    if len(interior_idx) == 0:
        raise EmptyInterior(
            f"no lattice point of spacing {h} falls inside {domain.describe()}"
        )
    lookup = {}
    for pos, row in enumerate(interior_idx):
        lookup[tuple(int(v) for v in row)] = pos
    for pos, row in enumerate(exterior_idx):
        lookup[tuple(int(v) for v in row)] = -(pos + 1)
    return SpatialGrid(domain=domain, h=float(h), halo_radius=float(halo_radius),
                       interior_idx=interior_idx, exterior_idx=exterior_idx,
                       _lookup=lookup,
                       _enc_interior=_encode(interior_idx, d),
                       _enc_exterior=_encode(exterior_idx, d))
