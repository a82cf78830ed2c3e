"""Sparse assembly of the drift-diffusion-potential operator with jumps.

The local part uses central second differences for the diffusion term (with
the sign-adapted seven-point corner scheme for 2D cross terms) and
first-order upwinding for the drift, so every off-diagonal entry of the
assembled matrix is nonnegative whenever the diffusion matrix is diagonally
dominant.  That monotone structure is what the eigensolver's positivity
machinery relies on.

Jump gains are quadrature atoms: a target x+z landing on a stored interior
node adds its weight to that column; an off-lattice target is split over the
2^d surrounding corners by multilinear weights (mass-preserving and
nonnegative); targets outside the domain contribute nothing beyond the
-nu(x) diagonal loss, which is the zero-exterior Dirichlet condition on the
whole complement.

Rows over the stored exterior nodes are kept in a separate coupling block so
problems with prescribed nonzero exterior data can be formed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientField
from .errors import SupportExceedsHalo
from .grid import SpatialGrid
from .kernels import JumpKernel

FULL = "full"          # local part plus jump gains and losses
LOCAL = "local"        # keeps the -nu(x) loss, drops the gain rows
LOCAL_STENCIL = "local_stencil"  # no kernel at all (assemble_local output)

_SNAP_TOL = 1e-9


class _RowBuilder:
    """COO accumulator for (interior x interior) and (interior x exterior)."""

    def __init__(self, grid: SpatialGrid):
        self.grid = grid
        self.ri, self.ci, self.vi = [], [], []
        self.re, self.ce, self.ve = [], [], []

    def add(self, row: int, idx, value: float):
        if value == 0.0:
            return
        pos = self.grid.locate(idx)
        if pos is None:
            return
        if pos >= 0:
            self.ri.append(row)
            self.ci.append(pos)
            self.vi.append(value)
        else:
            self.re.append(row)
            self.ce.append(-pos - 1)
            self.ve.append(value)

    def matrices(self):
        n, m = self.grid.n_interior, self.grid.n_exterior
        interior = sp.coo_matrix((self.vi, (self.ri, self.ci)), shape=(n, n)).tocsr()
        exterior = sp.coo_matrix((self.ve, (self.re, self.ce)), shape=(n, m)).tocsr()
        interior.sum_duplicates()
        exterior.sum_duplicates()
        return interior, exterior


@dataclass
class DiscreteOperator:
    """Sparse realization of the operator over interior nodes.

    ``matrix`` applies to interior values with zero exterior data;
    ``exterior`` holds the couplings to stored exterior nodes so that the
    action on a function u defined on all stored nodes is
    ``matrix @ u_int + exterior @ u_ext``.
    """

    grid: SpatialGrid
    variant: str
    matrix: sp.csr_matrix
    exterior: sp.csr_matrix
    local_matrix: sp.csr_matrix
    local_exterior: sp.csr_matrix
    gain: sp.csr_matrix
    gain_exterior: sp.csr_matrix
    mass: np.ndarray                      # nu(x) per interior node
    coefficients: Optional[CoefficientField] = None
    is_monotone_scheme: bool = False
    perron_shift: float = 0.0

    @property
    def n(self):
        return self.grid.n_interior

    @property
    def anchor(self):
        return self.grid.anchor

    def apply(self, u_int, u_ext=None):
        out = self.matrix @ u_int
        if u_ext is not None and self.exterior.shape[1]:
            out = out + self.exterior @ u_ext
        return out

    def diagonal(self):
        return self.matrix.diagonal()

    def offdiagonal_min(self) -> float:
        coo = self.matrix.tocoo()
        off = coo.data[coo.row != coo.col]
        ext = self.exterior.tocoo().data
        values = np.concatenate([off, ext]) if len(ext) else off
        return float(values.min()) if len(values) else 0.0

    def _flags(self):
        self.is_monotone_scheme = self.offdiagonal_min() >= -1e-13
        diag = self.matrix.diagonal()
        self.perron_shift = float(max(0.0, -diag.min(initial=0.0)))
        return self


def _local_rows(grid: SpatialGrid, coeffs: CoefficientField) -> _RowBuilder:
    h = grid.h
    d = grid.dimension
    rows = _RowBuilder(grid)
    inv_h2 = 1.0 / (h * h)
    inv_h = 1.0 / h
    for row, idx in enumerate(grid.interior_idx):
        a = coeffs.a[row]
        b = coeffs.b[row]
        diag = coeffs.c[row]
        if d == 1:
            a11 = a[0, 0]
            rows.add(row, idx + np.array([1]), a11 * inv_h2)
            rows.add(row, idx - np.array([1]), a11 * inv_h2)
            diag -= 2.0 * a11 * inv_h2
        else:
            a11, a22, a12 = a[0, 0], a[1, 1], a[0, 1]
            m = abs(a12)
            e = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])
            for step in e[:2]:
                rows.add(row, idx + step, (a11 - m) * inv_h2)
            for step in e[2:]:
                rows.add(row, idx + step, (a22 - m) * inv_h2)
            if a12 >= 0:
                corners = np.array([[1, 1], [-1, -1]])
            else:
                corners = np.array([[1, -1], [-1, 1]])
            for step in corners:
                rows.add(row, idx + step, m * inv_h2)
            diag += (-2.0 * a11 - 2.0 * a22 + 2.0 * m) * inv_h2
        for k in range(d):
            bk = b[k]
            if bk == 0.0:
                continue
            step = np.zeros(d, dtype=np.int64)
            step[k] = 1 if bk > 0 else -1
            rows.add(row, idx + step, abs(bk) * inv_h)
            diag -= abs(bk) * inv_h
        rows.add(row, idx, diag)
    return rows


def assemble_local(grid: SpatialGrid, coeffs: CoefficientField) -> DiscreteOperator:
    """Drift-diffusion-potential rows only (no jump measure at all)."""
    interior, exterior = _local_rows(grid, coeffs).matrices()
    n, m = grid.n_interior, grid.n_exterior
    zero_i = sp.csr_matrix((n, n))
    zero_e = sp.csr_matrix((n, m))
    op = DiscreteOperator(grid=grid, variant=LOCAL_STENCIL,
                          matrix=interior, exterior=exterior,
                          local_matrix=interior, local_exterior=exterior,
                          gain=zero_i, gain_exterior=zero_e,
                          mass=np.zeros(n), coefficients=coeffs)
    return op._flags()


@dataclass
class NonlocalRows:
    """Jump-measure increment: gains split by target side plus the loss diagonal."""

    gain: sp.csr_matrix
    gain_exterior: sp.csr_matrix
    mass: np.ndarray

    def increment(self) -> sp.csr_matrix:
        return (self.gain - sp.diags(self.mass)).tocsr()


def assemble_nonlocal(grid: SpatialGrid, kernel: JumpKernel) -> NonlocalRows:
    """Quadrature rows for the jump measure with multilinear target snapping."""
    pts = grid.interior_coords
    support = kernel.max_support_radius(pts)
    if support > grid.halo_radius + 1e-12 * max(1.0, support):
        raise SupportExceedsHalo(
            f"kernel support radius {support:g} exceeds grid halo "
            f"{grid.halo_radius:g}"
        )
    offsets, weights = kernel.quadrature(pts, grid.h)
    mass = weights.sum(axis=1) if weights.size else np.zeros(grid.n_interior)
    h = grid.h
    d = grid.dimension
    n, m_ext = grid.n_interior, grid.n_exterior
    gi_r, gi_c, gi_v = [], [], []
    ge_r, ge_c, ge_v = [], [], []
    if len(offsets):
        row_pair, off_pair = np.nonzero(weights > 0)
        w = weights[row_pair, off_pair]
        targets = grid.interior_idx[row_pair] * h + offsets[off_pair]
        scaled = targets / h
        base = np.floor(scaled + _SNAP_TOL).astype(np.int64)
        frac = scaled - base
        frac = np.where(frac < _SNAP_TOL, 0.0, frac)
        corner_steps = ([(0,), (1,)] if d == 1 else
                        [(0, 0), (0, 1), (1, 0), (1, 1)])
        for step in corner_steps:
            theta = np.ones(len(w))
            for k in range(d):
                theta *= frac[:, k] if step[k] else 1.0 - frac[:, k]
            live = theta > 0
            if not np.any(live):
                continue
            idx = base[live] + np.asarray(step, dtype=np.int64)
            ipos, epos = grid.locate_many(idx)
            contrib = w[live] * theta[live]
            hit_i = ipos >= 0
            gi_r.append(row_pair[live][hit_i])
            gi_c.append(ipos[hit_i])
            gi_v.append(contrib[hit_i])
            hit_e = (ipos < 0) & (epos >= 0)
            ge_r.append(row_pair[live][hit_e])
            ge_c.append(epos[hit_e])
            ge_v.append(contrib[hit_e])

    def build(rows, cols, vals, shape):
        if rows:
            mat = sp.coo_matrix((np.concatenate(vals),
                                 (np.concatenate(rows), np.concatenate(cols))),
                                shape=shape).tocsr()
            mat.sum_duplicates()
            return mat
        return sp.csr_matrix(shape)

    gain = build(gi_r, gi_c, gi_v, (n, n))
    gain_ext = build(ge_r, ge_c, ge_v, (n, m_ext))
    return NonlocalRows(gain=gain, gain_exterior=gain_ext, mass=mass)


def assemble_operator(grid: SpatialGrid, coeffs: CoefficientField,
                      kernel: JumpKernel, variant: str = FULL) -> DiscreteOperator:
    """Compose local and jump rows into the requested operator variant.

    ``full`` keeps the jump gains; ``local`` keeps only the -nu(x) loss
    diagonal (gains dropped), which is the comparison operator whose
    eigenvalue always dominates the full one.
    """
    if variant not in (FULL, LOCAL):
        raise ValueError(f"unknown operator variant {variant!r}")
    local = assemble_local(grid, coeffs)
    jumps = assemble_nonlocal(grid, kernel)
    loss = sp.diags(jumps.mass).tocsr()
    if variant == FULL:
        matrix = (local.matrix + jumps.gain - loss).tocsr()
        exterior = (local.exterior + jumps.gain_exterior).tocsr()
        gain, gain_ext = jumps.gain, jumps.gain_exterior
    else:
        matrix = (local.matrix - loss).tocsr()
        exterior = local.exterior
        n, m = grid.n_interior, grid.n_exterior
        gain, gain_ext = sp.csr_matrix((n, n)), sp.csr_matrix((n, m))
    op = DiscreteOperator(grid=grid, variant=variant,
                          matrix=matrix, exterior=exterior,
                          local_matrix=local.matrix,
                          local_exterior=local.exterior,
                          gain=gain, gain_exterior=gain_ext,
                          mass=jumps.mass, coefficients=coeffs)
    return op._flags()


# -- plain-text exchange format ------------------------------------------------

def write_matrix_text(matrix: sp.spmatrix, path) -> None:
    """Coordinate-list text: header then '<row> <col> <value>' sorted, 0-based."""
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("row col value\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")


def read_matrix_text(path, shape=None) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "row col value":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
    if shape is None:
        n = max(max(rows, default=-1), max(cols, default=-1)) + 1
        shape = (n, n)
    return sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
