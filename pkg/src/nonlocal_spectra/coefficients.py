"""Per-node coefficient data for the local drift-diffusion-potential part."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EllipticityViolated, NonSymmetricA
from .grid import SpatialGrid

_SYM_TOL = 1e-12


@dataclass
class CoefficientField:
    """Diffusion matrix, drift vector and potential sampled at interior nodes.

    ``a`` has shape (n, d, d) and must be symmetric with eigenvalues in
    [kappa, kappa_inv] on the domain; ``b`` is (n, d); ``c`` is (n,).
    The ellipticity bounds and the sup-norm of ``a`` are computed from the
    samples and kept as metadata.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    kappa: float = 0.0
    kappa_inv: float = 0.0
    sup_norm_a: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        n, d = self.b.shape
        if self.a.shape != (n, d, d) or self.c.shape != (n,):
            raise ValueError("coefficient arrays have inconsistent shapes")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.c))):
            raise ValueError("coefficients must be finite at every node")
        skew = np.abs(self.a - np.transpose(self.a, (0, 2, 1))).max(initial=0.0)
        scale = max(1.0, np.abs(self.a).max(initial=0.0))
        if skew > _SYM_TOL * scale:
            raise NonSymmetricA(f"max |a - a^T| = {skew:g}")
        eigs = np.linalg.eigvalsh(self.a)
        lo, hi = float(eigs.min()), float(eigs.max())
        if lo <= 0:
            raise EllipticityViolated(
                f"diffusion matrix has eigenvalue {lo:g} <= 0; "
                "degenerate diffusion is rejected"
            )
        self.kappa = lo
        self.kappa_inv = hi
        self.sup_norm_a = float(np.abs(self.a).max())

    @classmethod
    def sample(cls, grid: SpatialGrid, a=1.0, b=0.0, c=0.0) -> "CoefficientField":
        """Evaluate coefficient specifications on the interior nodes.

        ``a`` may be a scalar (isotropic), a callable returning (n,) isotropic
        values, or a callable returning (n, d, d) matrices.  ``b`` may be a
        scalar (1D), a length-d vector, or a callable returning (n, d).
        ``c`` may be a scalar or a callable returning (n,).
        """
        pts = grid.interior_coords
        n, d = pts.shape
        eye = np.eye(d)

        if callable(a):
            av = np.asarray(a(pts), dtype=float)
            a_arr = av[:, None, None] * eye if av.ndim == 1 else av
        else:
            a_arr = np.broadcast_to(float(a) * eye, (n, d, d)).copy()

        if callable(b):
            bv = np.asarray(b(pts), dtype=float)
            b_arr = bv.reshape(n, d)
        else:
            bvec = np.atleast_1d(np.asarray(b, dtype=float))
            if bvec.size == 1:
                bvec = np.full(d, bvec[0])
            b_arr = np.broadcast_to(bvec, (n, d)).copy()

        c_arr = (np.asarray(c(pts), dtype=float).reshape(n)
                 if callable(c) else np.full(n, float(c)))
        return cls(a=a_arr, b=b_arr, c=c_arr)
