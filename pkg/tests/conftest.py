import numpy as np
import pytest

from nonlocal_spectra import (CoefficientField, Interval, JumpKernel,
                              ProblemSpec, assemble_operator, build_grid)

PI = np.pi


def laplacian_op(n_cells=200, c=0.0, kernel=None, halo=0.0):
    """Dirichlet Laplacian (+ optional potential/kernel) on (0, pi)."""
    kernel = kernel or JumpKernel.none(1)
    grid = build_grid(Interval(0.0, PI), PI / n_cells, halo_radius=halo)
    coeffs = CoefficientField.sample(grid, a=1.0, c=c)
    return assemble_operator(grid, coeffs, kernel, "full")


@pytest.fixture(scope="session")
def laplace_pi():
    return laplacian_op()


@pytest.fixture(scope="session")
def laplace_problem():
    return ProblemSpec(dimension=1, domain=Interval(0.0, PI), h=PI / 200,
                       halo=None)


@pytest.fixture(scope="session")
def oscillator_problem():
    return ProblemSpec(dimension=1, domain=None, h=0.05, halo=None,
                       c=lambda pts: -(pts[:, 0] ** 2))
