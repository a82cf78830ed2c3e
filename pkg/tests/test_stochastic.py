import numpy as np
import pytest

from nonlocal_spectra import (Interval, JumpKernel, ProblemSpec, fk_estimate,
                              principal_eig, simulate_paths)
from nonlocal_spectra.errors import AllPathsDead, ThinningBoundExceeded
from conftest import laplacian_op

PI = np.pi


def test_free_diffusion_variance():
    # generator d^2/dx^2 gives Var(X_t) = 2t
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None)
    ens = simulate_paths(problem, None, 0.0, 1.0, 1e-3, 100000, seed=1)
    var = ens.final_position[:, 0].var()
    stderr = 2.0 * np.sqrt(2.0 / 100000)  # var of sample variance ~ 2 sigma^4/N
    assert abs(var - 2.0) <= 3 * stderr + 0.05


def test_jump_counts_poisson():
    kernel = JumpKernel.atomic([[10.0]], [2.0])
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None,
                          kernel=kernel)
    ens = simulate_paths(problem, None, 0.0, 1.0, 1e-3, 50000, seed=2)
    mean = ens.jump_count.mean()
    sigma = np.sqrt(2.0 / 50000)
    assert abs(mean - 2.0) <= 3 * sigma + 2 * 1e-3 * 2.0


def test_zero_step_rejected():
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None)
    with pytest.raises(ValueError):
        simulate_paths(problem, None, 0.0, 1.0, 0.0, 10, seed=0)


def test_constant_potential_exact():
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None, c=-1.3)
    result = fk_estimate(problem, None, 0.0, 1.0, 1e-3, 200, seed=3,
                         bootstrap=10)
    assert result.value == pytest.approx(1.3, abs=1e-12)


def test_thinning_bound_enforced():
    kernel = JumpKernel.atomic([[1.0]], [2.0])
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None,
                          kernel=kernel)
    with pytest.raises(ThinningBoundExceeded):
        simulate_paths(problem, None, 0.0, 0.5, 1e-2, 100, seed=4,
                       nu_bound=1.0)


def test_all_paths_dead():
    problem = ProblemSpec(dimension=1, domain=Interval(-0.05, 0.05), h=0.01,
                          halo=None)
    with pytest.raises(AllPathsDead):
        fk_estimate(problem, problem.domain, 0.0, 5.0, 1e-3, 50, seed=5,
                    bootstrap=10)


def test_reproducibility_and_prefix_stability():
    kernel = JumpKernel.atomic([[10.0]], [2.0])
    problem = ProblemSpec(dimension=1, domain=Interval(0.0, PI), h=0.05,
                          halo=None, kernel=kernel)
    a = fk_estimate(problem, problem.domain, PI / 2, 1.0, 1e-2, 400, seed=6,
                    bootstrap=20)
    b = fk_estimate(problem, problem.domain, PI / 2, 1.0, 1e-2, 400, seed=6,
                    bootstrap=20)
    assert a.value == b.value and a.stderr == b.stderr
    big = simulate_paths(problem, problem.domain, PI / 2, 1.0, 1e-2, 400,
                         seed=6)
    small = simulate_paths(problem, problem.domain, PI / 2, 1.0, 1e-2, 150,
                           seed=6)
    assert np.array_equal(big.survived[:150], small.survived)
    assert np.array_equal(big.exit_time[:150], small.exit_time)
    assert np.array_equal(big.potential_integral[:150],
                          small.potential_integral)


@pytest.fixture(scope="module")
def laplacian_fk():
    problem = ProblemSpec(dimension=1, domain=Interval(0.0, PI), h=0.05,
                          halo=None)
    return fk_estimate(problem, problem.domain, PI / 2, 2.0, 1e-3, 30000,
                       seed=11)


def test_fk_laplacian_matches_eigensolver(laplacian_fk, laplace_pi):
    eig = principal_eig(laplace_pi, tol=1e-10)
    tol = max(0.1 * abs(eig.value), 3 * laplacian_fk.stderr)
    assert abs(laplacian_fk.value - eig.value) <= tol


def test_fk_two_window_consistency(laplacian_fk):
    # Dirichlet gap is 3 here, far above the 0.5 threshold where the late
    # and early windows must agree
    assert laplacian_fk.consistency_gap <= max(
        3 * 2 * laplacian_fk.stderr, 0.08)


def test_fk_out_jumping_kernel():
    kernel = JumpKernel.atomic([[50.0]], [2.0])
    problem = ProblemSpec(dimension=1, domain=Interval(0.0, PI), h=0.05,
                          halo=None, kernel=kernel)
    result = fk_estimate(problem, problem.domain, PI / 2, 2.0, 1e-3, 60000,
                         seed=12)
    op = laplacian_op(kernel=kernel, halo=50.0)
    eig = principal_eig(op, tol=1e-10)
    tol = max(0.1 * abs(eig.value), 3 * result.stderr)
    assert abs(result.value - eig.value) <= tol
