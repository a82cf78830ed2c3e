import numpy as np
import pytest

from nonlocal_spectra import (CoefficientField, Interval, JumpKernel,
                              ProblemSpec, assemble_operator, build_grid,
                              barrier, dense_principal, lambda_double_prime,
                              lambda_prime, refined_mp_check,
                              right_monotonicity_check)
from nonlocal_spectra.maxprinciple import (EXP, POLY, SUBSOLUTION,
                                           SUPERSOLUTION, FeasibilityProblem)
from nonlocal_spectra.errors import BracketInvalid, SingularSystem
from conftest import laplacian_op

PI = np.pi


@pytest.fixture(scope="module")
def big_box_laplacian():
    problem = ProblemSpec(dimension=1, domain=Interval(-10.0, 10.0), h=0.1,
                          halo=None)
    return problem.operator()


def test_lambda_double_prime_laplacian_near_zero(big_box_laplacian):
    value = lambda_double_prime(big_box_laplacian, 1e3, 0.02, (-1.0, 1.0))
    assert abs(value) <= 0.05


def test_lambda_double_prime_floor(big_box_laplacian):
    # the constant witness certifies every rate below -sup c
    value = lambda_double_prime(big_box_laplacian, 1e3, 0.02, (-1.0, 1.0))
    assert value >= -big_box_laplacian.coefficients.c.max() - 0.02


def test_lambda_prime_constant_potential():
    problem = ProblemSpec(dimension=1, domain=Interval(-40.0, 40.0), h=0.1,
                          halo=None, c=0.3)
    op = problem.operator()
    value = lambda_prime(op, 5.0, 0.02, (-2.0, 1.0))
    assert abs(value - (-0.3)) <= 0.05


def test_bisection_contract(big_box_laplacian):
    bisect_tol = 0.02
    value = lambda_double_prime(big_box_laplacian, 1e3, bisect_tol,
                                (-1.0, 1.0))
    low = FeasibilityProblem(big_box_laplacian, SUBSOLUTION, 1e3,
                             value - 2 * bisect_tol)
    high = FeasibilityProblem(big_box_laplacian, SUBSOLUTION, 1e3,
                              value + 2 * bisect_tol)
    assert low.check()
    assert not high.check()


def test_bisection_contract_supersolution():
    problem = ProblemSpec(dimension=1, domain=Interval(-40.0, 40.0), h=0.1,
                          halo=None, c=0.3)
    op = problem.operator()
    bisect_tol = 0.02
    value = lambda_prime(op, 5.0, bisect_tol, (-2.0, 1.0))
    assert FeasibilityProblem(op, SUPERSOLUTION, 5.0,
                              value + 2 * bisect_tol).check()
    assert not FeasibilityProblem(op, SUPERSOLUTION, 5.0,
                                  value - 2 * bisect_tol).check()


def test_bracket_invalid(big_box_laplacian):
    with pytest.raises(BracketInvalid):
        lambda_double_prime(big_box_laplacian, 1e3, 0.02, (-3.0, -2.0))
    with pytest.raises(BracketInvalid):
        lambda_double_prime(big_box_laplacian, 1e3, 0.02, (5.0, 6.0))


def test_refined_mp_pass(laplace_pi):
    check = refined_mp_check(laplace_pi, np.ones(laplace_pi.n))
    assert check.verdict == "PASS"
    x = laplace_pi.grid.interior_coords.ravel()
    expected = x * (x - PI) / 2
    assert np.abs(check.witness - expected).max() < 1e-10
    assert check.witness.min() == pytest.approx(-PI**2 / 8, rel=0.01)


def test_refined_mp_zero_source(laplace_pi):
    check = refined_mp_check(laplace_pi, np.zeros(laplace_pi.n))
    assert check.verdict == "PASS"
    assert np.all(check.witness == 0.0)


def test_refined_mp_fails_with_eigenfunction_witness():
    op = laplacian_op(c=2.0)
    check = refined_mp_check(op, np.ones(op.n))
    assert check.verdict == "FAIL"
    assert np.all(check.witness > 0)
    assert check.eigen.value == pytest.approx(-1.0, abs=1e-3)


def test_refined_mp_refuses_singular_system():
    h = PI / 200
    discrete_value = (4 / h**2) * np.sin(h / 2) ** 2
    op = laplacian_op(c=discrete_value)
    with pytest.raises(SingularSystem):
        refined_mp_check(op, np.ones(op.n))


def test_barrier_exp_matches_row_bound():
    grid = build_grid(Interval(-6.0, 6.0), 0.1, halo_radius=1.0)
    coeffs = CoefficientField.sample(grid, a=1.0, b=1.0)
    kernel = JumpKernel.atomic([[1.0]], [1.0])
    result = barrier(EXP, 0.5, grid, coeffs, kernel)
    analytic = 0.25 + 0.5 + 1.0 * (np.exp(0.5) - 1.0)
    assert abs(result.growth_bound - analytic) / analytic < 0.2
    assert np.all(result.chi_interior > 0)
    assert np.all(result.chi_exterior > 0)


def test_barrier_poly_bounded_growth():
    grid = build_grid(Interval(-8.0, 8.0), 0.1, halo_radius=0.5)
    coeffs = CoefficientField.sample(
        grid, a=1.0, b=lambda pts: 0.5 * (1.0 + np.abs(pts[:, 0])))
    kernel = JumpKernel.atomic([[0.5]], [0.3])
    result = barrier(POLY, 2.0, grid, coeffs, kernel)
    assert np.isfinite(result.growth_bound)
    assert np.all(result.chi_interior > 0)


def test_barrier_positivity_various():
    grid = build_grid(Interval(-4.0, 4.0), 0.25, halo_radius=0.0)
    coeffs = CoefficientField.sample(grid)
    for kind, sigma in ((EXP, 0.1), (EXP, 2.0), (POLY, 0.5), (POLY, 3.0)):
        result = barrier(kind, sigma, grid, coeffs, JumpKernel.none(1))
        assert np.all(result.chi_interior > 0)


def test_right_monotonicity_strict_for_oscillator(oscillator_problem):
    def bump(pts):
        return np.where(np.abs(np.asarray(pts).reshape(-1, 1)[:, 0]) < 1.0,
                        1.0, 0.0)

    result = right_monotonicity_check(oscillator_problem, bump, [2, 4, 6],
                                      0.05)
    assert result.strict
    assert result.gap > 0.05


def test_right_monotonicity_zero_bump_exact(oscillator_problem):
    def bump(pts):
        return np.zeros(len(np.atleast_2d(pts)))

    result = right_monotonicity_check(oscillator_problem, bump, [2, 4], 0.05)
    assert result.gap == 0.0
    assert not result.strict


def test_right_monotonicity_laplacian_bound_state():
    problem = ProblemSpec(dimension=1, domain=None, h=0.05, halo=None)

    def bump(pts):
        return np.where(np.abs(np.asarray(pts).reshape(-1, 1)[:, 0]) < 1.0,
                        1.0, 0.0)

    result = right_monotonicity_check(problem, bump, [4, 8, 16], 0.05)
    assert result.gap >= 0.1
    # oracle: dense eigensolve of the bumped operator on the largest ball
    bumped = problem.with_potential(
        lambda pts: np.where(np.abs(pts[:, 0]) < 1.0, 1.0, 0.0))
    op = bumped.operator(Interval(-16.0, 16.0), 0.05)
    mu, _ = dense_principal(op.matrix)
    assert result.bumped_value == pytest.approx(-mu, abs=1e-6)
    assert -mu < -0.1
