import numpy as np
import pytest

from nonlocal_spectra import monotone_iterate, principal_eig, solve_linear
from nonlocal_spectra.errors import EigenvalueNotPositive, OrderingBroken
from conftest import laplacian_op

PI = np.pi


def newton_solve(op, f, df, u0, tol=1e-10, max_iter=60):
    """Damped Newton oracle for L u = f(x, u), independent of the monotone path."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    pts = op.grid.interior_coords
    u = u0.copy()
    res = op.matrix @ u - f(pts, u)
    for _ in range(max_iter):
        jac = op.matrix - sp.diags(df(pts, u))
        step = spla.spsolve(sp.csc_matrix(jac), res)
        t = 1.0
        while t > 1e-6:
            trial = u - t * step
            trial_res = op.matrix @ trial - f(pts, trial)
            if np.abs(trial_res).max() < np.abs(res).max():
                break
            t /= 2
        u = u - t * step
        res = op.matrix @ u - f(pts, u)
        if np.abs(res).max() < tol:
            return u
    raise AssertionError("newton oracle did not converge")


def test_solve_linear_closed_form(laplace_pi):
    u = solve_linear(laplace_pi, -np.ones(laplace_pi.n))
    x = laplace_pi.grid.interior_coords.ravel()
    expected = x * (PI - x) / 2
    assert np.abs(u - expected).max() < 1e-10 * max(1, np.abs(expected).max())
    assert np.all(u > 0)
    assert u.max() == pytest.approx(PI**2 / 8, rel=0.01)


def test_solve_linear_zero_source(laplace_pi):
    u = solve_linear(laplace_pi, np.zeros(laplace_pi.n))
    assert np.all(u == 0.0)


def test_solve_linear_refuses_nonpositive_rate():
    op = laplacian_op(c=2.0)
    with pytest.raises(EigenvalueNotPositive):
        solve_linear(op, -np.ones(op.n))


def test_solve_linear_comparison(laplace_pi):
    rng = np.random.default_rng(5)
    f2 = -rng.random(laplace_pi.n)
    f1 = f2 - rng.random(laplace_pi.n)  # f1 <= f2 <= 0
    u1 = solve_linear(laplace_pi, f1)
    u2 = solve_linear(laplace_pi, f2)
    assert np.all(u1 >= u2 - 1e-12)


def test_affine_nonlinearity_converges_immediately(laplace_pi):
    x = laplace_pi.grid.interior_coords.ravel()
    g = -np.ones(laplace_pi.n)
    exact = x * (PI - x) / 2

    def f(pts, u):
        return g

    sub = np.zeros(laplace_pi.n)
    super_ = exact.copy()  # the solution itself is an admissible barrier
    # theta = 0 is admissible for a u-independent source (zero Lipschitz
    # constant, positive rate), and makes the first solve exact
    u, trace = monotone_iterate(laplace_pi, f, sub, super_, theta=0.0,
                                tol=1e-10)
    assert trace.iterations <= 2
    linear = solve_linear(laplace_pi, g)
    assert np.abs(u - linear).max() <= 1e-10


@pytest.fixture(scope="module")
def logistic_fixture():
    op = laplacian_op(c=2.0)
    eig = principal_eig(op, tol=1e-11)
    scale = min(1.0, -eig.value / 2.0)
    sub = eig.psi / eig.psi.max() * scale
    super_ = np.ones(op.n)

    def f(pts, u):
        return 2.0 * u * u

    return op, f, sub, super_


def test_logistic_monotone_iteration(logistic_fixture):
    op, f, sub, super_ = logistic_fixture
    u, trace = monotone_iterate(op, f, sub, super_, tol=1e-8)
    assert trace.residuals[-1] <= 1e-8
    assert np.all(u >= sub - 1e-9) and np.all(u <= 1.0 + 1e-12)
    for a, b in zip(trace.iterates, trace.iterates[1:]):
        assert np.all(b >= a - 1e-11)


def test_logistic_agrees_with_newton(logistic_fixture):
    op, f, sub, super_ = logistic_fixture
    u, _ = monotone_iterate(op, f, sub, super_, tol=1e-10)

    def df(pts, v):
        return 4.0 * v

    u_newton = newton_solve(op, f, df, super_.copy())
    assert np.abs(u - u_newton).max() <= 1e-6


def test_limit_is_fixed_point(logistic_fixture):
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    op, f, sub, super_ = logistic_fixture
    tol = 1e-9
    u, trace = monotone_iterate(op, f, sub, super_, tol=tol)
    theta = trace.theta
    shifted = sp.csc_matrix(op.matrix - theta * sp.identity(op.n))
    pts = op.grid.interior_coords
    again = spla.spsolve(shifted, f(pts, u) - theta * u)
    assert np.abs(again - u).max() <= 2 * tol


def test_shift_independence(logistic_fixture):
    op, f, sub, super_ = logistic_fixture
    tol = 1e-10
    u1, _ = monotone_iterate(op, f, sub, super_, theta=6.0, tol=tol)
    u2, _ = monotone_iterate(op, f, sub, super_, theta=11.0, tol=tol)
    assert np.abs(u1 - u2).max() <= 10 * tol


def test_rejects_swapped_barriers(logistic_fixture):
    op, f, sub, super_ = logistic_fixture
    with pytest.raises(OrderingBroken):
        monotone_iterate(op, f, super_, sub, tol=1e-8)


def test_rejects_false_subsolution(laplace_pi):
    # u = 1 is not a subsolution of L u = 1 (interior rows give 0 < 1)
    def f(pts, u):
        return np.ones(len(pts))

    with pytest.raises(OrderingBroken):
        monotone_iterate(laplace_pi, f, np.ones(laplace_pi.n),
                         np.full(laplace_pi.n, 2.0), tol=1e-8)
