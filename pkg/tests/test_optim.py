import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseda import _cdcore, _cdpure
from sparseda.exceptions import SingularMatrixError
from sparseda.optim import (
    QuadraticProgram,
    kkt_residual,
    lasso_quadratic,
    objective,
    require_converged,
    solve_spd,
)


def random_spd(rng, p, ridge=None):
    a = rng.standard_normal((p, p))
    return a @ a.T + (p if ridge is None else ridge) * np.eye(p)


# ---------------------------------------------------------------- solve_spd


def test_solve_spd_identity():
    b = np.array([3.0, -1.0, 2.0])
    assert np.array_equal(solve_spd(np.eye(3), b), b)


def test_solve_spd_2x2_exact():
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    x = solve_spd(a, np.array([2.0, 3.0]))
    assert np.allclose(x, [0.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_solve_spd_residual(seed):
    rng = np.random.default_rng(seed)
    a = random_spd(rng, 8)
    b = rng.standard_normal(8)
    x = solve_spd(a, b)
    assert np.abs(a @ x - b).max() < 1e-10


def test_solve_spd_matrix_rhs():
    rng = np.random.default_rng(3)
    a = random_spd(rng, 6)
    b = rng.standard_normal((6, 4))
    x = solve_spd(a, b)
    assert np.abs(a @ x - b).max() < 1e-10


def test_solve_spd_singular_names_pivot():
    with pytest.raises(SingularMatrixError) as exc:
        solve_spd(np.diag([1.0, 1e-30, 2.0]), np.ones(3))
    assert exc.value.index == 1


def test_solve_spd_indefinite_names_pivot():
    a = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(SingularMatrixError) as exc:
        solve_spd(a, np.ones(2))
    assert exc.value.index == 1


def test_solve_spd_rejects_asymmetric():
    a = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        solve_spd(a, np.ones(2))


def test_solve_spd_rejects_bad_rhs_shape():
    with pytest.raises(ValueError, match="right-hand side"):
        solve_spd(np.eye(2), np.ones(3))


# ---------------------------------------------------------- QuadraticProgram


def test_quadratic_program_validation():
    with pytest.raises(ValueError, match="symmetric"):
        QuadraticProgram(q=np.array([[1.0, 1.0], [0.0, 1.0]]), c=np.zeros(2), lam=0.1)
    with pytest.raises(ValueError, match="lam"):
        QuadraticProgram(q=np.eye(2), c=np.zeros(2), lam=-0.1)
    with pytest.raises(ValueError, match="shape"):
        QuadraticProgram(q=np.eye(2), c=np.zeros(3), lam=0.1)


# ------------------------------------------------------------ lasso solver


def test_lasso_identity_unpenalized():
    qp = QuadraticProgram(q=np.eye(2), c=np.array([1.0, 2.0]), lam=0.0)
    rep = lasso_quadratic(qp)
    assert rep.converged
    assert np.allclose(rep.solution, [1.0, 2.0], atol=1e-12)


def test_lasso_identity_soft_threshold():
    qp = QuadraticProgram(q=np.eye(2), c=np.array([1.0, 2.0]), lam=0.5)
    rep = lasso_quadratic(qp)
    assert np.allclose(rep.solution, [0.5, 1.5], atol=1e-12)


def test_lasso_zero_above_lambda_max():
    rng = np.random.default_rng(11)
    q = random_spd(rng, 5)
    c = rng.standard_normal(5)
    qp = QuadraticProgram(q=q, c=c, lam=np.abs(c).max())
    rep = lasso_quadratic(qp)
    assert np.array_equal(rep.solution, np.zeros(5))
    assert rep.converged


@pytest.mark.parametrize("seed", range(8))
def test_lasso_beats_random_perturbations(seed):
    # The solution's objective is a local (hence global) minimum: no
    # perturbation of magnitude 1e-3 in 10^4 random directions improves it.
    rng = np.random.default_rng(seed)
    q = random_spd(rng, 6)
    c = rng.standard_normal(6)
    qp = QuadraticProgram(q=q, c=c, lam=0.4)
    rep = lasso_quadratic(qp)
    assert rep.converged
    assert rep.max_kkt_violation < 1e-8
    base = objective(qp, rep.solution)
    u = rng.standard_normal((10_000, 6))
    u *= 1e-3 / np.linalg.norm(u, axis=1, keepdims=True)
    cand = rep.solution + u
    vals = 0.5 * np.einsum("ij,jk,ik->i", cand, qp.q, cand) - cand @ qp.c
    vals += qp.lam * np.abs(cand).sum(axis=1)
    assert base <= vals.min() + 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_lasso_objective_monotone_per_sweep(seed):
    rng = np.random.default_rng(100 + seed)
    q = random_spd(rng, 10)
    c = 3.0 * rng.standard_normal(10)
    qp = QuadraticProgram(q=q, c=c, lam=0.7)
    rep = lasso_quadratic(qp, record_objective=True)
    path = np.array(rep.objective_path)
    assert len(path) == rep.iterations
    assert np.all(np.diff(path) <= 1e-14 * (1.0 + np.abs(path[:-1])))


@pytest.mark.parametrize("seed", range(4))
def test_lasso_matches_spd_solve_at_zero_penalty(seed):
    rng = np.random.default_rng(200 + seed)
    q = random_spd(rng, 7)
    c = rng.standard_normal(7)
    rep = lasso_quadratic(QuadraticProgram(q=q, c=c, lam=0.0))
    assert np.abs(rep.solution - solve_spd(q, c)).max() < 1e-8


@given(t=st.floats(min_value=0.05, max_value=50.0), seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_lasso_scaling_invariance(t, seed):
    # Scaling (Q, c, lam) by t > 0 leaves the minimizer unchanged.
    rng = np.random.default_rng(seed)
    q = random_spd(rng, 5)
    c = rng.standard_normal(5)
    rep1 = lasso_quadratic(QuadraticProgram(q=q, c=c, lam=0.3))
    rep2 = lasso_quadratic(QuadraticProgram(q=t * q, c=t * c, lam=t * 0.3), tol=1e-10 * t)
    assert np.abs(rep1.solution - rep2.solution).max() < 1e-8


@given(
    c=st.floats(min_value=-10, max_value=10),
    lam=st.floats(min_value=0, max_value=5),
    qd=st.floats(min_value=0.1, max_value=10),
)
@settings(max_examples=100, deadline=None)
def test_lasso_univariate_is_soft_threshold(c, lam, qd):
    rep = lasso_quadratic(QuadraticProgram(q=np.array([[qd]]), c=np.array([c]), lam=lam))
    expect = np.sign(c) * max(abs(c) - lam, 0.0) / qd
    assert abs(rep.solution[0] - expect) < 1e-12 * max(1.0, abs(expect))


def test_lasso_kink_tie_goes_to_zero():
    # Gradient magnitude exactly lam: the coordinate is set to zero.
    qp = QuadraticProgram(q=np.eye(2), c=np.array([0.5, 1.0]), lam=0.5)
    rep = lasso_quadratic(qp)
    assert rep.solution[0] == 0.0
    assert rep.solution[1] == 0.5


def test_lasso_converged_implies_violation_below_tol():
    rng = np.random.default_rng(9)
    for _ in range(5):
        q = random_spd(rng, 6)
        c = rng.standard_normal(6)
        qp = QuadraticProgram(q=q, c=c, lam=0.2)
        rep = lasso_quadratic(qp, tol=1e-9)
        assert rep.converged
        assert rep.max_kkt_violation <= 1e-9
        assert kkt_residual(qp, rep.solution) <= 1e-9


def test_lasso_max_iter_exhaustion_reported_not_raised():
    rng = np.random.default_rng(21)
    q = random_spd(rng, 6)
    c = 5.0 * rng.standard_normal(6)
    qp = QuadraticProgram(q=q, c=c, lam=0.01)
    rep = lasso_quadratic(qp, max_iter=1)
    assert not rep.converged
    assert rep.max_kkt_violation > 1e-10
    with pytest.raises(Exception, match="did not converge"):
        require_converged(rep)


def test_lasso_warm_start_converges_fast():
    rng = np.random.default_rng(5)
    q = random_spd(rng, 8)
    c = rng.standard_normal(8)
    qp = QuadraticProgram(q=q, c=c, lam=0.1)
    cold = lasso_quadratic(qp)
    warm = lasso_quadratic(qp, start=cold.solution)
    assert warm.converged
    assert warm.iterations <= cold.iterations
    assert np.abs(warm.solution - cold.solution).max() < 1e-10


def test_zero_diagonal_coordinate_held_and_flagged():
    q = np.diag([1.0, 0.0])
    # |c_1| <= lam: the held coordinate satisfies optimality at zero.
    rep = lasso_quadratic(QuadraticProgram(q=q, c=np.array([1.0, 0.3]), lam=0.5))
    assert rep.held == (1,)
    assert rep.solution[1] == 0.0
    assert rep.converged
    # |c_1| > lam: no minimizer along that coordinate; reported, not raised.
    rep = lasso_quadratic(QuadraticProgram(q=q, c=np.array([1.0, 0.8]), lam=0.5))
    assert rep.held == (1,)
    assert rep.solution[1] == 0.0
    assert not rep.converged
    assert rep.max_kkt_violation == pytest.approx(0.3, abs=1e-12)


# ------------------------------------------------------------ kkt_residual


def test_kkt_residual_zero_at_separable_minimizer():
    # Q = diag(2, 4), c = (3, 0), lam = 1: minimizer ((3-1)/2, 0).
    qp = QuadraticProgram(q=np.diag([2.0, 4.0]), c=np.array([3.0, 0.0]), lam=1.0)
    assert kkt_residual(qp, np.array([1.0, 0.0])) <= 1e-15


@pytest.mark.parametrize("lam", [0.0, 0.1, 1.0, 10.0])
def test_kkt_residual_zero_vector_zero_data(lam):
    qp = QuadraticProgram(q=np.eye(3), c=np.zeros(3), lam=lam)
    assert kkt_residual(qp, np.zeros(3)) == 0.0


def test_kkt_residual_detects_suboptimality():
    rng = np.random.default_rng(17)
    q = random_spd(rng, 5)
    c = rng.standard_normal(5)
    qp = QuadraticProgram(q=q, c=c, lam=0.3)
    rep = lasso_quadratic(qp)
    bad = rep.solution + 1e-3
    assert kkt_residual(qp, bad) > 10 * 1e-10
    assert objective(qp, bad) > objective(qp, rep.solution)


# ------------------------------------------------------------ backends


@pytest.mark.parametrize("seed", range(6))
def test_backends_agree(seed):
    rng = np.random.default_rng(300 + seed)
    p = 12
    q = np.ascontiguousarray(random_spd(rng, p))
    c = np.ascontiguousarray(rng.standard_normal(p))
    lam = 0.25
    v1 = np.zeros(p)
    s1, k1, conv1, held1 = _cdpure.cd_lasso(q, c, lam, v1, 1e-10, 100_000, None)
    v2 = np.zeros(p)
    s2, k2, conv2, held2 = _cdcore.cd_lasso(q, c, lam, v2, 1e-10, 100_000, None)
    assert conv1 and conv2
    assert held1 == held2 == ()
    assert np.abs(v1 - v2).max() < 1e-12
    assert (v1 != 0).tolist() == (v2 != 0).tolist()


def test_backends_agree_on_objective_paths():
    rng = np.random.default_rng(77)
    p = 6
    q = np.ascontiguousarray(random_spd(rng, p))
    c = np.ascontiguousarray(rng.standard_normal(p))
    path1: list = []
    path2: list = []
    v1 = np.zeros(p)
    _cdpure.cd_lasso(q, c, 0.2, v1, 1e-10, 100_000, path1)
    v2 = np.zeros(p)
    _cdcore.cd_lasso(q, c, 0.2, v2, 1e-10, 100_000, path2)
    assert len(path1) == len(path2)
    assert np.abs(np.array(path1) - np.array(path2)).max() < 1e-12
