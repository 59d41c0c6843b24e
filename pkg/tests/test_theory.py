import itertools
import json
import math

import numpy as np
import pytest

from sparseda.exceptions import SingularMatrixError
from sparseda.model import (
    CovarianceSpec,
    GaussianLdaModel,
    discriminant_direction,
    make_covariance,
    make_model,
    sigma_conditional,
)
from sparseda.sda import population_program
from sparseda.optim import lasso_quadratic
from sparseda.theory import (
    TAU_MULTIPLIER,
    beta_min_threshold,
    conditional_variances,
    irrepresentable,
    lambda0,
    lambda_of,
    lambda_sda,
    phi_close,
    phi_far,
    population_conditions,
    sufficient_n,
    tau_min,
    theory_report,
)
from sparseda.theory import _lambda_sda_value


def model_from_gap(gap, sigma, pi1=0.5, spec=None):
    gap = np.asarray(gap, dtype=np.float64)
    return GaussianLdaModel(
        mu1=np.zeros_like(gap),
        mu2=gap,
        sigma=np.asarray(sigma, dtype=np.float64),
        pi1=pi1,
        pi2=1.0 - pi1,
        covariance_spec=spec,
    )


def identity_gap_model(p, beta_t, support=None):
    # With Sigma = I the discriminant direction equals the mean gap.
    gap = np.zeros(p)
    support = range(len(beta_t)) if support is None else support
    gap[list(support)] = beta_t
    return model_from_gap(gap, np.eye(p), spec=CovarianceSpec("identity", p))


def exact_model(sigma, beta, pi1=0.5):
    """Model with mean gap Sigma beta whose direction solve must return
    the intended support exactly (dyadic factors or block sparsity)."""
    beta = np.asarray(beta, dtype=np.float64)
    model = model_from_gap(np.asarray(sigma) @ beta, sigma, pi1)
    direction = discriminant_direction(model)
    assert direction.support == tuple(int(j) for j in np.flatnonzero(beta))
    return model


def scattered_block_model(p, t, block, beta_t, diag=None):
    """Identity (or given diagonal) covariance with an SPD block at the
    scattered positions t; the off-support zeros survive the solve
    exactly because elimination never fills outside the block."""
    sigma = np.eye(p) if diag is None else np.diag(np.asarray(diag, dtype=np.float64))
    sigma[np.ix_(t, t)] = block
    beta = np.zeros(p)
    beta[list(t)] = beta_t
    return exact_model(sigma, beta)


# Unit-diagonal dyadic Cholesky factor: every Cholesky pivot is an
# exact IEEE value, so the direction solve reproduces beta bit for bit
# even though Sigma_NT is nonzero.
DYADIC_L = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, 0.5, 1.0]])
DYADIC_SIGMA = DYADIC_L @ DYADIC_L.T


def dyadic_model():
    return exact_model(DYADIC_SIGMA, [1.0, -1.0, 0.0])


def eq_corr(p, gamma):
    return (1.0 - gamma) * np.eye(p) + gamma * np.ones((p, p))


def random_spd(rng, p, jitter=0.5):
    a = rng.normal(size=(p, p))
    return a @ a.T + jitter * np.eye(p)


# -------------------------------------------------------- irrepresentable


def test_irrepresentable_identity_zero():
    value, margin = irrepresentable(np.eye(6), [1, 4], [1.0, -1.0])
    assert value == 0.0
    assert margin == 1.0


def test_irrepresentable_block_embedded_zero():
    block = CovarianceSpec("equal_correlation", 2, rho=0.6)
    sigma = make_covariance(CovarianceSpec("block_embedded", 7, block=block))
    value, margin = irrepresentable(sigma, [0, 1], [1.0, 1.0])
    assert value == 0.0 and margin == 1.0


def test_irrepresentable_equal_correlation_closed_form():
    # Sigma_TT 1 = (1 + gamma (s-1)) 1, so the value is gamma s / (1 + gamma (s-1)).
    gamma, s, p = 0.1, 5, 10
    value, margin = irrepresentable(eq_corr(p, gamma), range(s), np.ones(s))
    expected = gamma * s / (1.0 + gamma * (s - 1))
    assert math.isclose(value, expected, rel_tol=0, abs_tol=1e-14)
    assert math.isclose(value, 0.5 / 1.4, abs_tol=1e-14)
    assert math.isclose(margin, 1.0 - expected, abs_tol=1e-14)


def test_irrepresentable_matches_explicit_inverse():
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = int(rng.integers(4, 9))
        s = int(rng.integers(1, p - 1))
        sigma = random_spd(rng, p)
        t = sorted(rng.permutation(p)[:s].tolist())
        signs = rng.choice([-1.0, 1.0], size=s)
        n_idx = [j for j in range(p) if j not in t]
        brute = np.abs(
            sigma[np.ix_(n_idx, t)] @ np.linalg.inv(sigma[np.ix_(t, t)]) @ signs
        ).max()
        value, margin = irrepresentable(sigma, t, signs)
        assert abs(value - brute) < 1e-10
        assert abs(margin - (1.0 - brute)) < 1e-10


def test_irrepresentable_permutation_and_sign_flip_invariant():
    rng = np.random.default_rng(11)
    p, s = 7, 3
    sigma = random_spd(rng, p)
    t = [1, 3, 6]
    signs = np.array([1.0, -1.0, 1.0])
    base, _ = irrepresentable(sigma, t, signs)

    perm = rng.permutation(p)
    sigma_p = sigma[np.ix_(perm, perm)]
    inv = np.argsort(perm)
    t_p = sorted(inv[t].tolist())
    order = np.argsort(inv[t])
    value_p, _ = irrepresentable(sigma_p, t_p, signs[order])
    assert abs(base - value_p) < 1e-12

    flips = rng.choice([-1.0, 1.0], size=p)
    sigma_f = sigma * np.outer(flips, flips)
    value_f, _ = irrepresentable(sigma_f, t, signs * flips[t])
    assert abs(base - value_f) < 1e-12


def test_irrepresentable_rejects_singular_block():
    sigma = np.eye(4)
    sigma[0, 1] = sigma[1, 0] = 1.0
    with pytest.raises(SingularMatrixError):
        irrepresentable(sigma, [0, 1], [1.0, 1.0])


def test_irrepresentable_rejects_bad_arguments():
    with pytest.raises(ValueError):
        irrepresentable(np.eye(4), [], [])
    with pytest.raises(ValueError):
        irrepresentable(np.eye(4), [0, 4], [1.0, 1.0])
    with pytest.raises(ValueError):
        irrepresentable(np.eye(4), [0, 1], [1.0, 0.5])


# ------------------------------------------------------- penalty levels


def test_lambda0_worked_arithmetic():
    model = identity_gap_model(101, [1.0, 1.0])
    n = 1000
    expected = math.sqrt(0.25 * 1.0 * 2.0 * math.log(99 * math.log(n)) / n)
    got = lambda0(model, n)
    assert math.isclose(got, expected, rel_tol=1e-15)
    assert abs(got - 0.057131) < 5e-6


def test_lambda0_linear_in_constant():
    model = identity_gap_model(10, [1.0, -2.0])
    assert math.isclose(lambda0(model, 500, 2.0), 2.0 * lambda0(model, 500), rel_tol=1e-15)


def test_lambda0_unit_floor_on_small_signal():
    model = identity_gap_model(10, [0.5])
    n = 400
    expected = math.sqrt(0.25 * 1.0 * 1.0 * math.log(9 * math.log(n)) / n)
    assert math.isclose(lambda0(model, n), expected, rel_tol=1e-15)


def test_conditional_variances_vectorized_matches_per_coordinate():
    rng = np.random.default_rng(13)
    for _ in range(5):
        p = int(rng.integers(4, 9))
        sigma = random_spd(rng, p)
        s = int(rng.integers(1, p))
        t = sorted(rng.permutation(p)[:s].tolist())
        got = conditional_variances(sigma, t)
        expected = [sigma_conditional(sigma, t, a) for a in range(p) if a not in t]
        assert np.allclose(got, expected, rtol=1e-12, atol=1e-12)


def test_conditional_variances_equal_correlation_closed_form():
    # (1-g)(1+gs)/(1+g(s-1)) = 2/3 at g = 0.5, s = 2 for every outside coordinate.
    got = conditional_variances(eq_corr(6, 0.5), [0, 1])
    assert np.allclose(got, 2.0 / 3.0, atol=1e-14)
    assert conditional_variances(np.eye(4), [0, 1, 2, 3]).size == 0


def test_lambda0_nontrivial_conditional_factor():
    # Diagonal covariance keeps the support solve exact while making the
    # worst conditional variance 9 rather than 1.
    model = exact_model(np.diag([4.0, 1.0, 2.0, 9.0, 1.0, 1.0]), [0.5, -1.0, 0, 0, 0, 0])
    n = 1200
    beta_norm = 4 * 0.25 + 1.0
    expected = math.sqrt(0.25 * 9.0 * beta_norm * math.log(4 * math.log(n)) / n)
    assert math.isclose(lambda0(model, n), expected, rel_tol=1e-14)


def test_lambda0_degenerate_full_support_warns():
    model = identity_gap_model(2, [1.0, -1.0])
    n = 1000
    with pytest.warns(UserWarning):
        got = lambda0(model, n)
    expected = math.sqrt(0.25 * 1.0 * 2.0 * math.log(math.log(n)) / n)
    assert math.isclose(got, expected, rel_tol=1e-15)


def test_lambda0_rejects_tiny_n():
    model = identity_gap_model(10, [1.0])
    with pytest.raises(ValueError):
        lambda0(model, 2)


def test_lambda_of_scales_lambda0():
    model = identity_gap_model(12, [1.0, 1.0, -1.0])
    n = 600
    expected = lambda0(model, n) / (1.0 + 0.25 * 3.0)
    assert math.isclose(lambda_of(model, n), expected, rel_tol=1e-15)


def test_lambda_sda_worked_arithmetic():
    model = identity_gap_model(100, [1.0] * 8 + [-1.0] * 8)
    n = 2 * 16 * math.log(100)
    expected = 0.3 / (1 + 16 / 4) * math.sqrt(16 * math.log(84) / n)
    got = lambda_sda(model, n)
    assert math.isclose(got, expected, rel_tol=1e-15)
    assert abs(got - 0.041610) < 1e-5


def test_lambda_sda_degenerate_signal_collapse():
    p, s, n = 30, 4, 500
    expected = 0.3 * math.sqrt(math.log(p - s) / n)
    assert math.isclose(_lambda_sda_value(0.0, p, s, n), expected, rel_tol=1e-15)


def test_lambda_sda_inverse_sqrt_in_n():
    model = identity_gap_model(40, [1.0, 2.0])
    assert math.isclose(lambda_sda(model, 4 * 250), 0.5 * lambda_sda(model, 250), rel_tol=1e-14)


def test_lambda_sda_rejects_small_p():
    model = identity_gap_model(3, [1.0, -1.0])
    with pytest.raises(ValueError):
        lambda_sda(model, 100)


# ------------------------------------------------ beta_min and sample size


def test_beta_min_threshold_identity_arithmetic():
    model = identity_gap_model(20, [1.0, -1.0, 1.0])
    n = 900
    lam0 = lambda0(model, n)
    first = math.sqrt(1.0 * 3.0 * math.log(3 * math.log(n)) / n)
    assert math.isclose(beta_min_threshold(model, n), max(first, lam0), rel_tol=1e-14)
    assert math.isclose(
        beta_min_threshold(model, n, k_beta=2.0), 2.0 * max(first, lam0), rel_tol=1e-14
    )


def test_beta_min_threshold_matches_explicit_inverse():
    rng = np.random.default_rng(3)
    n = 700
    for _ in range(5):
        p = int(rng.integers(8, 14))
        s = int(rng.integers(2, 4))
        t = sorted(rng.permutation(p)[:s].tolist())
        block = random_spd(rng, s, jitter=1.0)
        beta_t = rng.choice([-1.0, 1.0], size=s) * rng.uniform(0.5, 2.0, size=s)
        diag = rng.uniform(0.5, 3.0, size=p)
        model = scattered_block_model(p, t, block, beta_t, diag=diag)

        bt = np.linalg.solve(model.sigma, model.mean_gap)[t]
        inv = np.linalg.inv(model.sigma[np.ix_(t, t)])
        beta_norm = bt @ model.sigma[np.ix_(t, t)] @ bt
        resid = max(diag[a] for a in range(p) if a not in t)
        lam0 = math.sqrt(
            0.25 * resid * max(1.0, beta_norm) * math.log((p - s) * math.log(n)) / n
        )
        first = math.sqrt(inv.diagonal().max() * max(1.0, beta_norm) * math.log(s * math.log(n)) / n)
        second = lam0 * np.abs(inv @ np.sign(bt)).max()
        assert math.isclose(beta_min_threshold(model, n), max(first, second), rel_tol=1e-10)


def test_sufficient_n_worked_example():
    # Identity covariance, equal priors, s = 5, p = 105:
    # the bound reduces to n >= 5 log(100 log n).
    model = identity_gap_model(105, [1.0] * 5)
    got = sufficient_n(model, k=4.0)
    scan = next(
        n for n in itertools.count(4) if n >= 5.0 * math.log(100.0 * math.log(n))
    )
    assert got == scan == 30
    assert 29 < 5.0 * math.log(100.0 * math.log(29))


def test_sufficient_n_minimality_random_models():
    rng = np.random.default_rng(19)
    for _ in range(6):
        p = int(rng.integers(6, 30))
        s = int(rng.integers(1, 5))
        t = sorted(rng.permutation(p)[:s].tolist())
        block = random_spd(rng, s, jitter=1.0)
        beta_t = rng.choice([-1.0, 1.0], size=s)
        diag = rng.uniform(0.5, 3.0, size=p)
        model = scattered_block_model(p, t, block, beta_t, diag=diag)
        k = float(rng.uniform(0.5, 8.0))
        n_star = sufficient_n(model, k)

        resid = max(diag[a] for a in range(p) if a not in t)
        lam_min = np.linalg.eigvalsh(block).min()
        coef = k * 0.25 * resid * s / lam_min

        def rhs(n):
            return coef * math.log((p - s) * math.log(n))

        assert n_star >= 4
        assert n_star >= rhs(n_star)
        if n_star > 4:
            assert (n_star - 1) < rhs(n_star - 1)


def test_sufficient_n_floor():
    model = identity_gap_model(10, [1.0])
    assert sufficient_n(model, k=1e-6) == 4


# ------------------------------------------------------------- phi and tau


def test_phi_closed_forms_identity_spec():
    spec = CovarianceSpec("identity", 50)
    assert phi_close(spec, 7) == 2.0
    assert phi_far(spec, 7) == 14.0


@pytest.mark.parametrize("gamma", [0.0, 0.1, 0.5])
def test_phi_closed_forms_equal_correlation_spec(gamma):
    spec = CovarianceSpec("equal_correlation", 40, rho=gamma)
    s = 6
    assert math.isclose(phi_close(spec, s), 2 * (1 - gamma), rel_tol=1e-15)
    assert math.isclose(phi_far(spec, s), 2 * s * (1 - gamma) + (2 * s) ** 2 * gamma, rel_tol=1e-15)


@pytest.mark.parametrize("gamma", [0.0, 0.1, 0.5])
@pytest.mark.parametrize("p,s", [(5, 1), (6, 2), (7, 3), (10, 3)])
def test_phi_enumeration_matches_closed_forms(p, s, gamma):
    sigma = eq_corr(p, gamma)
    assert abs(phi_close(sigma, s) - 2 * (1 - gamma)) < 1e-12
    assert abs(phi_far(sigma, s) - (2 * s * (1 - gamma) + (2 * s) ** 2 * gamma)) < 1e-12
    ident = np.eye(p)
    assert abs(phi_close(ident, s) - 2.0) < 1e-12
    assert abs(phi_far(ident, s) - 2.0 * s) < 1e-12


def test_phi_enumeration_against_independent_scan():
    rng = np.random.default_rng(23)
    p, s = 8, 2
    sigma = random_spd(rng, p)

    close_best = math.inf
    for t in itertools.combinations(range(p), s):
        for u in t:
            vals = [
                sigma[u, u] + sigma[v, v] - 2 * sigma[u, v]
                for v in range(p)
                if v not in t
            ]
            close_best = min(close_best, sum(vals) / len(vals))
    assert abs(phi_close(sigma, s) - close_best) < 1e-12

    far_best = math.inf
    for t in itertools.combinations(range(p), s):
        rest = [v for v in range(p) if v not in t]
        vals = []
        for t2 in itertools.combinations(rest, s):
            idx = list(t) + list(t2)
            ones = np.ones(2 * s)
            vals.append(ones @ sigma[np.ix_(idx, idx)] @ ones)
        far_best = min(far_best, sum(vals) / len(vals))
    assert abs(phi_far(sigma, s) - far_best) < 1e-12


def test_phi_cap_and_shape_errors():
    rng = np.random.default_rng(1)
    sigma = random_spd(rng, 9)
    with pytest.raises(ValueError, match="cap"):
        phi_close(sigma, 3, enumeration_cap=10)
    with pytest.raises(ValueError, match="cap"):
        phi_far(sigma, 3, enumeration_cap=10)
    with pytest.raises(ValueError):
        phi_far(np.eye(5), 3)  # no disjoint support
    with pytest.raises(ValueError):
        phi_close(np.eye(5), 5)
    with pytest.raises(ValueError):
        phi_close(np.eye(5), 0)


def test_tau_min_formula():
    spec = CovarianceSpec("identity", 20)
    s, n = 3, 500
    expected = TAU_MULTIPLIER * max(
        math.sqrt(math.log(math.comb(17, 3)) / (n * 6.0)),
        math.sqrt(math.log(18) / (n * 2.0)),
    )
    assert math.isclose(tau_min(spec, s, n), expected, rel_tol=1e-15)
    assert math.isclose(tau_min(spec, s, n, p=20), expected, rel_tol=1e-15)


def test_tau_min_monotone_in_n_and_phi():
    rng = np.random.default_rng(5)
    sigma = random_spd(rng, 8)
    values = [tau_min(sigma, 2, n) for n in (50, 100, 400, 1600)]
    assert all(a > b for a, b in zip(values, values[1:]))
    # Scaling Sigma up scales both phi quantities up, so tau shrinks.
    assert tau_min(1.5 * sigma, 2, 100) < tau_min(sigma, 2, 100)


def test_tau_min_rejects_bad_inputs():
    spec = CovarianceSpec("identity", 12)
    with pytest.raises(ValueError):
        tau_min(spec, 3, 100, p=13)
    with pytest.raises(ValueError):
        tau_min(spec, 3, 0)


# ----------------------------------------------------- population conditions


def test_population_conditions_worked_example():
    model = identity_gap_model(6, [1.0, 1.0])
    rep = population_conditions(model, 0.1)
    assert math.isclose(rep.beta_min_lhs, 0.2, abs_tol=1e-14)
    assert math.isclose(rep.beta_min_rhs, 0.1, abs_tol=1e-14)
    assert math.isclose(rep.beta_min_slack, 0.1, abs_tol=1e-14)
    assert rep.beta_min_ok and rep.irrepresentable_ok and rep.satisfied


def test_population_conditions_violated_at_large_lambda():
    model = identity_gap_model(6, [1.0, 1.0])
    rep = population_conditions(model, 0.5)
    assert math.isclose(rep.beta_min_lhs, 0.25 * 2.0 / 1.5, abs_tol=1e-14)
    assert math.isclose(rep.beta_min_rhs, 0.5, abs_tol=1e-14)
    assert not rep.beta_min_ok and not rep.satisfied


def test_population_conditions_zero_lambda_holds():
    model = identity_gap_model(9, [2.0, -0.3, 1.0])
    rep = population_conditions(model, 0.0)
    assert rep.beta_min_rhs == 0.0
    assert rep.beta_min_ok


def test_population_conditions_alpha_gate():
    # Dyadic factor model: support (0, 1), signs (+, -), Sigma_NT != 0,
    # irrepresentable value |0.5*1.75 - 0.75*1.5| = 0.25.
    model = dyadic_model()
    direct, _ = irrepresentable(DYADIC_SIGMA, [0, 1], [1.0, -1.0])
    assert abs(direct - 0.25) < 1e-15

    ok = population_conditions(model, 0.01, alpha=0.7)
    assert ok.irrepresentable_ok and abs(ok.irrepresentable_value - 0.25) < 1e-15
    tight = population_conditions(model, 0.01, alpha=0.8)
    assert not tight.irrepresentable_ok and not tight.satisfied
    assert abs(tight.irrepresentable_margin - 0.75) < 1e-15


def test_population_conditions_rejects_bad_arguments():
    model = identity_gap_model(5, [1.0])
    with pytest.raises(ValueError):
        population_conditions(model, -0.1)
    with pytest.raises(ValueError):
        population_conditions(model, 0.1, alpha=1.5)


def test_sign_recovery_implies_irrepresentable():
    # Whenever the population minimizer reproduces the signed support,
    # the irrepresentable value cannot exceed 1.
    rng = np.random.default_rng(31)
    matched = 0
    for _ in range(30):
        p, s = 6, 2
        sigma = random_spd(rng, p, jitter=1.0)
        t = sorted(rng.permutation(p)[:s].tolist())
        beta = np.zeros(p)
        beta[t] = rng.choice([-1.0, 1.0], size=s) * rng.uniform(0.8, 1.5, size=s)
        model = model_from_gap(sigma @ beta, sigma)
        lam = 0.02 * float(np.abs(beta[t]).min())
        report = lasso_quadratic(population_program(model, lam), tol=1e-12)
        w = report.solution
        on_support = np.array_equal(np.sign(w[t]), np.sign(beta[t]))
        off_support = all(w[j] == 0.0 for j in range(p) if j not in t)
        if on_support and off_support:
            matched += 1
            value, _ = irrepresentable(sigma, t, np.sign(beta[t]))
            assert value <= 1.0 + 1e-9
    assert matched >= 10


# ------------------------------------------------------------------ report


def test_theory_report_consistency_identity():
    model = identity_gap_model(20, [1.0, -1.0], support=[3, 11])
    rep = theory_report(model, 2000)
    assert rep.p == 20 and rep.s == 2 and rep.support == (3, 11)
    assert rep.n == 2000
    assert math.isclose(rep.lam, rep.lambda0 / 1.5, rel_tol=1e-15)
    assert math.isclose(rep.lambda0, lambda0(model, 2000), rel_tol=1e-15)
    assert math.isclose(rep.lambda_sda, lambda_sda(model, 2000), rel_tol=1e-15)
    assert rep.phi_close == 2.0 and rep.phi_far == 4.0
    assert math.isclose(rep.tau_min, tau_min(model.sigma, 2, 2000), rel_tol=1e-12)
    assert rep.irrepresentable_value == 0.0 and rep.irrepresentable_margin == 1.0
    assert rep.beta_min_threshold >= 0.0 and rep.lambda0 >= 0.0
    assert rep.beta_min_threshold_ok == (rep.beta_min >= rep.beta_min_threshold)
    assert rep.sufficient_n >= 4
    assert rep.n_ok == (2000 >= rep.sufficient_n)
    assert math.isclose(rep.r_n, rep.lam * 2.0, rel_tol=1e-15)
    assert rep.q_n == 2.0
    assert rep.notes == ()


def test_theory_report_tau_decomposition():
    model = identity_gap_model(30, [1.5, -0.5, 1.0])
    rep = theory_report(model, 800)
    term_far = math.sqrt(math.log(math.comb(27, 3)) / (800 * rep.phi_far))
    term_close = math.sqrt(math.log(28) / (800 * rep.phi_close))
    assert math.isclose(rep.tau_min, TAU_MULTIPLIER * max(term_far, term_close), rel_tol=1e-14)


def test_theory_report_uses_spec_closed_forms_at_scale():
    model = make_model(300, 10, CovarianceSpec("identity", 300), seed=0)
    rep = theory_report(model, 5000)
    assert rep.phi_close == 2.0 and rep.phi_far == 20.0
    assert rep.tau_min is not None and rep.notes == ()
    # The closed-form path also covers equal correlation far beyond the
    # enumeration cap.
    spec = CovarianceSpec("equal_correlation", 300, rho=0.5)
    assert math.isclose(phi_far(spec, 10), 10.0 + 400 * 0.5, rel_tol=1e-15)
    assert tau_min(spec, 10, 5000) > 0.0


def test_theory_report_cap_exhaustion_noted():
    rng = np.random.default_rng(2)
    t = [4, 9, 17]
    model = scattered_block_model(40, t, random_spd(rng, 3, jitter=1.0), [1.0, -1.0, 1.0])
    rep = theory_report(model, 500, enumeration_cap=100)
    assert rep.phi_close is None and rep.phi_far is None and rep.tau_min is None
    assert any("cap" in note for note in rep.notes)


def test_theory_report_small_p_omits_lambda_sda():
    model = identity_gap_model(3, [1.0, -1.0])
    rep = theory_report(model, 300)
    assert rep.lambda_sda is None
    assert any("p >= s + 2" in note for note in rep.notes)


def test_theory_report_json_round_trip():
    model = identity_gap_model(15, [1.0, 1.0, -1.0])
    rep = theory_report(model, 1200, alpha=0.05)
    blob = rep.to_json()
    parsed = json.loads(json.dumps(blob))
    for key in (
        "p",
        "s",
        "support",
        "n",
        "beta_min",
        "beta_norm_sigma_sq",
        "irrepresentable_value",
        "irrepresentable_margin",
        "lambda0",
        "lambda",
        "lambda_sda",
        "beta_min_threshold",
        "beta_min_threshold_ok",
        "beta_min_population_ok",
        "sufficient_n",
        "n_ok",
        "conditions",
        "r_n",
        "q_n",
        "phi_close",
        "phi_far",
        "tau_min",
        "constants",
        "notes",
    ):
        assert key in parsed
    assert parsed["constants"] == {
        "k_lambda0": 1.0,
        "k_beta": 1.0,
        "k_sample": 4.0,
        "tau_multiplier": 2.0,
    }
    assert parsed["conditions"]["alpha"] == 0.05
    assert parsed["support"] == [0, 1, 2]


def test_theory_report_constants_propagate():
    model = identity_gap_model(15, [1.0, 1.0])
    rep = theory_report(model, 600, k_lambda0=2.0, k_beta=3.0, k_sample=6.0)
    assert math.isclose(rep.lambda0, lambda0(model, 600, 2.0), rel_tol=1e-15)
    assert math.isclose(rep.beta_min_threshold, beta_min_threshold(model, 600, 3.0, 2.0), rel_tol=1e-15)
    assert rep.sufficient_n == sufficient_n(model, 6.0)
    assert rep.constants["k_lambda0"] == 2.0
