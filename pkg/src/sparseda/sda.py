"""The sparse discriminant estimator and its closed forms.

The estimator solves

    min_v  0.5 v'Qv - c'v + lam ||v||_1

with Q = S + c0 * m m' and c = c0 * m, where S is the pooled
within-class covariance, m the fitted mean difference, and
c0 = n1 n2 / (n (n - 2)).  This is the Gram form of the penalized
least-squares regression of the centered class labels on the centered
features.  The population analog replaces (S, m, c0) by
(Sigma, mu2 - mu1, pi1 pi2) and admits a closed-form solution on the
true support; the sample analog restricted to a known support admits
the same closed form with estimated quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import SingularMatrixError
from .model import Dataset, GaussianLdaModel, discriminant_direction
from .optim import QuadraticProgram, lasso_quadratic, require_converged, solve_spd


def scatter_coefficient(dataset: Dataset) -> float:
    """c0 = n1 n2 / (n (n - 2)), the weight tying the mean-gap outer
    product into the Gram matrix."""
    n = dataset.n
    return dataset.n1 * dataset.n2 / (n * (n - 2))


def encode_labels(dataset: Dataset) -> np.ndarray:
    """Centered regression targets: n2/n for class 1, -n1/n for class 2.

    The values sum to zero by construction (n1 * n2/n - n2 * n1/n).
    """
    n = dataset.n
    return np.where(dataset.y == 1, dataset.n2 / n, -dataset.n1 / n)


def gram_program(dataset: Dataset, lam: float) -> QuadraticProgram:
    """The penalized quadratic actually minimized by fit_sda."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    c0 = scatter_coefficient(dataset)
    m = dataset.mean_diff
    q = dataset.pooled_cov + c0 * np.outer(m, m)
    q = 0.5 * (q + q.T)  # symmetrize away last-ulp asymmetry of the outer product
    return QuadraticProgram(q=q, c=c0 * m, lam=float(lam))


def population_program(model: GaussianLdaModel, lam: float) -> QuadraticProgram:
    """Population analog of the Gram program: Q = Sigma + pi1 pi2 mu mu'."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    w = model.pi1 * model.pi2
    mu = model.mean_gap
    q = model.sigma + w * np.outer(mu, mu)
    q = 0.5 * (q + q.T)
    return QuadraticProgram(q=q, c=w * mu, lam=float(lam))


@dataclass(frozen=True)
class KktReport:
    """Optimality certificate for a candidate vector.

    `equality_residual` is the max-norm violation of the stationarity
    equations on the active set; `dual_margin` is lam minus the largest
    off-active gradient magnitude (positive margin certifies the active
    set is locally stable; strictly positive margin witnesses
    uniqueness of the minimizer's support).
    """

    active_set: tuple[int, ...]
    equality_residual: float
    dual_margin: float
    strict_dual_feasible: bool

    @property
    def max_violation(self) -> float:
        return max(self.equality_residual, max(0.0, -self.dual_margin))

    def passes(self, tol: float) -> bool:
        return self.max_violation <= tol


def _certify(qp: QuadraticProgram, v: np.ndarray) -> KktReport:
    g = qp.q @ v - qp.c
    active = v != 0.0
    act_idx = tuple(int(j) for j in np.flatnonzero(active))
    if act_idx:
        eq = float(np.abs(g[active] + qp.lam * np.sign(v[active])).max())
    else:
        eq = 0.0
    if active.all():
        margin = float("inf")
    else:
        margin = qp.lam - float(np.abs(g[~active]).max())
    return KktReport(
        active_set=act_idx,
        equality_residual=eq,
        dual_margin=margin,
        strict_dual_feasible=margin > 0.0,
    )


def kkt_certify(dataset: Dataset, v, lam: float) -> KktReport:
    """Certify v against the subgradient optimality conditions of the
    Gram program at penalty lam."""
    v = np.asarray(v, dtype=np.float64)
    return _certify(gram_program(dataset, lam), v)


@dataclass(frozen=True)
class SdaFit:
    """A converged estimate with its optimality certificate.

    `scale_factor` and `beta_hat` mirror the restricted closed form on
    the fitted active set (the multiplier gamma relating v_hat to
    S_TT^{-1} m_T, and that vector itself); they are None when the
    active set is empty or its pooled block is singular.
    """

    lam: float
    v_hat: np.ndarray
    active_set: tuple[int, ...]
    signs: tuple[int, ...]
    kkt_residual: float
    dual_margin: float
    strict_dual_feasible: bool
    iterations: int
    scale_factor: Optional[float] = None
    beta_hat: Optional[np.ndarray] = None

    def support(self, threshold: float = 0.0) -> tuple[int, ...]:
        """Active set, optionally dropping entries below a magnitude
        threshold (used only to absorb solver tolerance)."""
        if threshold > 0.0:
            keep = np.abs(self.v_hat) >= threshold
        else:
            keep = self.v_hat != 0.0
        return tuple(int(j) for j in np.flatnonzero(keep))

    def to_json(self) -> dict:
        """Schema: lambda, v_hat[], active_set[], kkt_residual, margin."""
        return {
            "lambda": self.lam,
            "v_hat": [float(v) for v in self.v_hat],
            "active_set": list(self.active_set),
            "kkt_residual": self.kkt_residual,
            "margin": self.dual_margin if np.isfinite(self.dual_margin) else None,
        }


def _restricted_scale(dataset: Dataset, t: list[int], lam: float):
    """gamma and S_TT^{-1} m_T on an index set, or (None, None) if the
    pooled block is singular."""
    if not t:
        return None, None
    try:
        mu_t = dataset.mean_diff[t]
        s_tt = dataset.pooled_cov[np.ix_(t, t)]
        bt = solve_spd(s_tt, mu_t)
    except SingularMatrixError:
        return None, None
    c0 = scatter_coefficient(dataset)
    gamma = c0 * (1.0 + lam * np.abs(bt).sum()) / (1.0 + c0 * float(mu_t @ bt))
    return float(gamma), bt


def _build_fit(dataset: Dataset, qp: QuadraticProgram, report) -> SdaFit:
    v = report.solution
    cert = _certify(qp, v)
    t = list(cert.active_set)
    gamma, bt = _restricted_scale(dataset, t, qp.lam)
    return SdaFit(
        lam=qp.lam,
        v_hat=v,
        active_set=cert.active_set,
        signs=tuple(int(np.sign(v[j])) for j in cert.active_set),
        kkt_residual=report.max_kkt_violation,
        dual_margin=cert.dual_margin,
        strict_dual_feasible=cert.strict_dual_feasible,
        iterations=report.iterations,
        scale_factor=gamma,
        beta_hat=bt,
    )


def fit_sda(
    dataset: Dataset,
    lam: float,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    start=None,
) -> SdaFit:
    """Fit the l1-penalized discriminant at penalty lam.

    Raises ConvergenceError (with the solver report attached) if the
    coordinate descent budget is exhausted before the KKT tolerance is
    met.
    """
    qp = gram_program(dataset, lam)
    rep = lasso_quadratic(qp, start=start, tol=tol, max_iter=max_iter)
    require_converged(rep, f"SDA fit at lam={lam:.6g}")
    return _build_fit(dataset, qp, rep)


def lambda_max(dataset: Dataset) -> float:
    """Smallest penalty with an all-zero solution: max |c0 m|."""
    return float(np.abs(scatter_coefficient(dataset) * dataset.mean_diff).max())


def lambda_path(dataset: Dataset, n_points: int = 50, ratio: float = 1e-3) -> np.ndarray:
    """Geometric penalty grid from lambda_max down to ratio*lambda_max."""
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    if not (0.0 < ratio <= 1.0):
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    top = lambda_max(dataset)
    if n_points == 1:
        return np.array([top])
    return top * ratio ** (np.arange(n_points) / (n_points - 1))


def fit_path(
    dataset: Dataset,
    lambdas=None,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> list[SdaFit]:
    """Fit a decreasing penalty path with warm starts."""
    if lambdas is None:
        lambdas = lambda_path(dataset)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if np.any(np.diff(lambdas) > 0):
        raise ValueError("penalty path must be non-increasing")
    fits = []
    v = None
    for lam in lambdas:
        fit = fit_sda(dataset, float(lam), tol=tol, max_iter=max_iter, start=v)
        fits.append(fit)
        v = fit.v_hat
    return fits


def oracle_fit(dataset: Dataset, support: Sequence[int], lam: float, signs="sample") -> np.ndarray:
    """Closed-form restricted solution on a known support.

    Solves the stationarity equations
    (S_TT + c0 m_T m_T') v = c0 m_T - lam * signs via two SPD solves and
    the rank-one update identity:

        v = gamma * S_TT^{-1} m_T - lam * S_TT^{-1} signs,
        gamma = c0 (1 + lam m_T' S_TT^{-1} signs) / (1 + c0 m_T' S_TT^{-1} m_T).

    `signs` is a +-1 vector, or 'sample' for the signs of S_TT^{-1} m_T.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    t = sorted(int(j) for j in support)
    p = dataset.p
    if not t or len(set(t)) != len(t) or t[0] < 0 or t[-1] >= p:
        raise ValueError(f"support must be a non-empty set of indices in [0, {p})")
    if len(t) >= dataset.n - 1:
        raise ValueError(
            f"support size {len(t)} leaves the pooled block singular (n={dataset.n})"
        )
    mu_t = dataset.mean_diff[t]
    s_tt = dataset.pooled_cov[np.ix_(t, t)]
    bt = solve_spd(s_tt, mu_t)
    if isinstance(signs, str):
        if signs != "sample":
            raise ValueError(f"signs must be a vector or 'sample', got {signs!r}")
        sg = np.sign(bt)
    else:
        sg = np.asarray(signs, dtype=np.float64)
        if sg.shape != (len(t),) or not np.isin(sg, (-1.0, 1.0)).all():
            raise ValueError("signs must be a +-1 vector matching the support size")
    u = solve_spd(s_tt, sg)
    c0 = scatter_coefficient(dataset)
    gamma = c0 * (1.0 + lam * float(mu_t @ u)) / (1.0 + c0 * float(mu_t @ bt))
    return gamma * bt - lam * u


@dataclass(frozen=True)
class PopulationSolution:
    """Closed-form population minimizer supported on the true support.

    w_hat = scale * beta - correction on the support, zero elsewhere;
    `scale` is pi1 pi2 (1 + lam ||beta_T||_1) / (1 + pi1 pi2 ||beta_T||^2_Sigma)
    and `correction` is lam * Sigma_TT^{-1} sign(beta_T).
    """

    w_hat: np.ndarray
    support: tuple[int, ...]
    scale: float
    correction: np.ndarray


def population_solution(model: GaussianLdaModel, lam: float) -> PopulationSolution:
    """Population closed form at penalty lam (exact minimizer whenever
    the irrepresentable and signal-size conditions hold)."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    d = discriminant_direction(model)
    t = list(d.support)
    bt = d.beta[t]
    sg = np.sign(bt)
    sig_tt = model.sigma[np.ix_(t, t)]
    correction = lam * solve_spd(sig_tt, sg)
    w = model.pi1 * model.pi2
    scale = w * (1.0 + lam * np.abs(bt).sum()) / (1.0 + w * d.beta_norm_sigma_sq)
    w_hat = np.zeros(model.p)
    w_hat[t] = scale * bt - correction
    return PopulationSolution(
        w_hat=w_hat, support=d.support, scale=float(scale), correction=correction
    )


def recode_equivalence(
    dataset: Dataset,
    z1_value: float,
    lam: float,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> tuple[SdaFit, float]:
    """Fit under an alternative zero-sum label coding.

    Any coding with class-1 value z1 != 0 (class 2 gets -n1 z1 / n2)
    rescales the linear term and penalty by t = z1 n / n2, so the
    minimizer is t times the canonical one: same active set,
    coefficients proportional.  Returns the fit under the recoded
    program together with the scaled penalty t * lam.
    """
    if z1_value == 0:
        raise ValueError("z1_value must be nonzero: the coding degenerates")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    t_scale = z1_value * dataset.n / dataset.n2
    scaled_lam = abs(t_scale) * lam
    base = gram_program(dataset, 0.0)
    coeff = dataset.n1 * z1_value / (dataset.n - 2)
    qp = QuadraticProgram(q=base.q, c=coeff * dataset.mean_diff, lam=scaled_lam)
    rep = lasso_quadratic(qp, tol=tol, max_iter=max_iter)
    require_converged(rep, f"recoded SDA fit at lam={scaled_lam:.6g}")
    fit = _build_fit(dataset, qp, rep)
    return fit, scaled_lam
