"""Support-recovery theory: penalty calibration, signal and sample-size
thresholds, and information-theoretic limits.

Conventions shared by every routine here: T is the support of
beta = Sigma^{-1}(mu2 - mu1), s = |T|, N its complement,
sigma_{a|T} the conditional variance of coordinate a given the
support coordinates, and ||beta_T||^2 the Sigma_TT-weighted norm
beta_T' Sigma_TT beta_T.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .model import CovarianceSpec, GaussianLdaModel, discriminant_direction, make_covariance
from .optim import _as_matrix, _check_symmetric, chol_factor, solve_spd

#: Default abstract constants; every report records the values used.
K_LAMBDA0 = 1.0
K_BETA = 1.0
K_SAMPLE = 4.0
TAU_MULTIPLIER = 2.0

ENUMERATION_CAP = 10_000_000


def conditional_variances(sigma, support: Sequence[int]) -> np.ndarray:
    """sigma_{a|T} for every a outside T, ordered by increasing a.

    One SPD solve with Sigma_TN as the right-hand side covers the whole
    complement at once.
    """
    sigma = _as_matrix(sigma)
    _check_symmetric(sigma)
    p = sigma.shape[0]
    t = sorted(int(j) for j in support)
    if not t or len(set(t)) != len(t) or t[0] < 0 or t[-1] >= p:
        raise ValueError(f"support must be a non-empty set of indices in [0, {p})")
    n_idx = [j for j in range(p) if j not in set(t)]
    if not n_idx:
        return np.empty(0)
    cross = sigma[np.ix_(t, n_idx)]
    return np.diag(sigma)[n_idx] - (cross * solve_spd(sigma[np.ix_(t, t)], cross)).sum(axis=0)


def irrepresentable(sigma, support: Sequence[int], signs) -> tuple[float, float]:
    """Value and margin of the irrepresentable condition.

    Returns (||Sigma_NT Sigma_TT^{-1} signs||_inf, 1 - value); a margin
    of at least alpha > 0 is the support-stability requirement, and
    value <= 1 is necessary for sign recovery.  An empty complement has
    nothing to violate, so the value is 0.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    p = sigma.shape[0]
    t = sorted(int(j) for j in support)
    if not t or len(set(t)) != len(t) or t[0] < 0 or t[-1] >= p:
        raise ValueError(f"support must be a non-empty set of indices in [0, {p})")
    sg = np.asarray(signs, dtype=np.float64)
    if sg.shape != (len(t),) or not np.isin(sg, (-1.0, 1.0)).all():
        raise ValueError("signs must be a +-1 vector matching the support size")
    n_idx = [j for j in range(p) if j not in set(t)]
    if not n_idx:
        return 0.0, 1.0
    x = solve_spd(sigma[np.ix_(t, t)], sg)
    value = float(np.abs(sigma[np.ix_(n_idx, t)] @ x).max())
    return value, 1.0 - value


@dataclass(frozen=True)
class _SupportStats:
    """Per-model quantities shared by the threshold formulas."""

    p: int
    s: int
    support: tuple[int, ...]
    beta_t: np.ndarray
    signs: np.ndarray
    beta_min: float
    beta_norm_sq: float
    sig_tt: np.ndarray
    inv_diag_max: float
    inv_sign_inf: float
    lambda_min: float
    sigma_factor: float
    degenerate_complement: bool


def _support_stats(model: GaussianLdaModel) -> _SupportStats:
    d = discriminant_direction(model)
    t = list(d.support)
    bt = d.beta[t]
    sg = np.sign(bt)
    sig_tt = model.sigma[np.ix_(t, t)]
    low = chol_factor(sig_tt)
    # Diagonal of Sigma_TT^{-1} via the triangular factor (no explicit inverse).
    linv = solve_triangular(low, np.eye(len(t)), lower=True)
    inv_diag = (linv**2).sum(axis=0)
    inv_sign = solve_spd(sig_tt, sg)
    if len(t) < model.p:
        sigma_factor = float(conditional_variances(model.sigma, t).max())
        degenerate = False
    else:
        sigma_factor = 1.0
        degenerate = True
    return _SupportStats(
        p=model.p,
        s=len(t),
        support=d.support,
        beta_t=bt,
        signs=sg,
        beta_min=d.beta_min,
        beta_norm_sq=d.beta_norm_sigma_sq,
        sig_tt=sig_tt,
        inv_diag_max=float(inv_diag.max()),
        inv_sign_inf=float(np.abs(inv_sign).max()),
        lambda_min=float(np.linalg.eigvalsh(sig_tt)[0]),
        sigma_factor=sigma_factor,
        degenerate_complement=degenerate,
    )


def _check_n(n) -> float:
    n = float(n)
    if n < 3:
        raise ValueError(f"need n >= 3 for the log log n factor, got {n}")
    return n


def _lambda0(stats: _SupportStats, model: GaussianLdaModel, n, k_lambda0: float) -> float:
    n = _check_n(n)
    tail = max(stats.p - stats.s, 1)
    return k_lambda0 * math.sqrt(
        model.pi1
        * model.pi2
        * stats.sigma_factor
        * max(1.0, stats.beta_norm_sq)
        * math.log(tail * math.log(n))
        / n
    )


def lambda0(model: GaussianLdaModel, n, k_lambda0: float = K_LAMBDA0) -> float:
    """Base penalty level: the noise scale of the off-support gradient.

    lambda0 = K sqrt(pi1 pi2 (max_{a in N} sigma_{a|T})
                     (1 v ||beta_T||^2) log((p-s) log n) / n).
    When the complement is empty the conditional-variance factor is
    taken as 1 and the tail count inside the log as 1 (warned).
    """
    stats = _support_stats(model)
    if stats.degenerate_complement:
        warnings.warn("support covers all coordinates: lambda0 uses unit noise factors")
    return _lambda0(stats, model, n, k_lambda0)


def lambda_of(model: GaussianLdaModel, n, k_lambda0: float = K_LAMBDA0) -> float:
    """Theorem-calibrated penalty lambda0 / (1 + pi1 pi2 ||beta_T||^2)."""
    stats = _support_stats(model)
    denom = 1.0 + model.pi1 * model.pi2 * stats.beta_norm_sq
    return _lambda0(stats, model, n, k_lambda0) / denom


def _lambda_sda_value(beta_norm_sq: float, p: int, s: int, n) -> float:
    if p <= s + 1:
        raise ValueError(f"need p >= s + 2 so log(p - s) is positive, got p={p}, s={s}")
    return (
        0.3
        / (1.0 + beta_norm_sq / 4.0)
        * math.sqrt(max(1.0, beta_norm_sq) * math.log(p - s) / float(n))
    )


def lambda_sda(model: GaussianLdaModel, n) -> float:
    """The 0.3-calibrated simulation penalty:

    0.3 (1 + ||beta_T||^2 / 4)^{-1} sqrt((1 v ||beta_T||^2) log(p-s) / n).
    """
    stats = _support_stats(model)
    return _lambda_sda_value(stats.beta_norm_sq, stats.p, stats.s, n)


def beta_min_threshold(
    model: GaussianLdaModel,
    n,
    k_beta: float = K_BETA,
    k_lambda0: float = K_LAMBDA0,
) -> float:
    """Smallest signal magnitude the recovery guarantee asks for:

    K_beta max( sqrt((max_a (Sigma_TT^{-1})_aa)(1 v ||beta_T||^2)
                     log(s log n) / n),
                lambda0 ||Sigma_TT^{-1} sgn(beta_T)||_inf ).
    """
    stats = _support_stats(model)
    n = _check_n(n)
    lam0 = _lambda0(stats, model, n, k_lambda0)
    first = math.sqrt(
        stats.inv_diag_max * max(1.0, stats.beta_norm_sq) * math.log(stats.s * math.log(n)) / n
    )
    return k_beta * max(first, lam0 * stats.inv_sign_inf)


def _sample_size_rhs(stats: _SupportStats, model: GaussianLdaModel, k: float):
    tail = max(stats.p - stats.s, 1)
    coef = k * model.pi1 * model.pi2 * stats.sigma_factor * stats.s / stats.lambda_min

    def rhs(n: float) -> float:
        return coef * math.log(tail * math.log(n))

    return rhs


def sufficient_n(model: GaussianLdaModel, k: float = K_SAMPLE) -> int:
    """Smallest integer n >= 4 with n >= K pi1 pi2 (max sigma_{a|T})
    Lambda_min^{-1}(Sigma_TT) s log((p-s) log n).

    The right side grows like log log n, so iterating n <- ceil(rhs(n))
    from max(8, s) climbs to the smallest fixed point; a downward walk
    then enforces minimality when the start already satisfied the bound.
    """
    stats = _support_stats(model)
    rhs = _sample_size_rhs(stats, model, k)
    n = max(8, stats.s)
    for _ in range(1000):
        nxt = math.ceil(rhs(n))
        if nxt <= n:
            break
        n = nxt
    else:
        raise RuntimeError("sample-size fixed point did not settle in 1000 steps")
    while n > 4 and (n - 1) >= rhs(n - 1):
        n -= 1
    return int(n)


# ------------------------------------------------------------------ limits


def _phi_inputs(sigma, s: int):
    if isinstance(sigma, CovarianceSpec):
        spec = sigma
        p = spec.dimension
    else:
        spec = None
        sigma = _as_matrix(sigma)
        _check_symmetric(sigma)
        p = sigma.shape[0]
    if not 1 <= s < p:
        raise ValueError(f"need 1 <= s < p, got s={s}, p={p}")
    return spec, sigma, p


def phi_close(sigma, s: int, enumeration_cap: int = ENUMERATION_CAP) -> float:
    """Worst single-swap separation:

    min_T min_{u in T} (p-s)^{-1} sum_{v not in T} (sigma_uu + sigma_vv
    - 2 sigma_uv).

    Identity and equal-correlation families use their closed forms
    (2 and 2(1-rho)); anything else is enumerated exactly, subject to
    the work cap.
    """
    spec, sigma, p = _phi_inputs(sigma, s)
    if spec is not None:
        if spec.kind == "identity":
            return 2.0
        if spec.kind == "equal_correlation":
            return 2.0 * (1.0 - spec.rho)
        sigma = make_covariance(spec)
    work = math.comb(p, s) * s * (p - s)
    if work > enumeration_cap:
        raise ValueError(
            f"phi_close enumeration needs {work} evaluations, above the cap {enumeration_cap}"
        )
    diag = np.diag(sigma)
    best = math.inf
    universe = set(range(p))
    for t in itertools.combinations(range(p), s):
        outside = sorted(universe.difference(t))
        for u in t:
            val = float(np.mean(diag[u] + diag[outside] - 2.0 * sigma[u, outside]))
            if val < best:
                best = val
    return best


def phi_far(sigma, s: int, enumeration_cap: int = ENUMERATION_CAP) -> float:
    """Worst disjoint-support separation:

    min_T C(p-s, s)^{-1} sum_{T' disjoint, |T'| = s} 1' Sigma_{T u T'} 1.

    Closed forms: 2s for the identity family and
    2s(1-rho) + (2s)^2 rho for equal correlation.
    """
    spec, sigma, p = _phi_inputs(sigma, s)
    if p < 2 * s:
        raise ValueError(f"phi_far needs p >= 2s so a disjoint support exists, got p={p}, s={s}")
    if spec is not None:
        if spec.kind == "identity":
            return 2.0 * s
        if spec.kind == "equal_correlation":
            return 2.0 * s * (1.0 - spec.rho) + (2.0 * s) ** 2 * spec.rho
        sigma = make_covariance(spec)
    work = math.comb(p, s) * math.comb(p - s, s) * (2 * s) ** 2
    if work > enumeration_cap:
        raise ValueError(
            f"phi_far enumeration needs {work} evaluations, above the cap {enumeration_cap}"
        )
    best = math.inf
    universe = set(range(p))
    for t in itertools.combinations(range(p), s):
        outside = sorted(universe.difference(t))
        total = 0.0
        count = 0
        for t2 in itertools.combinations(outside, s):
            idx = list(t) + list(t2)
            total += float(sigma[np.ix_(idx, idx)].sum())
            count += 1
        avg = total / count
        if avg < best:
            best = avg
    return best


def tau_min(sigma, s: int, n, p: Optional[int] = None, enumeration_cap: int = ENUMERATION_CAP) -> float:
    """Signal level below which no estimator can reliably recover the
    support:

    2 max( sqrt(log C(p-s, s) / (n phi_far)),
           sqrt(log(p-s+1) / (n phi_close)) ).
    """
    spec, mat, p_eff = _phi_inputs(sigma, s)
    if p is not None and p != p_eff:
        raise ValueError(f"p={p} disagrees with the covariance dimension {p_eff}")
    p = p_eff
    n = float(n)
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    far = phi_far(sigma, s, enumeration_cap)
    close = phi_close(sigma, s, enumeration_cap)
    term_far = math.sqrt(math.log(math.comb(p - s, s)) / (n * far))
    term_close = math.sqrt(math.log(p - s + 1) / (n * close))
    return TAU_MULTIPLIER * max(term_far, term_close)


# ------------------------------------------------------------- conditions


@dataclass(frozen=True)
class PopulationConditions:
    """Population support-stability check at a given penalty.

    The closed-form population solution has the true signed support
    exactly when the irrepresentable value stays at most 1 - alpha and
    the signal-size inequality (lhs > rhs) holds.
    """

    alpha: float
    irrepresentable_value: float
    irrepresentable_margin: float
    irrepresentable_ok: bool
    beta_min_lhs: float
    beta_min_rhs: float
    beta_min_slack: float
    beta_min_ok: bool

    @property
    def satisfied(self) -> bool:
        return self.irrepresentable_ok and self.beta_min_ok


def population_conditions(
    model: GaussianLdaModel, lam: float, alpha: float = 0.0
) -> PopulationConditions:
    """Evaluate both population recovery conditions at penalty lam."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    stats = _support_stats(model)
    value, margin = irrepresentable(model.sigma, stats.support, stats.signs)
    w = model.pi1 * model.pi2
    lhs = w * (1.0 + lam * float(np.abs(stats.beta_t).sum())) / (1.0 + w * stats.beta_norm_sq)
    lhs *= stats.beta_min
    rhs = lam * stats.inv_sign_inf
    return PopulationConditions(
        alpha=float(alpha),
        irrepresentable_value=value,
        irrepresentable_margin=margin,
        irrepresentable_ok=bool(value <= 1.0 - alpha),
        beta_min_lhs=float(lhs),
        beta_min_rhs=float(rhs),
        beta_min_slack=float(lhs - rhs),
        beta_min_ok=bool(lhs > rhs),
    )


# ----------------------------------------------------------------- report


@dataclass(frozen=True)
class TheoryReport:
    """Everything the theory predicts about a model at sample size n.

    phi/tau entries are None when the covariance has no closed form and
    enumeration would exceed the cap; `notes` says so.
    """

    p: int
    s: int
    support: tuple[int, ...]
    n: int
    beta_min: float
    beta_norm_sigma_sq: float
    irrepresentable_value: float
    irrepresentable_margin: float
    lambda0: float
    lam: float
    lambda_sda: Optional[float]
    beta_min_threshold: float
    beta_min_threshold_ok: bool
    sufficient_n: int
    n_ok: bool
    conditions: PopulationConditions
    r_n: float
    q_n: float
    phi_close: Optional[float]
    phi_far: Optional[float]
    tau_min: Optional[float]
    constants: dict
    notes: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "s": self.s,
            "support": list(self.support),
            "n": self.n,
            "beta_min": self.beta_min,
            "beta_norm_sigma_sq": self.beta_norm_sigma_sq,
            "irrepresentable_value": self.irrepresentable_value,
            "irrepresentable_margin": self.irrepresentable_margin,
            "lambda0": self.lambda0,
            "lambda": self.lam,
            "lambda_sda": self.lambda_sda,
            "beta_min_threshold": self.beta_min_threshold,
            "beta_min_threshold_ok": self.beta_min_threshold_ok,
            "beta_min_population_ok": self.conditions.beta_min_ok,
            "sufficient_n": self.sufficient_n,
            "n_ok": self.n_ok,
            "conditions": {
                "alpha": self.conditions.alpha,
                "irrepresentable_ok": self.conditions.irrepresentable_ok,
                "beta_min_lhs": self.conditions.beta_min_lhs,
                "beta_min_rhs": self.conditions.beta_min_rhs,
                "beta_min_slack": self.conditions.beta_min_slack,
                "beta_min_ok": self.conditions.beta_min_ok,
                "satisfied": self.conditions.satisfied,
            },
            "r_n": self.r_n,
            "q_n": self.q_n,
            "phi_close": self.phi_close,
            "phi_far": self.phi_far,
            "tau_min": self.tau_min,
            "constants": dict(self.constants),
            "notes": list(self.notes),
        }


def theory_report(
    model: GaussianLdaModel,
    n: int,
    *,
    k_lambda0: float = K_LAMBDA0,
    k_beta: float = K_BETA,
    k_sample: float = K_SAMPLE,
    alpha: float = 0.0,
    enumeration_cap: int = ENUMERATION_CAP,
) -> TheoryReport:
    """Assemble the full theoretical picture for (model, n)."""
    stats = _support_stats(model)
    notes: list[str] = []
    if stats.degenerate_complement:
        notes.append("support covers all coordinates; noise factors degenerate to 1")
    lam0 = _lambda0(stats, model, n, k_lambda0)
    lam = lam0 / (1.0 + model.pi1 * model.pi2 * stats.beta_norm_sq)
    try:
        lam_sda = _lambda_sda_value(stats.beta_norm_sq, stats.p, stats.s, n)
    except ValueError as exc:
        lam_sda = None
        notes.append(str(exc))
    threshold = beta_min_threshold(model, n, k_beta, k_lambda0)
    needed = sufficient_n(model, k_sample)
    conditions = population_conditions(model, lam, alpha)

    sigma_arg = model.covariance_spec if model.covariance_spec is not None else model.sigma
    phi_c = phi_f = tau = None
    try:
        phi_c = phi_close(sigma_arg, stats.s, enumeration_cap)
        phi_f = phi_far(sigma_arg, stats.s, enumeration_cap)
        tau = tau_min(sigma_arg, stats.s, n, enumeration_cap=enumeration_cap)
    except ValueError as exc:
        notes.append(f"limits unavailable: {exc}")

    return TheoryReport(
        p=stats.p,
        s=stats.s,
        support=stats.support,
        n=int(n),
        beta_min=stats.beta_min,
        beta_norm_sigma_sq=stats.beta_norm_sq,
        irrepresentable_value=conditions.irrepresentable_value,
        irrepresentable_margin=conditions.irrepresentable_margin,
        lambda0=lam0,
        lam=lam,
        lambda_sda=lam_sda,
        beta_min_threshold=threshold,
        beta_min_threshold_ok=stats.beta_min >= threshold,
        sufficient_n=needed,
        n_ok=int(n) >= needed,
        conditions=conditions,
        r_n=float(lam * np.abs(stats.beta_t).sum()),
        q_n=float(stats.signs @ (stats.sig_tt @ stats.signs)),
        phi_close=phi_c,
        phi_far=phi_f,
        tau_min=tau,
        constants={
            "k_lambda0": k_lambda0,
            "k_beta": k_beta,
            "k_sample": k_sample,
            "tau_multiplier": TAU_MULTIPLIER,
        },
        notes=tuple(notes),
    )
