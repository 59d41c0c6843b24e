"""Exhaustive-search support decoder and its separation diagnostics.

The decoder scores every size-s subset T' by the Mahalanobis-type
statistic g(T') = mu_hat_T'' S_T'T'^{-1} mu_hat_T' and returns the
maximizer (equivalently the minimizer of f(T') = 1/g(T')).  The
diagnostics quantify how well a population model separates the true
support from each competitor via the overlap-indexed terms a1, a2, a3
and the combinatorial rate Gamma_{n,p,s,k}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import NumericError, SingularMatrixError
from .model import Dataset, GaussianLdaModel
from .optim import solve_spd

ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True)
class DecoderResult:
    """Outcome of the exhaustive scan.

    `runner_up_gap` is the score lead over the second-best subset
    (infinite when no second finite score exists); `singular` counts
    subsets whose scatter block failed to factor and were scored -inf.
    """

    t_hat: tuple[int, ...]
    score: float
    runner_up_gap: float
    scanned: int
    singular: int

    def to_json(self) -> dict:
        gap = self.runner_up_gap
        return {
            "t_hat": list(self.t_hat),
            "score": self.score,
            "runner_up_gap": None if math.isinf(gap) else gap,
            "scanned": self.scanned,
        }


def subset_score(dataset: Dataset, subset: Sequence[int]) -> float:
    """g(T') for one subset, by SPD solve of the scatter block."""
    idx = list(subset)
    m = dataset.mean_diff[idx]
    return float(m @ solve_spd(dataset.pooled_cov[np.ix_(idx, idx)], m))


def exhaustive_decode(
    dataset: Dataset, s: int, enumeration_cap: int = ENUMERATION_CAP
) -> DecoderResult:
    """Scan all size-s subsets in lexicographic order for the best score.

    Ties keep the lexicographically smallest subset.  Subsets with a
    singular scatter block are flagged and excluded from the argmax;
    when every subset is singular there is no decodable support and the
    scan fails.
    """
    p, n = dataset.p, dataset.n
    if not 1 <= s <= min(p, n - 2):
        raise ValueError(f"s must lie in [1, min(p, n-2)] = [1, {min(p, n - 2)}], got {s}")
    count = math.comb(p, s)
    if count > enumeration_cap:
        raise ValueError(
            f"exhaustive scan needs {count} subsets, above the cap {enumeration_cap}"
        )
    best = second = -math.inf
    best_t: Optional[tuple[int, ...]] = None
    singular = 0
    for t in itertools.combinations(range(p), s):
        try:
            val = subset_score(dataset, t)
        except SingularMatrixError:
            singular += 1
            continue
        if val > best:
            second = best
            best, best_t = val, t
        elif val > second:
            second = val
    if best_t is None:
        raise NumericError("every candidate subset had a singular scatter block")
    return DecoderResult(
        t_hat=best_t,
        score=best,
        runner_up_gap=best - second,
        scanned=count,
        singular=singular,
    )


# ------------------------------------------------------------ diagnostics


@dataclass(frozen=True)
class GapTerms:
    """Population separation terms for one competitor T'.

    a1 scores the shared coordinates, a2 the true coordinates missed by
    T' (conditionally on the shared ones), a3 the spurious coordinates
    of T'; gamma is the combinatorial rate at overlap k.
    """

    a1: float
    a2: float
    a3: float
    gamma: float
    k: int


def _validate_subset(name: str, subset, p: int) -> list[int]:
    idx = [int(j) for j in subset]
    if len(set(idx)) != len(idx) or any(j < 0 or j >= p for j in idx):
        raise ValueError(f"{name} must be distinct indices in [0, {p}), got {subset}")
    return sorted(idx)


def _conditional_quadratic(sigma, mu, target: list[int], given: list[int]) -> float:
    """m' C^{-1} m for the conditional mean m and covariance C of the
    target block given the conditioning block (unconditional when the
    conditioning set is empty; zero when the target is empty)."""
    if not target:
        return 0.0
    if given:
        s_gg = sigma[np.ix_(given, given)]
        cross = sigma[np.ix_(given, target)]
        solved = solve_spd(s_gg, np.column_stack([cross, mu[given]]))
        m = mu[target] - cross.T @ solved[:, -1]
        cov = sigma[np.ix_(target, target)] - cross.T @ solved[:, :-1]
        cov = 0.5 * (cov + cov.T)
    else:
        m = mu[target]
        cov = sigma[np.ix_(target, target)]
    return float(m @ solve_spd(cov, m))


def gamma_rate(n, p: int, s: int, k: int) -> float:
    """Gamma_{n,p,s,k} = log(C(p-s, s-k) C(s, k) s log n) / n."""
    n = float(n)
    if n < 3:
        raise ValueError(f"need n >= 3 so the rate is nonnegative, got {n}")
    if not 0 <= k <= s or s - k > p - s:
        raise ValueError(f"overlap k={k} impossible for p={p}, s={s}")
    return math.log(math.comb(p - s, s - k) * math.comb(s, k) * s * math.log(n)) / n


def gap_terms(model: GaussianLdaModel, t, t_prime, n) -> GapTerms:
    """Separation terms of the competitor t_prime against the support t."""
    p = model.p
    t = _validate_subset("t", t, p)
    t_prime = _validate_subset("t_prime", t_prime, p)
    if not t or len(t_prime) != len(t):
        raise ValueError(f"need non-empty equal-size subsets, got {len(t)} and {len(t_prime)}")
    a1_set = sorted(set(t) & set(t_prime))
    a2_set = sorted(set(t) - set(t_prime))
    a3_set = sorted(set(t_prime) - set(t))
    mu = model.mean_gap
    a1 = _conditional_quadratic(model.sigma, mu, a1_set, [])
    a2 = _conditional_quadratic(model.sigma, mu, a2_set, a1_set)
    a3 = _conditional_quadratic(model.sigma, mu, a3_set, a1_set)
    return GapTerms(
        a1=a1, a2=a2, a3=a3, gamma=gamma_rate(n, p, len(t), len(a1_set)), k=len(a1_set)
    )


@dataclass(frozen=True)
class SeparationReport:
    """Worst-case Theorem-style margin over all competitors.

    margin(T') = a2 - (1 + C1 sqrt(gamma)) a3
                 - C2 sqrt((1 v a1) a2 gamma) - C3 (1 v a1) gamma;
    a positive minimum means every competitor is separated.
    """

    margin: float
    worst_subset: tuple[int, ...]
    satisfied: bool
    scanned: int

    def to_json(self) -> dict:
        return {
            "margin": self.margin,
            "worst_subset": list(self.worst_subset),
            "satisfied": self.satisfied,
            "scanned": self.scanned,
        }


def separation_margin(terms: GapTerms, constants=(1.0, 1.0, 1.0)) -> float:
    c1, c2, c3 = (float(c) for c in constants)
    big = max(1.0, terms.a1)
    return (
        terms.a2
        - (1.0 + c1 * math.sqrt(terms.gamma)) * terms.a3
        - c2 * math.sqrt(big * terms.a2 * terms.gamma)
        - c3 * big * terms.gamma
    )


def separation_check(
    model: GaussianLdaModel,
    t,
    n,
    constants=(1.0, 1.0, 1.0),
    enumeration_cap: int = ENUMERATION_CAP,
) -> SeparationReport:
    """Minimum separation margin over every size-s competitor T' != T."""
    p = model.p
    t = _validate_subset("t", t, p)
    s = len(t)
    if s == 0:
        raise ValueError("support must be non-empty")
    count = math.comb(p, s)
    if count > enumeration_cap:
        raise ValueError(
            f"separation scan needs {count} subsets, above the cap {enumeration_cap}"
        )
    worst = math.inf
    worst_t: Optional[tuple[int, ...]] = None
    t_tuple = tuple(t)
    scanned = 0
    for cand in itertools.combinations(range(p), s):
        if cand == t_tuple:
            continue
        scanned += 1
        margin = separation_margin(gap_terms(model, t, cand, n), constants)
        if margin < worst:
            worst, worst_t = margin, cand
    if worst_t is None:
        raise ValueError("no competitor subsets exist; s = p leaves nothing to scan")
    return SeparationReport(
        margin=worst, worst_subset=worst_t, satisfied=bool(worst > 0.0), scanned=scanned
    )
