"""Classification rule, Bayes risk, and conditional error rate.

The classifier thresholds the linear score v'(x - (m1 + m2)/2), with an
optional additive prior offset log(pi2 / pi1) for unequal priors.  Risk
formulas are exact Gaussian tail probabilities; the conditional error
rate of a fitted rule averages the two class-conditional mistakes under
the true model, weighted by the priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GaussianLdaModel
from .optim import solve_spd


def normal_cdf(t: float) -> float:
    """Standard normal CDF via the complementary error function."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    return 0.5 * math.erfc(-t / math.sqrt(2.0))


@dataclass(frozen=True)
class Classifier:
    """Linear rule: label 2 iff v'(x - (mean1 + mean2)/2) + offset > 0.

    A zero offset gives the midpoint rule; log(pi2 / pi1) gives the
    prior-adjusted rule.  Ties go to class 1 (strict inequality).
    """

    direction: np.ndarray
    mean1: np.ndarray
    mean2: np.ndarray
    prior_offset: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(self.direction, dtype=np.float64)
        m1 = np.ascontiguousarray(self.mean1, dtype=np.float64)
        m2 = np.ascontiguousarray(self.mean2, dtype=np.float64)
        if v.ndim != 1 or m1.shape != v.shape or m2.shape != v.shape:
            raise ValueError(
                f"direction and means must share one dimension, got {v.shape}, "
                f"{m1.shape}, {m2.shape}"
            )
        if not np.any(v):
            raise ValueError("direction must be nonzero")
        if not math.isfinite(self.prior_offset):
            raise ValueError(f"prior offset must be finite, got {self.prior_offset}")
        object.__setattr__(self, "direction", v)
        object.__setattr__(self, "mean1", m1)
        object.__setattr__(self, "mean2", m2)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.mean1 + self.mean2)


def bayes_classifier(model: GaussianLdaModel, include_priors: bool = False) -> Classifier:
    """Optimal rule: direction Sigma^{-1}(mu2 - mu1) and true means."""
    direction = solve_spd(model.sigma, model.mean_gap)
    offset = math.log(model.pi2 / model.pi1) if include_priors else 0.0
    return Classifier(direction, model.mu1, model.mu2, prior_offset=offset)


def classify(classifier: Classifier, x):
    """Label in {1, 2} for one point, or an array of labels for rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != classifier.direction.shape[0]:
        raise ValueError(
            f"points have dimension {pts.shape[1]}, classifier has "
            f"{classifier.direction.shape[0]}"
        )
    score = (pts - classifier.midpoint) @ classifier.direction + classifier.prior_offset
    labels = np.where(score > 0.0, 2, 1)
    return int(labels[0]) if single else labels


def bayes_risk(model: GaussianLdaModel) -> float:
    """Error rate of the optimal rule under equal priors:
    Phi(-sqrt(mu' Sigma^{-1} mu) / 2)."""
    if not math.isclose(model.pi1, 0.5) or not math.isclose(model.pi2, 0.5):
        raise ValueError(
            f"the closed form needs equal priors, got ({model.pi1}, {model.pi2})"
        )
    quad = float(model.mean_gap @ solve_spd(model.sigma, model.mean_gap))
    return normal_cdf(-0.5 * math.sqrt(max(quad, 0.0)))


def conditional_error_rate(model: GaussianLdaModel, v, mean1_hat, mean2_hat) -> float:
    """Exact error rate of the midpoint rule built from (v, fitted means)
    when data follow the model, weighted by the class priors:

    pi1 P[v'X > v'm | X ~ N(mu1, Sigma)] + pi2 P[v'X <= v'm | X ~ N(mu2, Sigma)]

    with m the fitted midpoint.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    m1 = np.asarray(mean1_hat, dtype=np.float64)
    m2 = np.asarray(mean2_hat, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != model.p or m1.shape != v.shape or m2.shape != v.shape:
        raise ValueError("direction and fitted means must match the model dimension")
    scale_sq = float(v @ (model.sigma @ v))
    if scale_sq <= 0.0:
        raise ValueError("direction has nonpositive variance v' Sigma v")
    scale = math.sqrt(scale_sq)
    gap_hat = float(v @ (m2 - m1))
    err1 = normal_cdf((float(v @ (model.mu1 - m1)) - 0.5 * gap_hat) / scale)
    err2 = normal_cdf((-float(v @ (model.mu2 - m2)) - 0.5 * gap_hat) / scale)
    return model.pi1 * err1 + model.pi2 * err2
