"""Two-class Gaussian model, covariance families, sampling, dataset I/O.

The population object is a pair of Gaussian classes N(mu1, Sigma),
N(mu2, Sigma) with priors (pi1, pi2).  Everything downstream is driven
by the mean gap mu = mu2 - mu1 and the discriminant direction
beta = Sigma^{-1} mu, whose support T is the target of recovery.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import cho_solve, toeplitz

from .exceptions import DataFormatError, NumericError
from .optim import _check_symmetric, chol_factor, solve_spd

COVARIANCE_KINDS = ("identity", "toeplitz", "equal_correlation", "block_embedded", "explicit")

#: Retry budget when a label draw leaves a class with fewer than 2 points.
LABEL_RESAMPLE_CAP = 100


@dataclass(frozen=True)
class CovarianceSpec:
    """Recipe for a covariance matrix.

    kind 'identity' needs only `dimension`; 'toeplitz' and
    'equal_correlation' use `rho` in [0, 1); 'block_embedded' places
    `block` in the top-left corner and an identity in the bottom-right;
    'explicit' wraps a given symmetric positive-definite `matrix`.
    """

    kind: str
    dimension: int
    rho: float = 0.0
    matrix: Optional[np.ndarray] = None
    block: Optional["CovarianceSpec"] = None

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.kind in ("toeplitz", "equal_correlation"):
            if not (0.0 <= self.rho < 1.0):
                raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit covariance needs a matrix")
            m = np.ascontiguousarray(self.matrix, dtype=np.float64)
            if m.shape != (self.dimension, self.dimension):
                raise ValueError(f"matrix has shape {m.shape}, expected square of {self.dimension}")
            _check_symmetric(m, "covariance")
            object.__setattr__(self, "matrix", m)
        if self.kind == "block_embedded":
            if self.block is None:
                raise ValueError("block_embedded covariance needs a block spec")
            if self.block.dimension > self.dimension:
                raise ValueError(
                    f"block dimension {self.block.dimension} exceeds total {self.dimension}"
                )


def make_covariance(spec: CovarianceSpec) -> np.ndarray:
    """Materialize the covariance matrix described by `spec`.

    Explicit matrices are checked positive definite here; the failing
    Cholesky pivot is named in the error.
    """
    d = spec.dimension
    if spec.kind == "identity":
        return np.eye(d)
    if spec.kind == "toeplitz":
        return toeplitz(spec.rho ** np.arange(d))
    if spec.kind == "equal_correlation":
        return (1.0 - spec.rho) * np.eye(d) + spec.rho * np.ones((d, d))
    if spec.kind == "block_embedded":
        out = np.eye(d)
        s = spec.block.dimension
        out[:s, :s] = make_covariance(spec.block)
        return out
    chol_factor(spec.matrix)
    return spec.matrix.copy()


@dataclass(frozen=True)
class GaussianLdaModel:
    """Two Gaussian classes sharing a covariance, with class priors.

    `covariance_spec` is optional structural metadata (used to pick
    closed forms for structured families); for permuted block
    embeddings it describes the structure up to a coordinate permutation.
    """

    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray
    pi1: float = 0.5
    pi2: float = 0.5
    covariance_spec: Optional[CovarianceSpec] = field(default=None, compare=False)

    def __post_init__(self):
        mu1 = np.ascontiguousarray(self.mu1, dtype=np.float64)
        mu2 = np.ascontiguousarray(self.mu2, dtype=np.float64)
        sigma = np.ascontiguousarray(self.sigma, dtype=np.float64)
        if mu1.ndim != 1 or mu1.shape != mu2.shape:
            raise ValueError(f"mean shapes disagree: {mu1.shape} vs {mu2.shape}")
        if sigma.shape != (mu1.shape[0], mu1.shape[0]):
            raise ValueError(f"sigma has shape {sigma.shape}, expected square of {mu1.shape[0]}")
        if not (0.0 < self.pi1 < 1.0 and 0.0 < self.pi2 < 1.0):
            raise ValueError(f"priors must lie in (0, 1), got ({self.pi1}, {self.pi2})")
        if abs(self.pi1 + self.pi2 - 1.0) > 1e-12:
            raise ValueError(f"priors must sum to 1, got {self.pi1 + self.pi2}")
        _check_symmetric(sigma, "sigma")
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", mu2)
        object.__setattr__(self, "sigma", sigma)
        self.chol  # fail fast on non-SPD sigma

    @property
    def p(self) -> int:
        return self.mu1.shape[0]

    @cached_property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of sigma, computed once per model."""
        return chol_factor(self.sigma)

    @cached_property
    def mean_gap(self) -> np.ndarray:
        """mu2 - mu1, the population analog of the fitted mean difference."""
        return self.mu2 - self.mu1


@dataclass(frozen=True)
class DiscriminantDirection:
    """beta = Sigma^{-1}(mu2 - mu1) and its support summary."""

    beta: np.ndarray
    support: tuple[int, ...]
    beta_min: float
    beta_norm_sigma_sq: float


def discriminant_direction(model: GaussianLdaModel) -> DiscriminantDirection:
    """Population discriminant direction and its support quantities.

    The support is the set of exactly nonzero entries of beta; for a
    block-structured sigma the off-support entries come out exactly
    zero because the triangular solves never mix the blocks.
    """
    beta = cho_solve((model.chol, True), model.mean_gap)
    support = tuple(int(j) for j in np.flatnonzero(beta))
    if not support:
        raise ValueError("mean gap is zero: discriminant direction undefined")
    bt = beta[list(support)]
    sig_tt = model.sigma[np.ix_(support, support)]
    return DiscriminantDirection(
        beta=beta,
        support=support,
        beta_min=float(np.abs(bt).min()),
        beta_norm_sigma_sq=float(bt @ (sig_tt @ bt)),
    )


def sigma_conditional(sigma, t: Sequence[int], a: int) -> float:
    """Conditional variance sigma_{a|T} = sigma_aa - Sigma_aT Sigma_TT^{-1} Sigma_Ta."""
    sigma = np.asarray(sigma, dtype=np.float64)
    p = sigma.shape[0]
    t = sorted(int(j) for j in t)
    if not t:
        raise ValueError("conditioning set T must be non-empty")
    if any(j < 0 or j >= p for j in t) or len(set(t)) != len(t):
        raise ValueError(f"T must be distinct indices in [0, {p}), got {t}")
    if not (0 <= a < p) or a in t:
        raise ValueError(f"a must lie outside T, got a={a}")
    sig_tt = sigma[np.ix_(t, t)]
    sig_ta = sigma[t, a]
    return float(sigma[a, a] - sig_ta @ solve_spd(sig_tt, sig_ta))


def make_model(
    p: int,
    support_size: int,
    covariance: CovarianceSpec,
    mu_scheme: Union[str, Sequence[float]] = "random_sign",
    priors: tuple[float, float] = (0.5, 0.5),
    seed=None,
    amplitude: float = 1.0,
) -> GaussianLdaModel:
    """Build a model with mu1 = 0 and a size-s mean gap.

    `covariance` of dimension p is used as Sigma directly; of dimension
    `support_size` it is embedded as the Sigma_TT block on the support,
    with an identity elsewhere and zero off-blocks.  `mu_scheme`
    'random_sign' draws the support as a Fisher-Yates prefix and signs
    from the same seeded stream, giving entries +-amplitude; an explicit
    vector is used as the mean gap itself.
    """
    if support_size < 1 or support_size > p:
        raise ValueError(f"support_size must lie in [1, {p}], got {support_size}")
    rng = np.random.default_rng(seed)
    if isinstance(mu_scheme, str):
        if mu_scheme != "random_sign":
            raise ValueError(f"unknown mu scheme {mu_scheme!r}")
        support = np.sort(rng.permutation(p)[:support_size])
        signs = rng.integers(0, 2, size=support_size) * 2 - 1
        mu = np.zeros(p)
        mu[support] = amplitude * signs
    else:
        mu = np.ascontiguousarray(mu_scheme, dtype=np.float64)
        if mu.shape != (p,):
            raise ValueError(f"explicit mean gap has shape {mu.shape}, expected ({p},)")
        support = np.flatnonzero(mu)
        if support.size != support_size:
            raise ValueError(
                f"explicit mean gap has {support.size} nonzeros, expected {support_size}"
            )

    if covariance.dimension == p:
        sigma = make_covariance(covariance)
        spec_meta = covariance
    elif covariance.dimension == support_size:
        sigma = np.eye(p)
        block = make_covariance(covariance)
        sigma[np.ix_(support, support)] = block
        if covariance.kind == "identity":
            spec_meta = CovarianceSpec(kind="identity", dimension=p)
        elif support_size == p:
            spec_meta = covariance
        else:
            spec_meta = CovarianceSpec(kind="block_embedded", dimension=p, block=covariance)
    else:
        raise ValueError(
            f"covariance dimension {covariance.dimension} matches neither p={p} "
            f"nor support_size={support_size}"
        )

    return GaussianLdaModel(
        mu1=np.zeros(p),
        mu2=mu,
        sigma=sigma,
        pi1=float(priors[0]),
        pi2=float(priors[1]),
        covariance_spec=spec_meta,
    )


@dataclass(frozen=True)
class Dataset:
    """Labeled sample with the class statistics used everywhere downstream.

    Statistics are fixed at construction: per-class means, mean
    difference (class 2 minus class 1), per-class covariances with
    denominator n_i - 1, and the pooled covariance with denominator
    n - 2, so (n1-1) cov1 + (n2-1) cov2 = (n-2) pooled_cov.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.asarray(self.y)
        if x.ndim != 2:
            raise ValueError(f"x must be a 2-d array, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"y has shape {y.shape}, expected ({x.shape[0]},)")
        if not np.isin(y, (1, 2)).all():
            raise ValueError("labels must take values in {1, 2}")
        y = y.astype(np.int64)
        n = x.shape[0]
        if n < 4:
            raise ValueError(f"need at least 4 observations, got {n}")
        mask2 = y == 2
        n2 = int(mask2.sum())
        n1 = n - n2
        if n1 < 2 or n2 < 2:
            raise ValueError(f"need at least 2 observations per class, got n1={n1}, n2={n2}")
        x1 = x[~mask2]
        x2 = x[mask2]
        mean1 = x1.mean(axis=0)
        mean2 = x2.mean(axis=0)
        x1c = x1 - mean1
        x2c = x2 - mean2
        g1 = x1c.T @ x1c
        g2 = x2c.T @ x2c
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)
        object.__setattr__(self, "mean1", mean1)
        object.__setattr__(self, "mean2", mean2)
        object.__setattr__(self, "mean_diff", mean2 - mean1)
        object.__setattr__(self, "grand_mean", x.mean(axis=0))
        object.__setattr__(self, "cov1", g1 / (n1 - 1))
        object.__setattr__(self, "cov2", g2 / (n2 - 1))
        object.__setattr__(self, "pooled_cov", (g1 + g2) / (n - 2))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def sample_dataset(model: GaussianLdaModel, n: int, seed=None) -> Dataset:
    """Draw n labeled observations from the model.

    Labels are unconditioned Bernoulli(pi2) draws; a draw leaving any
    class below 2 observations is resampled wholesale (the stream keeps
    advancing), up to LABEL_RESAMPLE_CAP attempts.  Feature noise is one
    (n, p) standard-normal block pushed through the model's Cholesky
    factor, so (seed, n) fully determines the dataset.
    """
    if n < 4:
        raise ValueError(f"need n >= 4 to have 2 observations per class, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(LABEL_RESAMPLE_CAP):
        mask2 = rng.random(n) < model.pi2
        n2 = int(mask2.sum())
        if 2 <= n2 <= n - 2:
            break
    else:
        raise NumericError(
            f"could not draw >= 2 observations per class in {LABEL_RESAMPLE_CAP} attempts "
            f"(n={n}, priors=({model.pi1}, {model.pi2}))"
        )
    z = rng.standard_normal((n, model.p))
    x = np.where(mask2[:, None], model.mu2, model.mu1) + z @ model.chol.T
    y = np.where(mask2, 2, 1)
    return Dataset(x=x, y=y)


def dataset_to_csv(dataset: Dataset, path) -> None:
    """Write the dataset as RFC-4180 CSV: header y,x1..xp, then rows.

    Floats use shortest round-trip decimals, so a read-back reproduces
    the array bit for bit.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{j + 1}" for j in range(dataset.p)])
        for yi, row in zip(dataset.y, dataset.x):
            writer.writerow([int(yi)] + [repr(float(v)) for v in row])


def dataset_from_csv(path) -> Dataset:
    """Read a dataset written by `dataset_to_csv`.

    Malformed content raises DataFormatError with 1-based line/column
    positions.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", line=1) from None
        if not header or header[0] != "y":
            raise DataFormatError("header must start with 'y'", line=1, column=1)
        p = len(header) - 1
        if p < 1:
            raise DataFormatError("no feature columns in header", line=1, column=2)
        ys: list[int] = []
        rows: list[list[float]] = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != p + 1:
                raise DataFormatError(
                    f"expected {p + 1} fields, found {len(rec)}", line=lineno, column=len(rec)
                )
            if rec[0] not in ("1", "2"):
                raise DataFormatError(f"label must be 1 or 2, got {rec[0]!r}", line=lineno, column=1)
            ys.append(int(rec[0]))
            row = []
            for col, cell in enumerate(rec[1:], start=2):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"invalid float {cell!r}", line=lineno, column=col
                    ) from None
            rows.append(row)
    if not rows:
        raise DataFormatError("no data rows", line=2)
    return Dataset(x=np.array(rows), y=np.array(ys))
