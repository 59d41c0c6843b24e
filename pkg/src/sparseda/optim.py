"""Quadratic-program building blocks: SPD solves and the l1 solver.

The estimator and every closed form in this package reduce to two
primitives: solving symmetric positive-definite systems, and minimizing

    f(v) = 0.5 v'Qv - c'v + lam * ||v||_1

by cyclic coordinate descent with exact soft-threshold updates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from . import backend
from .exceptions import ConvergenceError, SingularMatrixError

#: Relative symmetry tolerance for quadratic forms and covariance inputs.
SYMMETRY_RTOL = 1e-12

#: A Cholesky pivot below this fraction of the largest diagonal entry is
#: treated as a singular system.
PIVOT_RTOL = 1e-12


def _as_matrix(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_symmetric(a: np.ndarray, name: str = "matrix") -> None:
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    skew = float(np.abs(a - a.T).max()) if a.size else 0.0
    if skew > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {skew:.3e})")


def chol_factor(a) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises SingularMatrixError (carrying the pivot index) when a pivot
    fails or falls below PIVOT_RTOL times the largest diagonal entry.
    """
    a = _as_matrix(a)
    _check_symmetric(a)
    if a.shape[0] == 0:
        return a.copy()
    low, info = dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SingularMatrixError(
            f"matrix is not positive definite: pivot {info - 1} failed", index=info - 1
        )
    if info < 0:
        raise ValueError(f"invalid argument {-info} to dpotrf")
    pivots = np.diagonal(low) ** 2
    floor = PIVOT_RTOL * float(np.diagonal(a).max())
    small = np.flatnonzero(pivots < floor)
    if small.size:
        j = int(small[0])
        raise SingularMatrixError(
            f"matrix is numerically singular: pivot {j} is {pivots[j]:.3e}", index=j
        )
    return low


def solve_spd(a, b) -> np.ndarray:
    """Solve a x = b for symmetric positive-definite a via Cholesky.

    Never forms an inverse; b may be a vector or a matrix of columns.
    """
    low = chol_factor(a)
    b = np.asarray(b, dtype=np.float64)
    expected = (low.shape[0],) if b.ndim == 1 else (low.shape[0], b.shape[1])
    if b.shape != expected:
        raise ValueError(f"right-hand side has shape {b.shape}, expected {expected}")
    if low.shape[0] == 0:
        return b.copy()
    return cho_solve((low, True), b)


@dataclass(frozen=True)
class QuadraticProgram:
    """Data of f(v) = 0.5 v'Qv - c'v + lam ||v||_1 with Q symmetric PSD."""

    q: np.ndarray
    c: np.ndarray
    lam: float

    def __post_init__(self):
        q = _as_matrix(self.q)
        c = np.ascontiguousarray(self.c, dtype=np.float64)
        _check_symmetric(q, "q")
        if c.ndim != 1 or c.shape[0] != q.shape[0]:
            raise ValueError(f"c has shape {c.shape}, expected ({q.shape[0]},)")
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lam must be a finite nonnegative scalar, got {self.lam}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dimension(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a coordinate descent run.

    `held` lists coordinates pinned at zero because their diagonal was
    non-positive; `objective_path` (when recorded) holds the objective
    value after each sweep.
    """

    solution: np.ndarray
    iterations: int
    max_kkt_violation: float
    converged: bool
    held: tuple[int, ...] = ()
    objective_path: Optional[tuple[float, ...]] = None


def objective(qp: QuadraticProgram, v) -> float:
    """Objective value f(v) of the penalized quadratic."""
    v = np.asarray(v, dtype=np.float64)
    return float(0.5 * v @ (qp.q @ v) - qp.c @ v + qp.lam * np.abs(v).sum())


def kkt_residual(qp: QuadraticProgram, v) -> float:
    """Max-norm violation of the subgradient optimality conditions at v.

    For active coordinates this is |(Qv - c)_j + lam * sign(v_j)|; for
    zero coordinates, max(0, |(Qv - c)_j| - lam).  Zero characterizes a
    minimizer.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (qp.dimension,):
        raise ValueError(f"v has shape {v.shape}, expected ({qp.dimension},)")
    if qp.dimension == 0:
        return 0.0
    g = qp.q @ v - qp.c
    active = v != 0.0
    r = np.where(active, np.abs(g + qp.lam * np.sign(v)), np.maximum(np.abs(g) - qp.lam, 0.0))
    return float(r.max())


def lasso_quadratic(
    qp: QuadraticProgram,
    start=None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    record_objective: bool = False,
) -> SolveReport:
    """Minimize the penalized quadratic by cyclic coordinate descent.

    Updates are exact per-coordinate soft thresholds; a coordinate whose
    gradient magnitude lands exactly on lam is set to zero.  Convergence
    is declared only after the KKT test passes on a freshly recomputed
    gradient.  Non-convergence is reported, not raised: the caller reads
    `converged` and `max_kkt_violation` off the report.
    """
    if tol <= 0.0 or not np.isfinite(tol):
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 0:
        raise ValueError(f"max_iter must be nonnegative, got {max_iter}")
    p = qp.dimension
    if start is None:
        v = np.zeros(p)
    else:
        v = np.array(start, dtype=np.float64, copy=True)
        if v.shape != (p,):
            raise ValueError(f"start has shape {v.shape}, expected ({p},)")
    obj_path = [] if record_objective else None
    sweeps, kkt, converged, held = backend.cd_lasso(
        qp.q, qp.c, qp.lam, v, tol, int(max_iter), obj_path
    )
    return SolveReport(
        solution=v,
        iterations=int(sweeps),
        max_kkt_violation=float(kkt),
        converged=bool(converged),
        held=tuple(held),
        objective_path=tuple(obj_path) if record_objective else None,
    )


def require_converged(report: SolveReport, context: str = "coordinate descent") -> SolveReport:
    """Raise ConvergenceError unless the report converged."""
    if not report.converged:
        raise ConvergenceError(
            f"{context} did not converge: {report.iterations} sweeps, "
            f"max KKT violation {report.max_kkt_violation:.3e}",
            report=report,
        )
    return report
