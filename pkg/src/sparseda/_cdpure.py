"""Pure-numpy coordinate descent kernel for the l1-penalized quadratic

    f(v) = 0.5 v'Qv - c'v + lam * ||v||_1.

This is the fallback twin of the compiled kernel in ``_cdcore``; both
implement the same contract:

    cd_lasso(q, c, lam, v, tol, max_iter, obj_path)
        -> (sweeps, kkt, converged, held)

``v`` is updated in place.  ``held`` lists coordinates with a
non-positive diagonal; they are pinned at zero (their subproblem has no
minimizer) and still count toward the reported KKT violation.  When
``obj_path`` is a list, the objective value is appended after every
sweep.  Convergence is declared only after the residual test passes on
a freshly recomputed gradient, so the reported violation never relies
on incrementally maintained state.
"""

from __future__ import annotations

import numpy as np


def _kkt(g: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    """Per-coordinate KKT violation given the gradient g = Qv - c."""
    return np.where(v != 0.0, np.abs(g + lam * np.sign(v)), np.maximum(np.abs(g) - lam, 0.0))


def _objective(g: np.ndarray, c: np.ndarray, v: np.ndarray, lam: float) -> float:
    # 0.5 v'Qv - c'v = 0.5 v'(g + c) - c'v = 0.5 v'g - 0.5 c'v
    return 0.5 * float(v @ g) - 0.5 * float(c @ v) + lam * float(np.abs(v).sum())


def cd_lasso(q, c, lam, v, tol, max_iter, obj_path=None):
    p = q.shape[0]
    qd = np.ascontiguousarray(np.diag(q))
    free = qd > 0.0
    held = tuple(int(j) for j in np.flatnonzero(~free))
    v[~free] = 0.0
    g = q @ v - c

    free_idx = np.flatnonzero(free)
    sweeps = 0
    fresh = True

    def one_sweep(indices) -> None:
        nonlocal fresh, g
        for j in indices:
            rho = qd[j] * v[j] - g[j]
            mag = abs(rho) - lam
            new = (mag / qd[j]) * np.sign(rho) if mag > 0.0 else 0.0
            delta = new - v[j]
            if delta != 0.0:
                g += delta * q[j]
                v[j] = new
                fresh = False
        if obj_path is not None:
            obj_path.append(_objective(g, c, v, lam))

    while sweeps < max_iter:
        one_sweep(free_idx)
        sweeps += 1
        if free_idx.size == 0 or _kkt(g[free], v[free], lam).max() <= tol:
            g = q @ v - c
            fresh = True
            if free_idx.size == 0 or _kkt(g[free], v[free], lam).max() <= tol:
                break
            continue
        active = np.flatnonzero((v != 0.0) & free)
        while sweeps < max_iter and active.size:
            one_sweep(active)
            sweeps += 1
            if _kkt(g[active], v[active], lam).max() <= tol:
                break

    if not fresh:
        g = q @ v - c
    kkt = float(_kkt(g, v, lam).max()) if p else 0.0
    return sweeps, kkt, kkt <= tol, held
