# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate descent kernel.

Twin of ``sparseda._cdpure.cd_lasso`` (see there for the contract); the
algorithm and update order are identical, only the loops are compiled.
"""

from libc.math cimport fabs

import numpy as np


cdef void _refresh(double[:, ::1] q, double[::1] c, double[::1] v,
                   double[::1] g, Py_ssize_t p) noexcept nogil:
    # g = Qv - c, accumulated over nonzero coordinates only.
    cdef Py_ssize_t i, k
    cdef double vk
    for i in range(p):
        g[i] = -c[i]
    for k in range(p):
        vk = v[k]
        if vk != 0.0:
            for i in range(p):
                g[i] += q[k, i] * vk


cdef double _kkt_max(double[::1] g, double[::1] v, double lam,
                     Py_ssize_t[::1] idx, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t t, j
    cdef double r, worst = 0.0
    for t in range(m):
        j = idx[t]
        if v[j] != 0.0:
            r = fabs(g[j] + (lam if v[j] > 0.0 else -lam))
        else:
            r = fabs(g[j]) - lam
            if r < 0.0:
                r = 0.0
        if r > worst:
            worst = r
    return worst


cdef void _sweep(double[:, ::1] q, double[::1] qd, double[::1] c, double lam,
                 double[::1] v, double[::1] g, Py_ssize_t[::1] idx,
                 Py_ssize_t m, Py_ssize_t p, bint *moved) noexcept nogil:
    cdef Py_ssize_t t, j, k
    cdef double rho, mag, new, delta
    moved[0] = 0
    for t in range(m):
        j = idx[t]
        rho = qd[j] * v[j] - g[j]
        mag = fabs(rho) - lam
        if mag > 0.0:
            new = mag / qd[j]
            if rho < 0.0:
                new = -new
        else:
            new = 0.0
        delta = new - v[j]
        if delta != 0.0:
            for k in range(p):
                g[k] += delta * q[j, k]
            v[j] = new
            moved[0] = 1


cdef double _objective(double[::1] g, double[::1] c, double[::1] v,
                       double lam, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t i
    cdef double vg = 0.0, cv = 0.0, l1 = 0.0
    for i in range(p):
        vg += v[i] * g[i]
        cv += c[i] * v[i]
        l1 += fabs(v[i])
    return 0.5 * vg - 0.5 * cv + lam * l1


def cd_lasso(double[:, ::1] q, double[::1] c, double lam, double[::1] v,
             double tol, long max_iter, obj_path=None):
    cdef Py_ssize_t p = q.shape[0]
    cdef Py_ssize_t j, n_free, n_active, sweeps = 0
    cdef bint fresh, moved
    cdef double kkt

    qd_arr = np.empty(p, dtype=np.float64)
    g_arr = np.empty(p, dtype=np.float64)
    free_arr = np.empty(p, dtype=np.intp)
    active_arr = np.empty(p, dtype=np.intp)
    all_arr = np.arange(p, dtype=np.intp)
    cdef double[::1] qd = qd_arr
    cdef double[::1] g = g_arr
    cdef Py_ssize_t[::1] free_idx = free_arr
    cdef Py_ssize_t[::1] active = active_arr
    cdef Py_ssize_t[::1] all_idx = all_arr

    held = []
    n_free = 0
    for j in range(p):
        qd[j] = q[j, j]
        if qd[j] > 0.0:
            free_idx[n_free] = j
            n_free += 1
        else:
            held.append(j)
            v[j] = 0.0

    _refresh(q, c, v, g, p)
    fresh = True

    while sweeps < max_iter:
        _sweep(q, qd, c, lam, v, g, free_idx, n_free, p, &moved)
        if moved:
            fresh = False
        sweeps += 1
        if obj_path is not None:
            obj_path.append(_objective(g, c, v, lam, p))
        if _kkt_max(g, v, lam, free_idx, n_free) <= tol:
            _refresh(q, c, v, g, p)
            fresh = True
            if _kkt_max(g, v, lam, free_idx, n_free) <= tol:
                break
            continue
        n_active = 0
        for j in range(p):
            if v[j] != 0.0 and qd[j] > 0.0:
                active[n_active] = j
                n_active += 1
        while sweeps < max_iter and n_active > 0:
            _sweep(q, qd, c, lam, v, g, active, n_active, p, &moved)
            if moved:
                fresh = False
            sweeps += 1
            if obj_path is not None:
                obj_path.append(_objective(g, c, v, lam, p))
            if _kkt_max(g, v, lam, active, n_active) <= tol:
                break

    if not fresh:
        _refresh(q, c, v, g, p)
    kkt = _kkt_max(g, v, lam, all_idx, p) if p > 0 else 0.0
    return sweeps, kkt, kkt <= tol, tuple(held)
