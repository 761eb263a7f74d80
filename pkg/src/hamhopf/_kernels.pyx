# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled integrator kernels for sparse polynomial Hamiltonians.

Same signatures and semantics as `hamhopf._kernels_py`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double ipow(double x, long k) nogil:
    cdef double r = 1.0
    while k > 0:
        r *= x
        k -= 1
    return r


cdef void _grad(const long[:, ::1] exps, const double[::1] coefs,
                const double* x, double* g, Py_ssize_t d) nogil:
    cdef Py_ssize_t m, i, j
    cdef double term, c
    cdef long e
    for i in range(d):
        g[i] = 0.0
    for m in range(coefs.shape[0]):
        c = coefs[m]
        for i in range(d):
            e = exps[m, i]
            if e == 0:
                continue
            term = c * e * ipow(x[i], e - 1)
            for j in range(d):
                if j != i and exps[m, j] != 0:
                    term *= ipow(x[j], exps[m, j])
            g[i] += term


cdef void _hess(const long[:, ::1] exps, const double[::1] coefs,
                const double* x, double* H, Py_ssize_t d) nogil:
    cdef Py_ssize_t m, i, j, k
    cdef double term, c
    cdef long ei, ej
    for i in range(d * d):
        H[i] = 0.0
    for m in range(coefs.shape[0]):
        c = coefs[m]
        for i in range(d):
            ei = exps[m, i]
            if ei == 0:
                continue
            for j in range(i, d):
                ej = exps[m, j]
                if i == j:
                    if ei < 2:
                        continue
                    term = c * ei * (ei - 1) * ipow(x[i], ei - 2)
                else:
                    if ej == 0:
                        continue
                    term = c * ei * ej * ipow(x[i], ei - 1) * ipow(x[j], ej - 1)
                for k in range(d):
                    if k != i and k != j and exps[m, k] != 0:
                        term *= ipow(x[k], exps[m, k])
                H[i * d + j] += term
    for i in range(d):
        for j in range(i + 1, d):
            H[j * d + i] = H[i * d + j]


cdef int _stage(const long[:, ::1] exps, const double[::1] coefs,
                const double[:, ::1] P, double* x, double* y, double* mid,
                double* g, Py_ssize_t d, double h, double tol, int maxit) nogil:
    """Solve y = x + h P grad((x+y)/2); returns iterations or -1."""
    cdef Py_ssize_t i, j
    cdef int it
    cdef double err, ymax, v, s
    _grad(exps, coefs, x, g, d)
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += P[i, j] * g[j]
        y[i] = x[i] + h * s
    for it in range(1, maxit + 1):
        for i in range(d):
            mid[i] = 0.5 * (x[i] + y[i])
        _grad(exps, coefs, mid, g, d)
        err = 0.0
        ymax = 1.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += P[i, j] * g[j]
            v = x[i] + h * s
            if fabs(v - y[i]) > err:
                err = fabs(v - y[i])
            y[i] = v
            if fabs(v) > ymax:
                ymax = fabs(v)
        if err <= tol * ymax:
            return it
    return -1


def poly_grad(const long[:, ::1] exps, const double[::1] coefs, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t d = xv.shape[0]
    out = np.zeros(d)
    cdef double[::1] ov = out
    if coefs.shape[0]:
        _grad(exps, coefs, &xv[0], &ov[0], d)
    return out


def poly_hess(const long[:, ::1] exps, const double[::1] coefs, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t d = xv.shape[0]
    out = np.zeros((d, d))
    cdef double[:, ::1] ov = out
    if coefs.shape[0]:
        _hess(exps, coefs, &xv[0], &ov[0, 0], d)
    return out


def midpoint_run(const long[:, ::1] exps, const double[::1] coefs,
                 const double[:, ::1] P, x0, double dt, long nsteps,
                 weights, double tol, int maxit, long record_every):
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t d = P.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    cdef long nrec = nsteps // record_every + 1
    out = np.empty((nrec, d))
    cdef double[:, ::1] ov = out
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] y = np.empty(d)
    cdef double[::1] mid = np.empty(d)
    cdef double[::1] g = np.empty(d)
    cdef long n, k = 1
    cdef Py_ssize_t s, i
    cdef int it, worst = 0
    for i in range(d):
        ov[0, i] = x[i]
    with nogil:
        for n in range(1, nsteps + 1):
            for s in range(nw):
                it = _stage(exps, coefs, P, &x[0], &y[0], &mid[0], &g[0], d,
                            w[s] * dt, tol, maxit)
                if it < 0:
                    worst = -1
                    break
                if it > worst:
                    worst = it
                for i in range(d):
                    x[i] = y[i]
            if worst < 0:
                break
            if n % record_every == 0:
                for i in range(d):
                    ov[k, i] = x[i]
                k += 1
    if worst < 0:
        return out[:k], -1
    return out, worst


cdef int _lu_solve(double* A, double* B, Py_ssize_t d) nogil:
    """Solve A X = B in place (B is d x d); partial pivoting."""
    cdef Py_ssize_t i, j, k, p
    cdef double piv, f, t
    for k in range(d):
        p = k
        piv = fabs(A[k * d + k])
        for i in range(k + 1, d):
            if fabs(A[i * d + k]) > piv:
                piv = fabs(A[i * d + k])
                p = i
        if piv == 0.0:
            return -1
        if p != k:
            for j in range(d):
                t = A[k * d + j]; A[k * d + j] = A[p * d + j]; A[p * d + j] = t
                t = B[k * d + j]; B[k * d + j] = B[p * d + j]; B[p * d + j] = t
        for i in range(k + 1, d):
            f = A[i * d + k] / A[k * d + k]
            for j in range(k, d):
                A[i * d + j] -= f * A[k * d + j]
            for j in range(d):
                B[i * d + j] -= f * B[k * d + j]
    for k in range(d - 1, -1, -1):
        for j in range(d):
            t = B[k * d + j]
            for i in range(k + 1, d):
                t -= A[k * d + i] * B[i * d + j]
            B[k * d + j] = t / A[k * d + k]
    return 0


def midpoint_run_jac(const long[:, ::1] exps, const double[::1] coefs,
                     const double[:, ::1] P, x0, double dt, long nsteps,
                     weights, double tol, int maxit):
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t d = P.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] y = np.empty(d)
    cdef double[::1] mid = np.empty(d)
    cdef double[::1] g = np.empty(d)
    Phi_arr = np.eye(d)
    cdef double[:, ::1] Phi = Phi_arr
    cdef double[:, ::1] H = np.empty((d, d))
    cdef double[:, ::1] M = np.empty((d, d))
    cdef double[:, ::1] A = np.empty((d, d))
    cdef double[:, ::1] R = np.empty((d, d))
    cdef long n
    cdef Py_ssize_t s, i, j, k
    cdef int it, worst = 0
    cdef double h, acc
    with nogil:
        for n in range(nsteps):
            for s in range(nw):
                h = w[s] * dt
                it = _stage(exps, coefs, P, &x[0], &y[0], &mid[0], &g[0], d, h, tol, maxit)
                if it < 0:
                    worst = -1
                    break
                if it > worst:
                    worst = it
                for i in range(d):
                    mid[i] = 0.5 * (x[i] + y[i])
                _hess(exps, coefs, &mid[0], &H[0, 0], d)
                for i in range(d):
                    for j in range(d):
                        acc = 0.0
                        for k in range(d):
                            acc += P[i, k] * H[k, j]
                        M[i, j] = 0.5 * h * acc
                for i in range(d):
                    for j in range(d):
                        A[i, j] = -M[i, j]
                        acc = Phi[i, j]
                        for k in range(d):
                            acc += M[i, k] * Phi[k, j]
                        R[i, j] = acc
                    A[i, i] += 1.0
                if _lu_solve(&A[0, 0], &R[0, 0], d) != 0:
                    worst = -1
                    break
                for i in range(d):
                    for j in range(d):
                        Phi[i, j] = R[i, j]
                    x[i] = y[i]
            if worst < 0:
                break
    return np.asarray(x).copy(), Phi_arr, worst
