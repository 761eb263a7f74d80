"""Pure-Python/NumPy versions of the integrator kernels.

Used when the compiled extension is not available.  The signatures match
`hamhopf._kernels` exactly.
"""

from __future__ import annotations

import numpy as np


def _factors(exps, x):
    pw = x[None, :] ** exps
    safe = np.where(exps > 0, exps - 1, 0)
    dpw = np.where(exps > 0, exps * x[None, :] ** safe, 0.0)
    safe2 = np.where(exps > 1, exps - 2, 0)
    d2pw = np.where(exps > 1, exps * (exps - 1) * x[None, :] ** safe2, 0.0)
    return pw, dpw, d2pw


def poly_grad(exps, coefs, x):
    x = np.asarray(x, dtype=float)
    d = x.size
    g = np.zeros(d)
    if coefs.size == 0:
        return g
    pw, dpw, _ = _factors(exps, x)
    for i in range(d):
        f = pw.copy()
        f[:, i] = dpw[:, i]
        g[i] = coefs @ np.prod(f, axis=1)
    return g


def poly_hess(exps, coefs, x):
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.zeros((d, d))
    if coefs.size == 0:
        return H
    pw, dpw, d2pw = _factors(exps, x)
    for i in range(d):
        for j in range(i, d):
            f = pw.copy()
            if i == j:
                f[:, i] = d2pw[:, i]
            else:
                f[:, i] = dpw[:, i]
                f[:, j] = dpw[:, j]
            H[i, j] = H[j, i] = coefs @ np.prod(f, axis=1)
    return H


def _solve_stage(exps, coefs, P, x, h, tol, maxit):
    y = x + h * (P @ poly_grad(exps, coefs, x))
    for it in range(1, maxit + 1):
        y_new = x + h * (P @ poly_grad(exps, coefs, 0.5 * (x + y)))
        err = np.max(np.abs(y_new - y))
        y = y_new
        if err <= tol * max(1.0, np.max(np.abs(y))):
            return y, it
    return y, -1


def midpoint_run(exps, coefs, P, x0, dt, nsteps, weights, tol, maxit, record_every):
    """Composed implicit-midpoint steps; returns (states, max_iterations).

    ``max_iterations`` is -1 if any fixed-point solve failed to converge.
    """
    x = np.array(x0, dtype=float)
    nrec = nsteps // record_every + 1
    out = np.empty((nrec, x.size))
    out[0] = x
    worst = 0
    k = 1
    for n in range(1, nsteps + 1):
        for w in weights:
            x, it = _solve_stage(exps, coefs, P, x, w * dt, tol, maxit)
            if it < 0:
                return out[:k], -1
            worst = max(worst, it)
        if n % record_every == 0:
            out[k] = x
            k += 1
    return out, worst


def midpoint_run_jac(exps, coefs, P, x0, dt, nsteps, weights, tol, maxit):
    """Final state and exact Jacobian of the discrete map."""
    x = np.array(x0, dtype=float)
    d = x.size
    Phi = np.eye(d)
    I = np.eye(d)
    worst = 0
    for _ in range(nsteps):
        for w in weights:
            h = w * dt
            y, it = _solve_stage(exps, coefs, P, x, h, tol, maxit)
            if it < 0:
                return x, Phi, -1
            worst = max(worst, it)
            M = P @ poly_hess(exps, coefs, 0.5 * (x + y))
            Phi = np.linalg.solve(I - 0.5 * h * M, (I + 0.5 * h * M) @ Phi)
            x = y
    return x, Phi, worst
