"""Equivariant normal form on the resonance space and Hessian coefficients.

A family ``h_lam`` is pulled back to the canonical frame (oriented so that
the form is ``+J_4n``), normalized to degree 4 with respect to the circle
action generated by the semisimple part, and its Hessian is fitted to

    d^2 h(0) = [[sigma I, tau I + psi J], [tau I - psi J, rho I]].

The fitted functions give the closed-form spectrum and the collision
diagnostics ``f1 = rho sigma - tau^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq, linear_sum_assignment

from .canonical import CanonicalFrame
from .errors import (
    FIT_RESIDUAL_EXCEEDED,
    H4_VIOLATION,
    HOMOLOGICAL_RESIDUAL,
    NO_ROOT,
    NONCONVERGENT,
    HopfError,
)
from .linear_core import GroupData, standard_J
from .polynomial import Poly, PolyJet, monomial_basis
from .tolerances import DEFAULT, Tolerances


# families ------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianFamily:
    """Polynomial family h(x, lam) on (R^d, omega) with linear symmetries.

    ``momenta`` maps a name to a quadratic ``Poly`` (a momentum map of an
    algebra generator); ``lambda0`` is an optional known bifurcation value.
    """

    jet: PolyJet
    omega: np.ndarray
    group: GroupData = field(default_factory=GroupData)
    momenta: Dict[str, Poly] = field(default_factory=dict)
    name: str = "inline"
    lambda0: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.jet.dim

    @property
    def poisson(self) -> np.ndarray:
        return -np.linalg.inv(self.omega)

    def hamiltonian(self, lam: float) -> Poly:
        return self.jet.at(lam)

    def hessian(self, lam: float) -> np.ndarray:
        return self.jet.at(lam).degree_part(2).quadratic_matrix()

    def linearization(self, lam: float) -> np.ndarray:
        return self.poisson @ self.hessian(lam)


def taylor_at_origin(family: HamiltonianFamily, order: int = 4) -> PolyJet:
    """Exact truncation of the polynomial family at the origin."""
    family.jet.check_order(order)
    family.jet.check_h1()
    return family.jet.truncate(order)


def invariance_residual(h: Poly, g: np.ndarray, samples: np.ndarray) -> float:
    """max |h(g x) - h(x)| / (1 + |x|^4) over the rows of ``samples``."""
    x = np.asarray(samples, float)
    gx = x @ np.asarray(g, float).T
    scale = 1.0 + np.sum(x * x, axis=1) ** 2
    return float(np.max(np.abs(h(gx) - h(x)) / scale))


def noether_residual(h: Poly, K: Poly, P: np.ndarray) -> float:
    """Largest coefficient of the bracket {h, K}."""
    return h.bracket(K, P).max_abs_coef()


# pulling back to the frame ----------------------------------------------------


def frame_jet(jet: PolyJet, frame: CanonicalFrame) -> PolyJet:
    """Oriented family sign * h(S x) in frame coordinates (each lam-power composed)."""
    S = frame.ambient_basis
    order = max((len(c) for c in jet.terms.values()), default=1)
    polys = []
    for k in range(order):
        pk = Poly(jet.dim, {e: c[k] for e, c in jet.terms.items() if len(c) > k and c[k] != 0.0})
        polys.append(pk.compose_linear(S).scale(frame.sign))
    return PolyJet.from_polys(polys)


def frame_s1_generator(frame: CanonicalFrame) -> np.ndarray:
    """A_s in frame coordinates: diag(nu0 J, nu0 J)."""
    nu = frame.nu0
    J = standard_J(2 * frame.n)
    Z = np.zeros_like(J)
    return np.block([[nu * J, Z], [Z, nu * J]])


def s1_average(F: Poly, A_s: np.ndarray, nu0: float, samples: int = 16) -> Poly:
    """Average of F over exp(theta/nu0 A_s), theta on an equispaced grid (exact to degree < samples)."""
    out = Poly(F.dim)
    for th in 2 * math.pi * np.arange(samples) / samples:
        out = out + F.compose_linear(expm((th / nu0) * A_s))
    return out.scale(1.0 / samples).prune(1e-15 * max(1.0, F.max_abs_coef()))


def _matrix_average(M: np.ndarray, A_s: np.ndarray, nu0: float, samples: int = 16, congruence=True):
    out = np.zeros_like(M)
    for th in 2 * math.pi * np.arange(samples) / samples:
        R = expm((th / nu0) * A_s)
        out += R.T @ M @ R if congruence else np.linalg.solve(R, M @ R)
    return out / samples


def normalize_quadratic(M: np.ndarray, A_s: np.ndarray, W: np.ndarray, nu0: float,
                        tol: float = 1e-14, maxit: int = 30):
    """Linear symplectic normal form of the quadratic 1/2 x^T M x w.r.t. the circle action.

    Returns (M', T) with T symplectic, M' = T^T M T and the Hamiltonian matrix of M'
    commuting with A_s.  Newton-type iteration on exp of non-invariant generators.
    """
    d = M.shape[0]
    P = -np.linalg.inv(W)
    # basis of non-invariant Hamiltonian matrices
    basis = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            X = P @ E
            basis.append((X - _matrix_average(X, A_s, nu0, congruence=False)).ravel())
    B = np.array(basis).T
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    U = u[:, s > 1e-10 * s.max()]
    T = np.eye(d)
    Mc = 0.5 * (M + M.T)
    for _ in range(maxit):
        A = P @ Mc
        N = A - _matrix_average(A, A_s, nu0, congruence=False)
        if np.abs(N).max() <= tol * max(1.0, np.abs(A).max()):
            return Mc, T
        ops = np.column_stack([(A @ Uk.reshape(d, d) - Uk.reshape(d, d) @ A).ravel() for Uk in U.T])
        c = np.linalg.lstsq(ops, -N.ravel(), rcond=None)[0]
        X = (U @ c).reshape(d, d)
        E = expm(X)
        T = T @ E
        Mc = E.T @ Mc @ E
        Mc = 0.5 * (Mc + Mc.T)
    raise HopfError(NONCONVERGENT, "quadratic normalization did not converge")


@dataclass
class NormalizationInfo:
    residuals: dict
    generators: dict


def _homological(H2: Poly, Hd: Poly, A_s, nu0, P, degree, tol):
    dim = H2.dim
    basis = monomial_basis(dim, degree)
    avg = s1_average(Hd, A_s, nu0)
    target = (Hd - avg).coefficient_vector(basis)
    if np.abs(target).max(initial=0.0) == 0.0:
        return Poly(dim), avg, 0.0
    cols = []
    for e in basis:
        cols.append(H2.bracket(Poly(dim, {e: 1.0}), P).coefficient_vector(basis))
    L = np.column_stack(cols)
    w = np.linalg.lstsq(L, -target, rcond=None)[0]
    res = float(np.abs(L @ w + target).max() / max(1.0, np.abs(target).max()))
    if res > tol:
        raise HopfError(HOMOLOGICAL_RESIDUAL, f"homological equation residual {res:.3e}", degree=degree)
    W = Poly.from_vector(dim, basis, w)
    W = W - s1_average(W, A_s, nu0)
    return W, avg, res


def normalize_poly(h: Poly, A_s: np.ndarray, P: np.ndarray, nu0: float, order: int = 4,
                   tols: Tolerances = DEFAULT):
    """Lie-transform normal form through ``order``; returns (h_hat, NormalizationInfo).

    The generator at degree d solves {H2, W_d} = -(H_d - <H_d>), with <.> the
    circle average, so the transformed degree-d part is invariant.
    """
    if order > 4:
        from .errors import UNSUPPORTED_ORDER

        raise HopfError(UNSUPPORTED_ORDER, f"order {order} > 4 not supported")
    H2, H3, H4 = h.degree_part(2), h.degree_part(3), h.degree_part(4)
    res = {}
    gens = {}
    W3, _, res[3] = _homological(H2, H3, A_s, nu0, P, 3, tols.homological_tol)
    H3n = H3 + H2.bracket(W3, P)
    if W3.terms:
        H4 = H4 + H3.bracket(W3, P) + H2.bracket(W3, P).bracket(W3, P).scale(0.5)
    gens[3] = W3
    if order >= 4:
        W4, _, res[4] = _homological(H2, H4, A_s, nu0, P, 4, tols.homological_tol)
        H4n = H4 + H2.bracket(W4, P)
        gens[4] = W4
    else:
        H4n = Poly(h.dim)
    tol = 1e-12 * max(1.0, h.max_abs_coef())
    out = (H2 + H3n.prune(tol) + H4n.prune(tol))
    return out, NormalizationInfo(res, gens)


def equivariant_normalize(jet, A_s: np.ndarray, P: Optional[np.ndarray] = None, order: int = 4,
                          lam: float = 0.0, nu0: Optional[float] = None,
                          tols: Tolerances = DEFAULT) -> PolyJet:
    """Normal form of ``jet`` at parameter ``lam`` (frame coordinates), as a lam-constant jet."""
    h = jet.at(lam) if isinstance(jet, PolyJet) else jet
    d = h.dim
    if P is None:
        P = standard_J(d)
    if nu0 is None:
        nu0 = float(np.max(np.abs(np.linalg.eigvals(A_s).imag)))
    out, _ = normalize_poly(h, A_s, P, nu0, order, tols)
    return PolyJet.from_polys([out])


def s1_invariance_residual(h: Poly, A_s: np.ndarray, nu0: float, samples: np.ndarray,
                           angles: int = 16) -> float:
    worst = 0.0
    for th in 2 * math.pi * np.arange(1, angles) / angles:
        worst = max(worst, invariance_residual(h, expm((th / nu0) * A_s), samples))
    return worst


# Hessian coefficients -----------------------------------------------------------


def hessian_basis(n: int):
    I = np.eye(2 * n)
    J = standard_J(2 * n)
    Z = np.zeros_like(I)
    return [
        np.block([[I, Z], [Z, Z]]),     # sigma
        np.block([[Z, Z], [Z, I]]),     # rho
        np.block([[Z, I], [I, Z]]),     # tau
        np.block([[Z, J], [-J, Z]]),    # psi
    ]


def fit_hessian(M: np.ndarray, n: int):
    """Least-squares (sigma, rho, tau, psi) and max-abs residual."""
    B = hessian_basis(n)
    A = np.column_stack([b.ravel() for b in B])
    c = np.linalg.lstsq(A, M.ravel(), rcond=None)[0]
    res = float(np.abs(A @ c - M.ravel()).max())
    return c, res


def hessian_matrix(sigma, rho, tau, psi, n: int) -> np.ndarray:
    B = hessian_basis(n)
    return sigma * B[0] + rho * B[1] + tau * B[2] + psi * B[3]


@dataclass
class HessianCoefficients:
    """sigma, rho, tau, psi as functions of lam, with derivatives at lam0."""

    lambda0: float
    nu0: float
    n: int
    grid: np.ndarray
    samples: np.ndarray            # rows (sigma, rho, tau, psi) on the grid
    fit_residuals: np.ndarray
    sigma_prime_0: float
    psi_prime_0: float
    tau_prime_0: float = 0.0
    rho_prime_0: float = 0.0
    h_fd: float = 1e-4
    evaluator: Optional[Callable] = field(default=None, repr=False)

    def at(self, lam: float) -> np.ndarray:
        if self.evaluator is None:
            raise ValueError("no evaluator attached")
        return np.asarray(self.evaluator(lam)[0], float)

    def sigma(self, lam):
        return self.at(lam)[0]

    def rho(self, lam):
        return self.at(lam)[1]

    def tau(self, lam):
        return self.at(lam)[2]

    def psi(self, lam):
        return self.at(lam)[3]

    def f1(self, lam: float) -> float:
        s, r, t, _ = self.at(lam)
        return float(r * s - t * t)

    @classmethod
    def from_functions(cls, sigma, rho, tau, psi, lambda0: float, nu0: float, n: int = 1,
                       h_fd: Optional[float] = None, grid=None):
        """Coefficients given by explicit callables (used for synthetic checks)."""
        h = h_fd if h_fd is not None else 1e-4 * (1 + abs(lambda0))

        def ev(lam):
            return np.array([sigma(lam), rho(lam), tau(lam), psi(lam)], float), 0.0

        return cls._assemble(ev, lambda0, nu0, n, h, grid)

    @classmethod
    def linear(cls, sigma_prime: float, psi_prime: float = 0.0, nu0: float = 1.0,
               lambda0: float = 0.0, n: int = 1):
        return cls.from_functions(lambda l: sigma_prime * (l - lambda0), lambda l: -1.0,
                                  lambda l: 0.0, lambda l: nu0 + psi_prime * (l - lambda0),
                                  lambda0, nu0, n)

    @classmethod
    def _assemble(cls, ev, lambda0, nu0, n, h, grid=None, tols: Tolerances = DEFAULT):
        if grid is None:
            grid = chebyshev_grid(lambda0, tols.grid_halfwidth, tols.grid_points)
        grid = np.asarray(grid, float)
        vals, res = zip(*(ev(l) for l in grid))
        dp = (ev(lambda0 + h)[0] - ev(lambda0 - h)[0]) / (2 * h)
        return cls(
            lambda0=float(lambda0), nu0=float(nu0), n=int(n), grid=grid,
            samples=np.array(vals), fit_residuals=np.array(res, float),
            sigma_prime_0=float(dp[0]), psi_prime_0=float(dp[3]),
            tau_prime_0=float(dp[2]), rho_prime_0=float(dp[1]), h_fd=float(h), evaluator=ev,
        )

    def derivative(self, index: int, h: float) -> float:
        l0 = self.lambda0
        return float((self.at(l0 + h)[index] - self.at(l0 - h)[index]) / (2 * h))

    def to_json(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "nu0": self.nu0,
            "n": self.n,
            "grid": self.grid.tolist(),
            "samples": {k: self.samples[:, i].tolist() for i, k in enumerate(("sigma", "rho", "tau", "psi"))},
            "fit_residuals": self.fit_residuals.tolist(),
            "sigma_prime_0": self.sigma_prime_0,
            "psi_prime_0": self.psi_prime_0,
            "h_fd": self.h_fd,
        }


def chebyshev_grid(center: float, halfwidth: float, npts: int) -> np.ndarray:
    k = np.arange(npts)
    x = np.cos((2 * k + 1) * np.pi / (2 * npts))[::-1]
    return center + halfwidth * x


def frame_hessian(family: HamiltonianFamily, frame: CanonicalFrame, lam: float) -> np.ndarray:
    """Oriented d^2 h_lam(0) restricted to the resonance space, frame coordinates."""
    return frame.hessian_in_frame(family.hessian(lam))


def extract_coefficients(family: HamiltonianFamily, frame: CanonicalFrame, grid=None,
                         tols: Tolerances = DEFAULT, lambda0: Optional[float] = None,
                         check: bool = True) -> HessianCoefficients:
    """Fit the normalized Hessian on a lam-grid; FIT_RESIDUAL_EXCEEDED on shape mismatch."""
    lam0 = family.lambda0 if lambda0 is None else lambda0
    if lam0 is None:
        raise ValueError("lambda0 is required")
    n = frame.n
    As = frame_s1_generator(frame)
    W = standard_J(4 * n)
    scale = 1.0 + frame.nu0

    def ev(lam):
        M = frame_hessian(family, frame, lam)
        Mn, _ = normalize_quadratic(M, As, W, frame.nu0)
        c, res = fit_hessian(Mn, n)
        if check and res > tols.equivariance_tol * scale:
            raise HopfError(FIT_RESIDUAL_EXCEEDED,
                            "Hessian is not of the equivariant shape", lam=lam, residual=res)
        return c, res

    h = tols.h_fd_scale * (1 + abs(lam0))
    return HessianCoefficients._assemble(ev, lam0, frame.nu0, n, h, grid, tols)


# spectra ---------------------------------------------------------------------


def eigenvalues_closed_form(C: HessianCoefficients, lam: float) -> np.ndarray:
    """The four distinct eigenvalues of the restricted linearization (each of multiplicity n)."""
    s, r, t, p = C.at(lam)
    return closed_form_from_values(s, r, t, p)


def closed_form_from_values(s, r, t, p) -> np.ndarray:
    root = np.sqrt(complex(r * s - t * t))
    base = complex(t * t - r * s - p * p)
    out = []
    for sg in (1.0, -1.0):
        mu = np.sqrt(base + sg * 2 * abs(p) * root)
        out.extend([mu, -mu])
    return np.array(out)


def numeric_spectrum(A: np.ndarray, precise: bool = False, dps: int = 40) -> np.ndarray:
    """Eigenvalues of A; ``precise`` uses multiprecision (robust at defective points)."""
    if not precise:
        return np.linalg.eigvals(A)
    import mpmath

    with mpmath.workdps(dps):
        ev = mpmath.eig(mpmath.matrix(np.asarray(A, float).tolist()), left=False, right=False)
    return np.array([complex(e) for e in ev])


def match_spectra(closed: np.ndarray, numeric: np.ndarray, n: int) -> float:
    """Max distance after optimal matching; closed-form values repeat n times."""
    a = np.repeat(np.asarray(closed), n)
    b = np.asarray(numeric)
    if a.size != b.size:
        # keep the numeric eigenvalues nearest the closed-form cluster
        d = np.abs(b[:, None] - a[None, :]).min(axis=1)
        b = b[np.argsort(d)[: a.size]]
    D = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(D)
    return float(D[i, j].max())


def cluster_moments(A: np.ndarray, center: complex, size: int):
    """Mean and variance of x = mu^2 over the ``size`` eigenvalues with mu^2 nearest ``center``."""
    x = np.linalg.eigvals(A) ** 2
    idx = np.argsort(np.abs(x - center))[:size]
    xs = x[idx]
    m = xs.mean()
    return m, (xs * xs).mean() - m * m


def collision_discriminant(family: HamiltonianFamily, lam: float, center: complex, size: int) -> float:
    """Real part of var(mu^2) on the colliding cluster; equals 4 psi^2 f1 and changes sign at a collision."""
    return float(cluster_moments(family.linearization(lam), center, size)[1].real)


def _n_off_axis(A: np.ndarray, tol: float) -> int:
    ev = np.linalg.eigvals(A)
    return int(np.sum(np.abs(ev.real) > tol))


def locate_collision(family: HamiltonianFamily, interval, npts: int = 41,
                     tols: Tolerances = DEFAULT):
    """Frame-free search for an imaginary-axis collision in ``interval``.

    Returns (lambda_star, nu_star, info).  The colliding cluster is the set of
    eigenvalues that leave the imaginary axis; the root of var(mu^2) over that
    cluster is located by Brent's method.
    """
    lo, hi = map(float, interval)
    grid = np.linspace(lo, hi, npts)
    nrm = max(1.0, np.linalg.norm(family.linearization(0.5 * (lo + hi)), 2))
    tol = 1e-6 * nrm
    counts = [_n_off_axis(family.linearization(l), tol) for l in grid]
    for i in range(npts - 1):
        if counts[i] != counts[i + 1]:
            break
    else:
        raise HopfError(NO_ROOT, "no eigenvalue leaves the imaginary axis in the interval",
                        interval=[lo, hi])
    a, b = grid[i], grid[i + 1]
    cplx_end = a if counts[i] > counts[i + 1] else b
    A = family.linearization(cplx_end)
    ev = np.linalg.eigvals(A)
    off = ev[np.abs(ev.real) > tol]
    size = off.size
    center = complex(np.mean(off ** 2))

    def delta(l):
        return collision_discriminant(family, l, center, size)

    da, db = delta(a), delta(b)
    if da * db > 0:
        # a grid point may sit on the collision itself, where delta is roundoff
        a, b = grid[max(i - 1, 0)], grid[min(i + 2, npts - 1)]
        da, db = delta(a), delta(b)
    if da * db > 0:
        raise HopfError(NO_ROOT, "collision discriminant does not change sign", bracket=[a, b])
    lam_star = brentq(delta, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    m, _ = cluster_moments(family.linearization(lam_star), center, size)
    nu_star = math.sqrt(max(-m.real, 0.0))
    return lam_star, nu_star, {"bracket": [float(a), float(b)], "cluster_size": int(size),
                               "delta_ends": [da, db]}


# Krein classification -------------------------------------------------------------


@dataclass(frozen=True)
class HopfEvent:
    lambda_star: Optional[float]
    nu_star: Optional[float]
    f1_sign_change: tuple
    classification: str          # COLLISION_SPLIT or NO_EVENT
    sigma_prime: float = 0.0

    def to_json(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "nu_star": self.nu_star,
            "f1_sign_change": list(self.f1_sign_change),
            "classification": self.classification,
            "sigma_prime": self.sigma_prime,
        }


def krein_classify(C: HessianCoefficients, interval=None, npts: Optional[int] = None,
                   tols: Tolerances = DEFAULT) -> HopfEvent:
    """Locate the sign change of f1 = rho sigma - tau^2 and classify the event."""
    if interval is None:
        grid = C.grid
    else:
        grid = np.linspace(float(interval[0]), float(interval[1]), max(npts or 0, tols.grid_points))
    if grid.size < 5:
        raise ValueError("at least 5 grid points are required")
    sp = C.sigma_prime_0
    f = np.array([C.f1(l) for l in grid])
    if abs(sp) < 1e-10 * (1 + abs(C.nu0)):
        return HopfEvent(None, None, (0, 0), "NO_EVENT", sp)
    sgn = np.sign(f)
    idx = [i for i in range(len(grid) - 1) if sgn[i] * sgn[i + 1] < 0 or sgn[i] == 0]
    if sgn[-1] == 0:
        idx.append(len(grid) - 1)
    if not idx:
        raise HopfError(NO_ROOT, "f1 does not change sign on the interval",
                        interval=[float(grid[0]), float(grid[-1])])
    i = idx[0]
    if sgn[i] == 0:
        lam = float(grid[i])
    else:
        lam = brentq(C.f1, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    before = int(np.sign(C.f1(lam - 10 * C.h_fd)))
    after = int(np.sign(C.f1(lam + 10 * C.h_fd)))
    nu = abs(C.psi(lam))
    cls = "COLLISION_SPLIT" if before * after < 0 else "NO_EVENT"
    return HopfEvent(float(lam), float(nu), (before, after), cls, sp)


def check_h4(C: HessianCoefficients, tol: float = 1e-10) -> dict:
    ok = abs(C.sigma_prime_0) > tol
    return {"pass": bool(ok), "sigma_prime": C.sigma_prime_0}


def require_h4(C: HessianCoefficients, tol: float = 1e-10) -> None:
    if not check_h4(C, tol)["pass"]:
        raise HopfError(H4_VIOLATION, "sigma'(lambda0) vanishes", sigma_prime=C.sigma_prime_0)
