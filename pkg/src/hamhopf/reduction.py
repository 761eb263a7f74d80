"""Lyapunov-Schmidt reduction for relative periodic orbits near the collision.

Everything is expressed in the oriented canonical frame, where
d^2 J = [[0, J], [-J, 0]] and the frequency is written zeta = nu0 (1 + alpha).
The drift velocity xi enters as its 2n x 2n block on V0 (skew, commuting
with J); its momentum K^xi has Hessian [[0, xi], [-xi, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .canonical import CanonicalFrame
from .errors import NEWTON_DIVERGED, RHO_SINGULAR, HopfError
from .linear_core import standard_J
from .normalform import (
    HamiltonianFamily,
    HessianCoefficients,
    frame_jet,
    frame_s1_generator,
    hessian_matrix,
    normalize_poly,
)
from .polynomial import Poly
from .tolerances import DEFAULT, Tolerances


@dataclass
class ReductionData:
    """Coefficients plus the quartic potential on V0 whose gradient is C."""

    coeffs: HessianCoefficients
    quartic: Poly                    # degree-4 potential on V0 (dim 2n)
    n: int
    nu0: float
    normal_form: Optional[Poly] = field(default=None, repr=False)

    @property
    def lambda0(self) -> float:
        return self.coeffs.lambda0

    def cubic(self, v0) -> np.ndarray:
        """C(v0) = grad of the quartic potential."""
        return self.quartic.grad(np.asarray(v0, float))

    def cubic_jacobian(self, v0) -> np.ndarray:
        return self.quartic.hess(np.asarray(v0, float))


@dataclass(frozen=True)
class BifPoint:
    v0: np.ndarray
    alpha: float
    lam: float
    xi: np.ndarray                   # 2n x 2n block on V0

    @classmethod
    def make(cls, v0, alpha=0.0, lam=0.0, xi=None):
        v0 = np.asarray(v0, float)
        m = v0.size
        xi = np.zeros((m, m)) if xi is None else np.asarray(xi, float)
        return cls(v0, float(alpha), float(lam), xi)


def reduction_data(family: HamiltonianFamily, frame: CanonicalFrame, coeffs: HessianCoefficients,
                   tols: Tolerances = DEFAULT) -> ReductionData:
    """Normalize the frame jet at lambda0 and restrict its quartic part to V0."""
    lam0 = coeffs.lambda0
    fj = frame_jet(family.jet, frame)
    h = fj.at(lam0)
    As = frame_s1_generator(frame)
    hn, _ = normalize_poly(h, As, standard_J(4 * frame.n), frame.nu0, 4, tols)
    m = 2 * frame.n
    embed = np.vstack([np.eye(m), np.zeros((m, m))])
    q4 = hn.degree_part(4).compose_linear(embed)
    return ReductionData(coeffs=coeffs, quartic=q4, n=frame.n, nu0=frame.nu0, normal_form=hn)


# linear pieces ---------------------------------------------------------------


def L_zeta(C: HessianCoefficients, zeta: float, lam: Optional[float] = None) -> np.ndarray:
    """d^2(h - J^zeta)(0) at lam (default lambda0)."""
    lam = C.lambda0 if lam is None else lam
    s, r, t, p = C.at(lam)
    return hessian_matrix(s, r, t, p - zeta, C.n)


def reduced_hessian(C: HessianCoefficients, alpha: float, lam: float, xi) -> np.ndarray:
    """d^2(h_lam - K^xi - J^{nu0(1+alpha)})(0) = [[sigma I, N], [N^T, rho I]]."""
    n = C.n
    s, r, t, p = C.at(lam)
    J = standard_J(2 * n)
    I = np.eye(2 * n)
    xi = np.asarray(xi, float)
    N = t * I + (p - C.nu0 * (1 + alpha)) * J - xi
    return np.block([[s * I, N], [N.T, r * I]])


def _rho(C, lam, tol=1e-12):
    r = C.at(lam)[1]
    if abs(r) < tol:
        raise HopfError(RHO_SINGULAR, "rho(lambda) vanishes", lam=lam, rho=r)
    return r


def v1_derivative(C: HessianCoefficients, alpha: float, lam: float, xi) -> np.ndarray:
    """D v1(0) = -(tau/rho) I + ((psi - nu0(1+alpha))/rho) J - xi/rho."""
    n = C.n
    s, r, t, p = C.at(lam)
    r = _rho(C, lam)
    J = standard_J(2 * n)
    beta = p - C.nu0 * (1 + alpha)
    return -(t / r) * np.eye(2 * n) + (beta / r) * J - np.asarray(xi, float) / r


def DB_at_zero(C: HessianCoefficients, alpha: float, lam: float, xi) -> np.ndarray:
    """[sigma rho - tau^2 - beta^2]/rho I - (2 beta/rho) J xi + xi^2/rho, beta = psi - nu0(1+alpha)."""
    n = C.n
    s, r, t, p = C.at(lam)
    r = _rho(C, lam)
    J = standard_J(2 * n)
    xi = np.asarray(xi, float)
    beta = p - C.nu0 * (1 + alpha)
    return (s * r - t * t - beta * beta) / r * np.eye(2 * n) - (2 * beta / r) * (J @ xi) + (xi @ xi) / r


# principal part -----------------------------------------------------------------


def principal_linear(R: ReductionData, alpha: float, lam: float, xi) -> np.ndarray:
    """Linear operator of the principal part of B (symmetric)."""
    C = R.coeffs
    nu = R.nu0
    dl = lam - C.lambda0
    m = 2 * R.n
    J = standard_J(m)
    xi = np.asarray(xi, float)
    Jxi = J @ xi
    sp, pp = C.sigma_prime_0, C.psi_prime_0
    return ((dl * sp + nu * nu * alpha * alpha - 2 * pp * nu * alpha * dl) * np.eye(m)
            - xi @ xi - 2 * nu * alpha * Jxi + 2 * pp * dl * Jxi)


def principal_part_B(R: ReductionData, p: BifPoint) -> np.ndarray:
    """(dl s' + nu^2 a^2) v - xi^2 v - 2 nu a J xi v - 2 psi' nu a dl v + 2 psi' dl J xi v + C(v)."""
    D = principal_linear(R, p.alpha, p.lam, p.xi)
    return D @ p.v0 + R.cubic(p.v0)


def jacobian_B(R: ReductionData, p: BifPoint) -> np.ndarray:
    return principal_linear(R, p.alpha, p.lam, p.xi) + R.cubic_jacobian(p.v0)


def bifurcation_potential_g(R: ReductionData, p: BifPoint) -> float:
    """g with grad g = principal_part_B: 1/2 v^T D v + quartic(v)."""
    D = principal_linear(R, p.alpha, p.lam, p.xi)
    v = p.v0
    return float(0.5 * v @ D @ v + R.quartic(v))


def solve_lambda(R: ReductionData, r: float, u0, alpha: float, xi,
                 tols: Tolerances = DEFAULT, lam_start: Optional[float] = None) -> float:
    """Root of F(lam) = <B(r u0, alpha, lam, xi), u0>/r by Newton seeded at lambda0."""
    u0 = np.asarray(u0, float)
    u0 = u0 / np.linalg.norm(u0)
    lam = R.lambda0 if lam_start is None else lam_start

    def F(l):
        if r == 0.0:
            return float(u0 @ principal_linear(R, alpha, l, xi) @ u0)
        return float(principal_part_B(R, BifPoint.make(r * u0, alpha, l, xi)) @ u0 / r)

    h = 1e-6 * (1 + abs(R.lambda0))
    for _ in range(tols.newton_maxit):
        f = F(lam)
        if abs(f) < tols.newton_tol:
            return lam
        df = (F(lam + h) - F(lam - h)) / (2 * h)
        if df == 0.0 or not np.isfinite(df):
            break
        step = f / df
        lam -= step
        if abs(step) < 1e-15 * (1 + abs(lam)) and abs(F(lam)) < 1e-10:
            return lam
    if abs(F(lam)) < 1e-10:
        return lam
    raise HopfError(NEWTON_DIVERGED, "lambda solve did not converge", residual=F(lam))


def sphere_field_G(R: ReductionData, r: float, u0, alpha: float, xi,
                   tols: Tolerances = DEFAULT) -> np.ndarray:
    """B(r u0, alpha, lambda(r, u0, alpha, xi), xi), tangent to the sphere at u0."""
    u0 = np.asarray(u0, float)
    u0 = u0 / np.linalg.norm(u0)
    lam = solve_lambda(R, r, u0, alpha, xi, tols)
    return principal_part_B(R, BifPoint.make(r * u0, alpha, lam, xi))


# implicit-function oracle ----------------------------------------------------------


def full_gradient(R: ReductionData, alpha: float, lam: float, xi, v) -> np.ndarray:
    """grad(h_hat - K^xi - J^{nu0(1+alpha)})(v) in the frame, with the normal form at lambda0
    for degrees 3-4 and the exact lam-dependent quadratic part."""
    M = reduced_hessian(R.coeffs, alpha, lam, xi)
    g = M @ v
    if R.normal_form is not None:
        hot = R.normal_form.degree_part(3) + R.normal_form.degree_part(4)
        if hot.terms:
            g = g + hot.grad(v)
    return g


def v1_newton(R: ReductionData, v0, alpha: float, lam: float, xi, tol: float = 1e-14,
              maxit: int = 50) -> np.ndarray:
    """Solve (I - P) grad(...)(v0 + v1) = 0 for v1 in V1 by Newton."""
    m = 2 * R.n
    v0 = np.asarray(v0, float)
    v1 = np.zeros(m)
    for _ in range(maxit):
        v = np.concatenate([v0, v1])
        F = full_gradient(R, alpha, lam, xi, v)[m:]
        if np.abs(F).max() < tol:
            return v1
        H = reduced_hessian(R.coeffs, alpha, lam, xi)
        if R.normal_form is not None:
            hot = R.normal_form.degree_part(3) + R.normal_form.degree_part(4)
            if hot.terms:
                H = H + hot.hess(v)
        v1 = v1 - np.linalg.solve(H[m:, m:], F)
    raise HopfError(NEWTON_DIVERGED, "implicit-function Newton did not converge")


def v1_fd_derivative(R: ReductionData, v0, alpha: float, lam: float, xi, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of the Newton-solved v1 at v0."""
    v0 = np.asarray(v0, float)
    m = v0.size
    D = np.zeros((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        D[:, k] = (v1_newton(R, v0 + e, alpha, lam, xi) - v1_newton(R, v0 - e, alpha, lam, xi)) / (2 * h)
    return D


def reduced_equation(R: ReductionData, v0, alpha: float, lam: float, xi) -> np.ndarray:
    """V0 component of grad(...)(v0 + v1(v0)): the bifurcation equation of the truncated normal form."""
    v0 = np.asarray(v0, float)
    m = v0.size
    v1 = v1_newton(R, v0, alpha, lam, xi)
    return full_gradient(R, alpha, lam, xi, np.concatenate([v0, v1]))[:m]
