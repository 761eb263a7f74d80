"""Leading-order branch predictions near the 1:-1 collision.

Covers the O(2) x S1 mixed-mode law, the n-frequency torus solve, restriction
to fixed-point subspaces of spatiotemporal isotropy subgroups and the Euler
characteristic lower bounds for maximal isotropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    CONDITION_VIOLATED,
    DEGENERATE_COEFFICIENTS,
    NEWTON_DIVERGED,
    NOT_ISOTROPY,
    PARITY_VIOLATION,
    RANK_DEFICIENT,
    HopfError,
)
from .tolerances import DEFAULT, Tolerances

QUOTIENT_TYPES = ("S1_TRIVIAL", "S1_Z2", "SU2")


@dataclass
class BranchPrediction:
    """One point of a predicted branch of periodic orbits or RPOs.

    ``coords`` are the solution coordinates (|z_j|^2 for the O(2) case,
    pi_j for the torus case, a V0 vector for sphere-field zeros).
    """

    kind: str                       # "PERIODIC" or "RPO"
    isotropy_label: str
    r: float
    lam: float
    alpha: float
    xi: float
    coords: np.ndarray
    admissible: bool = True
    nu0: float = 1.0
    trust_radius: float = DEFAULT.trust_radius
    meta: dict = field(default_factory=dict)

    @property
    def relative_period(self) -> float:
        """2 pi / zeta with zeta = nu0 (1 + alpha)."""
        return 2 * np.pi / (self.nu0 * (1 + self.alpha))

    def phase_shift(self, xi_matrix) -> np.ndarray:
        """Group element exp(tau xi) for a matrix representative of xi."""
        from scipy.linalg import expm

        return expm(self.relative_period * np.asarray(xi_matrix, float))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "isotropy": self.isotropy_label,
            "r": self.r,
            "lambda": self.lam,
            "alpha": self.alpha,
            "xi": self.xi,
            "coords": np.asarray(self.coords, float).tolist(),
            "admissible": self.admissible,
            "relative_period": self.relative_period,
            "trust_radius": self.trust_radius,
            "within_trust_region": bool(self.r <= self.trust_radius),
            **({"meta": self.meta} if self.meta else {}),
        }


# O(2) x S1 ------------------------------------------------------------------------


def _check_ab(a: float, b: float, tol: float = 1e-12):
    scale = max(1.0, abs(a), abs(b))
    if abs(a) < tol * scale or abs(b) < tol * scale or abs(a - b) < tol * scale:
        raise HopfError(DEGENERATE_COEFFICIENTS, "O(2) law needs a, b nonzero and a != b", a=a, b=b)


def o2_mixed_amplitudes(a: float, b: float, nu0: float, alpha_xi: float, r: float):
    """(|z1|^2, |z2|^2) on the circle |z1|^2 + |z2|^2 = r^2 with
    |z2|^2 - |z1|^2 = -4 nu0 alpha xi / (a - b)."""
    _check_ab(a, b)
    d = -4.0 * nu0 * alpha_xi / (a - b)
    return 0.5 * (r * r - d), 0.5 * (r * r + d)


def o2_lambda(a: float, b: float, nu0: float, sigma_p: float, alpha: float, xi: float,
              p1: float, p2: float, lambda0: float = 0.0) -> float:
    """lambda from the z1 equation: sigma' dl = -(nu0 alpha - xi)^2 - (a p1 + b p2)."""
    return lambda0 + (-(nu0 * alpha - xi) ** 2 - (a * p1 + b * p2)) / sigma_p


def o2_branches(a: float, b: float, nu0: float, sigma_p: float,
                alpha_xi: Sequence[tuple], r_values: Sequence[float],
                lambda0: float = 0.0, trust_radius: float = DEFAULT.trust_radius) -> list:
    """Mixed-mode predictions for each (alpha, xi) pair and amplitude r.

    ``xi`` is the coefficient of diag(1, -1) in J xi on (z1, z2).  Inadmissible
    points (a negative |z_j|^2) are returned with ``admissible=False``.
    """
    _check_ab(a, b)
    out = []
    for alpha, xi in alpha_xi:
        for r in r_values:
            p1, p2 = o2_mixed_amplitudes(a, b, nu0, alpha * xi, r)
            ok = p1 >= 0.0 and p2 >= 0.0
            lam = o2_lambda(a, b, nu0, sigma_p, alpha, xi, p1, p2, lambda0)
            kind = "PERIODIC" if xi == 0.0 else "RPO"
            out.append(BranchPrediction(kind, "mixed", float(r), float(lam), float(alpha), float(xi),
                                        np.array([p1, p2]), bool(ok), nu0, trust_radius))
    return out


def o2_newton_refine(equation: Callable, from_z: Callable, to_z: Callable, guess: BranchPrediction,
                     tols: Tolerances = DEFAULT):
    """Newton solve of equation(v0, lam) = 0 on real (x1, x2) with x1^2 + x2^2 = r^2.

    ``equation`` returns the V0 bifurcation vector; its (Re z1, Re z2) parts are
    the two scalar equations.  Returns (|z1|^2, |z2|^2, lam, residual).
    """
    r = guess.r
    p = np.clip(np.asarray(guess.coords, float), 0.0, None)
    x = np.array([np.sqrt(p[0]), np.sqrt(p[1]), guess.lam])

    def F(y):
        v0 = from_z(np.array([y[0], y[1]], complex))
        bz = to_z(equation(v0, y[2]))
        return np.array([bz[0].real, bz[1].real, (y[0] ** 2 + y[1] ** 2 - r * r)])

    scale = r ** 3
    for _ in range(tols.newton_maxit):
        f = F(x)
        if np.abs(f).max() < tols.newton_tol * scale:
            break
        Jm = np.zeros((3, 3))
        for k in range(3):
            h = 1e-7 * max(abs(x[k]), r)
            e = np.zeros(3)
            e[k] = h
            Jm[:, k] = (F(x + e) - F(x - e)) / (2 * h)
        dx = np.linalg.solve(Jm, -f)
        x = x + dx
        if np.abs(dx).max() < 1e-15 * max(1.0, r):
            break
    f = F(x)
    v0 = from_z(np.array([x[0], x[1]], complex))
    full = np.abs(equation(v0, x[2])).max()
    if not np.all(np.isfinite(x)) or full > 1e-8 * scale:
        raise HopfError(NEWTON_DIVERGED, "O(2) refinement did not converge", residual=float(full))
    return float(x[0] ** 2), float(x[1] ** 2), float(x[2]), float(full)


# torus case ------------------------------------------------------------------------


def torus_delta(c_hat) -> np.ndarray:
    """Rows (c_hat_ij - c_hat_nj), i = 1..n-1."""
    c_hat = np.asarray(c_hat, float)
    return c_hat[:-1] - c_hat[-1]


def torus_branches(c: Sequence, c_hat, psi: Sequence[float], pi_n_values: Sequence[float],
                   rank_tol: float = 1e-12) -> list:
    """Solve 0 = psi_i^2 - psi_n^2 + sum_j (c_hat_ij - c_hat_nj) pi_j for pi_1..pi_{n-1}.

    ``c`` are the rational weight ratios; only solutions with every pi_i > 0
    are returned.
    """
    total = sum(Fraction(str(ci)) if not isinstance(ci, Fraction) else ci for ci in c)
    if total == 1:
        raise HopfError(CONDITION_VIOLATED, "sum of the weight ratios equals 1", c=[str(ci) for ci in c])
    c_hat = np.asarray(c_hat, float)
    n = c_hat.shape[0]
    psi = np.asarray(psi, float)
    D = torus_delta(c_hat)
    scale = max(1.0, np.abs(c_hat).max())
    rank = int(np.linalg.matrix_rank(D, tol=rank_tol * scale)) if D.size else 0
    if rank < n - 1:
        raise HopfError(RANK_DEFICIENT, "orbit-space matrix has rank below n-1", rank=rank, n=n)
    M = D[:, :-1]
    if n > 1 and abs(np.linalg.det(M)) < rank_tol * scale ** (n - 1):
        raise HopfError(RANK_DEFICIENT, "pi_1..pi_{n-1} not determined by pi_n", n=n)
    out = []
    for pn in pi_n_values:
        rhs = -(psi[:-1] ** 2 - psi[-1] ** 2) - D[:, -1] * pn
        pis = np.linalg.solve(M, rhs) if n > 1 else np.zeros(0)
        allpi = np.concatenate([pis, [pn]])
        if np.all(allpi > 0):
            res = float(np.abs(psi[:-1] ** 2 - psi[-1] ** 2 + D @ allpi).max()) if n > 1 else 0.0
            out.append(BranchPrediction("RPO", f"torus-{n}", float(np.sqrt(allpi.sum())), float("nan"),
                                        0.0, 0.0, allpi, True, meta={"frequencies": psi.tolist(),
                                                                      "residual": res}))
    return out


# isotropy ------------------------------------------------------------------------------


@dataclass
class IsotropyRecord:
    """Spatiotemporal subgroup H = {(k, theta(k))}: generators act on V0 as real matrices."""

    K: str
    theta_hom: str
    fixed_dim: int
    normalizer_quotient: Optional[str] = None
    generators: tuple = ()
    normalizer_generators: tuple = ()

    def __post_init__(self):
        if self.fixed_dim % 2:
            raise ValueError("fixed-point dimension must be even")
        if self.normalizer_quotient is not None and self.normalizer_quotient not in QUOTIENT_TYPES:
            raise ValueError(f"unknown quotient type {self.normalizer_quotient}")


@dataclass
class RestrictedProblem:
    basis: np.ndarray                     # columns span V0^H
    group_generators: list                # restrictions of normalizer generators
    momenta: dict                         # restricted quadratic forms (Hessians)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def fixed_space(generators, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the common fixed space of real matrices."""
    if not generators:
        return np.eye(dim)
    K = np.vstack([np.asarray(g, float) - np.eye(dim) for g in generators])
    _, s, vt = np.linalg.svd(K)
    return vt[int(np.sum(s > tol)):].T


def fixed_point_restriction(dim: int, H: IsotropyRecord, momenta: Optional[dict] = None,
                            tol: float = 1e-10) -> RestrictedProblem:
    """Restrict to V0^H: basis, normalizer action and momentum Hessians."""
    B = fixed_space(H.generators, dim, tol)
    if B.shape[1] != H.fixed_dim or B.shape[1] == 0:
        raise HopfError(NOT_ISOTROPY, "fixed-point space does not match the isotropy record",
                        expected=H.fixed_dim, found=int(B.shape[1]))
    gens = []
    for g in H.normalizer_generators:
        g = np.asarray(g, float)
        img = g @ B
        # normalizer elements must preserve the fixed space
        if np.abs(img - B @ (B.T @ img)).max() > 1e-8:
            raise HopfError(NOT_ISOTROPY, "normalizer generator does not preserve the fixed space")
        gens.append(B.T @ img)
    mom = {k: B.T @ np.asarray(M, float) @ B for k, M in (momenta or {}).items()}
    return RestrictedProblem(B, gens, mom)


def maximal_isotropy_count(l, quotient: str) -> int:
    """Lower bound on the number of branches for a maximal isotropy subgroup.

    ``l`` is dim V0^H or a basis (columns) of V0^H.  The bound is the Euler
    characteristic of the unit sphere quotient: CP^{k-1} for S1, CP^{k-1}/Z2
    (free) for S1 x| Z2 and HP^{k-1} for SU(2).
    """
    if not isinstance(l, (int, np.integer)):
        l = int(np.linalg.matrix_rank(np.asarray(l, float)))
    l = int(l)
    if l <= 0:
        raise HopfError(PARITY_VIOLATION, "fixed-point dimension must be positive", l=l)
    if quotient == "S1_TRIVIAL":
        if l % 2:
            raise HopfError(PARITY_VIOLATION, "complex fixed space needs even dimension", l=l)
        k = l // 2
        return k                                   # chi(CP^{k-1}) = k
    if quotient == "S1_Z2":
        if l % 4:
            raise HopfError(PARITY_VIOLATION, "free Z2 quotient needs dimension divisible by 4", l=l)
        k = l // 2
        return k // 2                              # chi(M / Gamma) = chi(M) / |Gamma|
    if quotient == "SU2":
        if l % 4:
            raise HopfError(PARITY_VIOLATION, "quaternionic fixed space needs dimension divisible by 4", l=l)
        return l // 4                              # chi(HP^{k-1}) = k
    raise ValueError(f"unknown quotient type {quotient}")


# generic sphere-field zero -------------------------------------------------------------


def principal_branch_point(R, u0, r: float, alpha: float, xi, xi_scalar: float = 0.0,
                           label: str = "sphere", tols: Tolerances = DEFAULT,
                           zero_tol: float = 1e-10) -> BranchPrediction:
    """Branch point at r u0 from the principal part: lambda from the polar solve,
    admissible when u0 is a zero of the sphere field."""
    from .reduction import BifPoint, principal_part_B, solve_lambda

    u0 = np.asarray(u0, float)
    u0 = u0 / np.linalg.norm(u0)
    lam = solve_lambda(R, r, u0, alpha, xi, tols)
    G = principal_part_B(R, BifPoint.make(r * u0, alpha, lam, xi))
    g_norm = float(np.linalg.norm(G))
    kind = "PERIODIC" if np.abs(np.asarray(xi, float)).max() == 0.0 else "RPO"
    return BranchPrediction(kind, label, float(r), float(lam), float(alpha), float(xi_scalar),
                            r * u0, g_norm <= zero_tol * max(r ** 3, 1e-300) + zero_tol, R.nu0,
                            tols.trust_radius, meta={"sphere_field_norm": g_norm})
