"""Linear Hamiltonian algebra.

Symplectic forms, infinitesimally symplectic maps, the Jordan-Chevalley
splitting, resonance subspaces, the induced circle action and its momentum
map, and the invariance checks for a linear symmetry group.

Conventions: ``omega(u, v) = u^T W v`` for the form matrix ``W``; the
Hamiltonian vector field of ``h`` is ``X_h = P grad h`` with the Poisson
matrix ``P = -W^{-1}``; a quadratic ``1/2 v^T M v`` has linear field
``A = P M`` and conversely ``M = sym(A^T W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    CLUSTER_AMBIGUITY,
    DIMENSION_MISMATCH,
    NOT_HAMILTONIAN,
    NOT_RESONANT,
    HopfError,
)
from .tolerances import DEFAULT, Tolerances


def standard_J(dim: int) -> np.ndarray:
    """J = [[0, -I], [I, 0]] of size dim (dim even)."""
    if dim % 2:
        raise HopfError(DIMENSION_MISMATCH, "J needs an even dimension")
    n = dim // 2
    J = np.zeros((dim, dim))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


@dataclass(frozen=True)
class SymplecticForm:
    """Nondegenerate antisymmetric bilinear form, stored as a matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", W)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] % 2:
            raise HopfError(DIMENSION_MISMATCH, "form must be square with even size")
        scale = max(1.0, np.abs(W).max())
        if np.abs(W + W.T).max() > 1e-12 * scale:
            raise HopfError(DIMENSION_MISMATCH, "form is not antisymmetric")
        if abs(np.linalg.det(W)) < 1e-14 * scale ** W.shape[0]:
            raise HopfError(DIMENSION_MISMATCH, "form is degenerate")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def poisson(self) -> np.ndarray:
        return -np.linalg.inv(self.matrix)

    def __call__(self, u, v) -> float:
        return float(np.asarray(u) @ self.matrix @ np.asarray(v))


def _form_matrix(omega) -> np.ndarray:
    return omega.matrix if isinstance(omega, SymplecticForm) else np.asarray(omega, dtype=float)


def check_infinitesimally_symplectic(A, omega, tol: Optional[float] = None):
    """Return ``(ok, residual)`` with residual ``||A^T W + W A||_inf``.

    The test is relative: ``residual < tol * max(1, ||A||)``.
    """
    A = np.asarray(A, dtype=float)
    W = _form_matrix(omega)
    if A.ndim != 2 or A.shape != W.shape:
        raise HopfError(DIMENSION_MISMATCH, f"A {A.shape} vs form {W.shape}")
    tol = DEFAULT.symplectic_tol if tol is None else tol
    res = float(np.abs(A.T @ W + W @ A).max())
    scale = max(1.0, float(np.abs(A).max()))
    return res < tol * scale, res


def quadratic_hamiltonian(A, omega, tol: Optional[float] = None) -> np.ndarray:
    """Symmetric M with Q_A(v) = 1/2 omega(Av, v) = 1/2 v^T M v."""
    ok, res = check_infinitesimally_symplectic(A, omega, tol)
    if not ok:
        raise HopfError(NOT_HAMILTONIAN, "map is not infinitesimally symplectic", residual=res)
    M = np.asarray(A, dtype=float).T @ _form_matrix(omega)
    return 0.5 * (M + M.T)


def hamiltonian_matrix(M, omega) -> np.ndarray:
    """Linear vector field of the quadratic 1/2 v^T M v."""
    W = _form_matrix(omega)
    return -np.linalg.solve(W, np.asarray(M, dtype=float))


# Jordan-Chevalley ---------------------------------------------------------


@dataclass(frozen=True)
class JordanChevalley:
    semisimple: np.ndarray
    nilpotent: np.ndarray
    eigenvalues: np.ndarray          # cluster means
    multiplicities: np.ndarray
    projectors: tuple                # complex spectral projectors per cluster

    def residuals(self, A) -> dict:
        A = np.asarray(A, dtype=float)
        S, N = self.semisimple, self.nilpotent
        nrm = max(np.linalg.norm(A, 2), 1e-300)
        Np = np.linalg.matrix_power(N, A.shape[0])
        return {
            "reconstruction": float(np.linalg.norm(S + N - A, 2) / nrm),
            "commutator": float(np.linalg.norm(S @ N - N @ S, 2) / nrm**2),
            "nilpotency": float(np.linalg.norm(Np, 2) / nrm ** A.shape[0]),
        }


def cluster_eigenvalues(evals: np.ndarray, tol: float):
    """Single-linkage clusters of eigenvalues closer than `tol`.

    Raises CLUSTER_AMBIGUITY if two distinct clusters come within 2*tol.
    """
    n = evals.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(evals[i] - evals[j]) < tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = sorted(groups.values(), key=lambda g: (np.mean(evals[g]).imag, np.mean(evals[g]).real))
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            gap = np.min(np.abs(evals[clusters[a]][:, None] - evals[clusters[b]][None, :]))
            if gap < 2 * tol:
                raise HopfError(
                    CLUSTER_AMBIGUITY,
                    "eigenvalue clusters are closer than twice the clustering tolerance",
                    gap=float(gap),
                    tol=tol,
                )
    return clusters


def jordan_chevalley(A, tols: Tolerances = DEFAULT) -> JordanChevalley:
    """Semisimple + nilpotent splitting via clustered spectral projectors.

    Each cluster's generalized eigenspace is the null space of
    ``(A - mean I)^m`` with ``m`` the cluster size; the projectors come from
    the (well-conditioned) matrix of all such bases.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    nrm = np.linalg.norm(A, 2)
    if nrm == 0.0:
        z = np.zeros_like(A)
        return JordanChevalley(z, z.copy(), np.zeros(1, complex), np.array([d]), (np.eye(d, dtype=complex),))
    evals = np.linalg.eigvals(A)
    clusters = cluster_eigenvalues(evals, tols.cluster_rel * nrm)
    means, mults, bases = [], [], []
    I = np.eye(d)
    for g in clusters:
        mu = np.mean(evals[g])
        m = len(g)
        N = np.linalg.matrix_power(A - mu * I, m)
        _, _, vh = np.linalg.svd(N)
        bases.append(vh[-m:].conj().T)
        means.append(mu)
        mults.append(m)
    X = np.hstack(bases)
    Y = np.linalg.inv(X)
    projectors = []
    S = np.zeros((d, d), dtype=complex)
    start = 0
    for mu, m, Xc in zip(means, mults, bases):
        Pc = Xc @ Y[start : start + m]
        projectors.append(Pc)
        S += mu * Pc
        start += m
    S_real = S.real
    return JordanChevalley(S_real, A - S_real, np.array(means), np.array(mults), tuple(projectors))


# resonance space ----------------------------------------------------------


@dataclass(frozen=True)
class ResonanceData:
    basis: np.ndarray                 # ambient columns (orthonormal) spanning U
    nu0: float
    period: float
    a_restricted: np.ndarray
    a_s_restricted: np.ndarray
    a_n_restricted: np.ndarray
    omega_restricted: np.ndarray
    kmax: int
    ambient_a: np.ndarray
    ambient_a_s: np.ndarray
    ambient_a_n: np.ndarray
    ambient_omega: np.ndarray
    harmonics: tuple = ()             # k values present in U

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def properties(self) -> dict:
        """Residuals for the defining properties of the resonance space."""
        T = self.period
        flow = expm(self.a_s_restricted * T)
        W = self.omega_restricted
        sv = np.linalg.svd(W, compute_uv=False)
        return {
            "kernel_identity": float(np.abs(flow - np.eye(self.dim)).max()),
            "invariance": float(np.abs((np.eye(self.basis.shape[0]) - self.basis @ self.basis.T)
                                       @ self.ambient_a @ self.basis).max()),
            "omega_min_singular": float(sv.min()) if sv.size else 0.0,
            "dim_even": self.dim % 2 == 0,
        }


def resonance_space(A, nu0: float, omega, tols: Tolerances = DEFAULT) -> ResonanceData:
    """Sum of generalized eigenspaces for eigenvalues +-i k nu0, 1 <= k <= kmax."""
    A = np.asarray(A, dtype=float)
    W = _form_matrix(omega)
    if A.shape != W.shape:
        raise HopfError(DIMENSION_MISMATCH, "A and omega differ in size")
    nu0 = float(nu0)
    if nu0 <= 0:
        raise HopfError(NOT_RESONANT, "nu0 must be positive")
    jc = jordan_chevalley(A, tols)
    nrm = np.linalg.norm(A, 2)
    stol = tols.spectral_rel * max(nrm, 1e-300)
    kmax = tols.kmax or int(math.ceil(nrm / nu0)) + 1
    if not np.any(np.abs(np.abs(jc.eigenvalues.imag) - nu0) + np.abs(jc.eigenvalues.real) < stol):
        raise HopfError(NOT_RESONANT, f"+-i*{nu0} is not an eigenvalue", eigenvalues=jc.eigenvalues)
    d = A.shape[0]
    P_U = np.zeros((d, d), dtype=complex)
    ks = set()
    for mu, Pc in zip(jc.eigenvalues, jc.projectors):
        for k in range(1, kmax + 1):
            if abs(mu - 1j * k * nu0) < stol or abs(mu + 1j * k * nu0) < stol:
                P_U += Pc
                ks.add(k)
                break
    P_U = P_U.real
    rank = int(round(np.trace(P_U)))
    if rank == 0:
        raise HopfError(NOT_RESONANT, "resonance space is trivial")
    if rank == d:
        B = np.eye(d)                      # whole space: keep the given coordinates exactly
    else:
        u, _, _ = np.linalg.svd(P_U)
        B = u[:, :rank]
    return ResonanceData(
        basis=B,
        nu0=nu0,
        period=2 * math.pi / nu0,
        a_restricted=B.T @ A @ B,
        a_s_restricted=B.T @ jc.semisimple @ B,
        a_n_restricted=B.T @ jc.nilpotent @ B,
        omega_restricted=B.T @ W @ B,
        kmax=kmax,
        ambient_a=A,
        ambient_a_s=jc.semisimple,
        ambient_a_n=jc.nilpotent,
        ambient_omega=W,
        harmonics=tuple(sorted(ks)),
    )


def s1_action(R: ResonanceData, theta: float) -> np.ndarray:
    """Psi_theta = exp((theta/nu0) A_s) on U, in the basis of U."""
    return expm((theta / R.nu0) * R.a_s_restricted)


def momentum_map_J(R: ResonanceData, v) -> float:
    """J(v) = (1/(2 nu0)) omega_U(A_s v, v), v in U coordinates."""
    v = np.asarray(v, dtype=float)
    return float((R.a_s_restricted @ v) @ R.omega_restricted @ v) / (2 * R.nu0)


def momentum_hessian(R: ResonanceData) -> np.ndarray:
    M = R.a_s_restricted.T @ R.omega_restricted / R.nu0
    return 0.5 * (M + M.T)


# groups --------------------------------------------------------------------


@dataclass(frozen=True)
class GroupData:
    """Linear symmetry data acting on the ambient phase space."""

    finite_generators: tuple = ()
    algebra_generators: tuple = ()
    structure_tags: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "finite_generators", tuple(np.asarray(g, float) for g in self.finite_generators))
        object.__setattr__(self, "algebra_generators", tuple(np.asarray(x, float) for x in self.algebra_generators))

    def validate(self, omega, tol: float = 1e-10) -> dict:
        W = _form_matrix(omega)
        out = {"finite": [], "algebra": []}
        for g in self.finite_generators:
            out["finite"].append(float(np.abs(g.T @ W @ g - W).max()))
        for x in self.algebra_generators:
            out["algebra"].append(check_infinitesimally_symplectic(x, W)[1])
        out["ok"] = all(r < tol for r in out["finite"] + out["algebra"])
        return out


def verify_equivariance(R: ResonanceData, G: GroupData, thetas: Sequence[float] | None = None,
                        tol: float = 1e-8) -> dict:
    """Residuals of the commuting/invariance properties of G with A_s, A_n, U, Psi."""
    if thetas is None:
        thetas = np.linspace(0.0, 2 * math.pi, 7)[1:-1]
    B = R.basis
    d = B.shape[0]
    comp = np.eye(d) - B @ B.T
    S, N = R.ambient_a_s, R.ambient_a_n
    scale = max(1.0, np.abs(R.ambient_a).max())
    checks = []

    def add(name, val):
        checks.append({"check": name, "residual": float(val), "pass": bool(val < tol * scale)})

    for i, g in enumerate(G.finite_generators):
        gi = np.linalg.inv(g)
        add(f"g{i}:A_s", np.abs(g @ S @ gi - S).max())
        add(f"g{i}:A_n", np.abs(g @ N @ gi - N).max())
        add(f"g{i}:U", np.abs(comp @ g @ B).max())
        gU = B.T @ g @ B
        for th in thetas:
            P = s1_action(R, th)
            add(f"g{i}:Psi({th:.3f})", np.abs(gU @ P - P @ gU).max())
    for i, x in enumerate(G.algebra_generators):
        add(f"xi{i}:A_s", np.abs(x @ S - S @ x).max())
        add(f"xi{i}:A_n", np.abs(x @ N - N @ x).max())
        add(f"xi{i}:U", np.abs(comp @ x @ B).max())
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}
