"""Equivariant Williamson frame for the 1:-1 resonance.

In frame coordinates the restricted linearization and form read

    A = [[nu0 J, I], [0, nu0 J]],   omega = +J_4n (PLUS) or -J_4n (MINUS),

and every symmetry acts as ``diag(A_g, A_g)`` with ``A_g`` orthogonal and
commuting with ``J``.  For the MINUS case the downstream modules work with
the oriented pair ``(-omega, -h)``, which has the same vector field and the
PLUS normal form; ``CanonicalFrame.sign`` records the orientation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import BLOCK_STRUCTURE_VIOLATION, H3_VIOLATION, NONCONVERGENT, HopfError
from .linear_core import GroupData, ResonanceData, s1_action, standard_J
from .tolerances import DEFAULT, Tolerances


def canonical_pair(n: int, nu0: float = 1.0, case: str = "PLUS"):
    """(A, omega) of the canonical 1:-1 form in dimension 4n."""
    J = standard_J(2 * n)
    I = np.eye(2 * n)
    A = np.block([[nu0 * J, I], [np.zeros_like(I), nu0 * J]])
    W = standard_J(4 * n) * (1.0 if case == "PLUS" else -1.0)
    return A, W


def canonical_hessian(n: int, nu0: float = 1.0) -> np.ndarray:
    """d^2 h at the bifurcation point in the PLUS frame: [[0, nu0 J], [-nu0 J, -I]]."""
    J = standard_J(2 * n)
    return np.block([[np.zeros_like(J), nu0 * J], [-nu0 * J, -np.eye(2 * n)]])


@dataclass(frozen=True)
class CanonicalFrame:
    basis: np.ndarray          # frame vectors in U coordinates (columns)
    n: int
    case: str                  # "PLUS" or "MINUS"
    nu0: float
    resonance: ResonanceData
    residuals: dict

    @property
    def sign(self) -> float:
        return 1.0 if self.case == "PLUS" else -1.0

    @property
    def ambient_basis(self) -> np.ndarray:
        return self.resonance.basis @ self.basis

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    def to_frame(self, M_ambient) -> np.ndarray:
        """Linear map on the ambient space, expressed in frame coordinates."""
        B = self.resonance.basis
        return self.inverse @ B.T @ np.asarray(M_ambient, float) @ B @ self.basis

    def coords(self, v_ambient) -> np.ndarray:
        return self.inverse @ (self.resonance.basis.T @ np.asarray(v_ambient, float))

    def vector(self, x_frame) -> np.ndarray:
        return self.ambient_basis @ np.asarray(x_frame, float)

    def hessian_in_frame(self, H_ambient) -> np.ndarray:
        """Oriented Hessian sign * S^T H S (accumulated in extended precision)."""
        ld = np.longdouble
        S = self.resonance.basis.astype(ld) @ self.basis.astype(ld)
        M = (S.T @ np.asarray(H_ambient, float).astype(ld) @ S).astype(float) * self.sign
        return 0.5 * (M + M.T)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "case": self.case,
            "nu0": self.nu0,
            "basis": self.basis.tolist(),
            "residuals": self.residuals,
        }


def _invariant_gram(R: ResonanceData, samples: int = 8) -> np.ndarray:
    """Euclidean inner product of U averaged over the circle action (exact)."""
    G = np.zeros((R.dim, R.dim))
    for th in 2 * np.pi * np.arange(samples) / samples:
        P = s1_action(R, th)
        G += P.T @ P
    return G / samples


def frame_residuals(A, W, S, n, nu0, sign) -> dict:
    Acan, Wcan = canonical_pair(n, nu0, "PLUS")
    Si = np.linalg.inv(S)
    return {
        "A": float(np.abs(Si @ A @ S - Acan).max()),
        "omega": float(np.abs(sign * (S.T @ W @ S) - Wcan).max()),
    }


def _refine(A, W, S, n, nu0, sign):
    """One Newton step on A S = S A_can, S^T W S = sign J with extended-precision residuals.

    Near a defective eigenvalue double-precision frames carry O(eps) errors that
    the closed-form spectrum amplifies to O(sqrt(eps)); the correction removes them.
    """
    ld = np.longdouble
    Acan, Jcan = canonical_pair(n, nu0, "PLUS")
    Al, Wl, Sl = A.astype(ld), W.astype(ld), S.astype(ld)
    E = Al @ Sl - Sl @ Acan.astype(ld)
    Fr = sign * (Sl.T @ Wl @ Sl) - Jcan.astype(ld)
    d, m = S.shape
    rows = []
    for k in range(d * m):
        D = np.zeros((d, m))
        D.flat[k] = 1.0
        r1 = A @ D - D @ Acan
        r2 = sign * (D.T @ W @ S + S.T @ W @ D)
        rows.append(np.concatenate([r1.ravel(), r2.ravel()]))
    Lmat = np.array(rows).T
    rhs = -np.concatenate([E.astype(float).ravel(), Fr.astype(float).ravel()])
    dS = np.linalg.lstsq(Lmat, rhs, rcond=None)[0].reshape(d, m)
    return (Sl + dS.astype(ld)).astype(float)


def williamson_frame(R: ResonanceData, G: GroupData | None = None,
                     tols: Tolerances = DEFAULT) -> CanonicalFrame:
    """Construct the frame; raises H3_VIOLATION off the generic 2-block case."""
    A, As, An, W = R.a_restricted, R.a_s_restricted, R.a_n_restricted, R.omega_restricted
    d = R.dim
    nu = R.nu0
    scale = max(1.0, np.abs(A).max())
    if d % 4 or R.harmonics != (1,):
        raise HopfError(H3_VIOLATION, "resonance space must be 4n-dimensional with only +-i nu0",
                        dim=d, harmonics=list(R.harmonics))
    n = d // 4
    if np.abs(As @ As + nu**2 * np.eye(d)).max() > 1e-7 * scale**2:
        raise HopfError(H3_VIOLATION, "semisimple part is not nu0 times a complex structure")
    if np.abs(An @ An).max() > 1e-7 * scale**2:
        raise HopfError(H3_VIOLATION, "Jordan blocks larger than 2x2")
    K = null_space(An, rcond=1e-7)
    if K.shape[1] != 2 * n:
        raise HopfError(H3_VIOLATION, "nilpotent part must have rank 2n", kernel_dim=K.shape[1])

    Gm = _invariant_gram(R)
    C = null_space(K.T @ Gm)                  # invariant complement of V0 = ker A_n
    E = An @ C
    b = E.T @ W @ C
    b = 0.5 * (b + b.T)
    ev = np.linalg.eigvalsh(b)
    if not (np.all(ev > 0) or np.all(ev < 0)):
        raise HopfError(H3_VIOLATION, "indefinite pairing on the complement; not a 1:-1 collision",
                        eigenvalues=ev.tolist())
    s = 1.0 if ev[0] > 0 else -1.0
    Wc = C.T @ W @ C
    C = C + E @ (0.5 * np.linalg.solve(b, Wc))   # make the complement Lagrangian

    bh = s * b  # positive definite pairing on the complement, in C coordinates
    KC = np.hstack([K, C])
    Cinv_rows = np.linalg.solve(KC, np.eye(d))[2 * n:]
    F, JF = [], []
    for k in range(d):
        c = Cinv_rows[:, k]                       # candidate: projection of e_k, in C coords
        for f, jf in zip(F, JF):
            c = c - (c @ bh @ f) * f - (c @ bh @ jf) * jf
        nrm2 = c @ bh @ c
        if nrm2 <= 1e-10:
            continue
        f = c / np.sqrt(nrm2)
        jf = np.linalg.solve(C.T @ C, C.T @ (As @ (C @ f))) / nu
        F.append(f)
        JF.append(jf)
        if len(F) == n:
            break
    if len(F) != n:
        raise HopfError(NONCONVERGENT, "symplectic Gram-Schmidt did not produce n pairs")
    Fmat = C @ np.column_stack(F + JF)
    S = np.hstack([An @ Fmat, Fmat])
    case = "PLUS" if s < 0 else "MINUS"
    sign = 1.0 if case == "PLUS" else -1.0
    for _ in range(2):
        S = _refine(A, W, S, n, nu, sign)
    res = frame_residuals(A, W, S, n, nu, sign)
    if res["A"] > tols.frame_tol * max(1.0, nu) * 1e2 or res["omega"] > tols.frame_tol * 1e2:
        raise HopfError(NONCONVERGENT, "frame residuals too large", **res)
    frame = CanonicalFrame(basis=S, n=n, case=case, nu0=nu, resonance=R, residuals=res)
    if G is not None:
        blocks = {}
        for i, g in enumerate(G.finite_generators):
            blocks[f"g{i}"] = float(block_residual(frame.to_frame(g), n))
        frame.residuals["group_blocks"] = blocks
    return frame


@dataclass(frozen=True)
class Splitting:
    v0_basis: np.ndarray
    v1_basis: np.ndarray
    projection_P: np.ndarray
    L_matrix: np.ndarray


def split_v0_v1(F: CanonicalFrame) -> Splitting:
    """V0 = ker L, V1 = Im L for L = d^2(h - J^nu0)(0) in the oriented frame."""
    R = F.resonance
    S = F.basis
    Si = np.linalg.inv(S)
    W = F.sign * (S.T @ R.omega_restricted @ S)
    An = Si @ R.a_n_restricted @ S
    L = An.T @ W
    L = 0.5 * (L + L.T)
    d = S.shape[0]
    m = 2 * F.n
    P = np.zeros((d, d))
    P[:m, :m] = np.eye(m)
    return Splitting(np.eye(d)[:, :m], np.eye(d)[:, m:], P, L)


def block_residual(g_frame, n: int) -> float:
    g = np.asarray(g_frame, float)
    m = 2 * n
    Ag = g[:m, :m]
    return max(np.abs(g[:m, m:]).max(), np.abs(g[m:, :m]).max(), np.abs(g[m:, m:] - Ag).max())


def check_block_action(F: CanonicalFrame, g_frame, tol: float | None = None) -> np.ndarray:
    """Return A_g for g = diag(A_g, A_g) (frame coordinates), else raise."""
    tol = DEFAULT.block_tol if tol is None else tol
    g = np.asarray(g_frame, float)
    m = 2 * F.n
    Ag = g[:m, :m]
    J = standard_J(m)
    res = {
        "block": block_residual(g, F.n),
        "orthogonal": float(np.abs(Ag.T @ Ag - np.eye(m)).max()),
        "commutes_J": float(np.abs(Ag @ J - J @ Ag).max()),
    }
    if max(res.values()) > tol:
        raise HopfError(BLOCK_STRUCTURE_VIOLATION, "element does not act as diag(A_g, A_g)", **res)
    return Ag
