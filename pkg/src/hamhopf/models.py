"""Built-in systems: two charged oscillators in a magnetic field, and the
five-dimensional SO(3) representation on symmetric traceless matrices.

Oscillator coordinates are ordered (q1, q3, q2, q4, p1, p3, p2, p4) and the
form is omega = dq ^ dp, i.e. W = [[0, I], [-I, 0]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .canonical import CanonicalFrame, check_block_action
from .errors import FRAME_MISMATCH, INVALID_ROTATION, NOT_INVARIANT, HopfError
from .linear_core import GroupData, standard_J
from .normalform import HamiltonianFamily, invariance_residual
from .polynomial import Poly, PolyJet

# coupled oscillators ------------------------------------------------------------

Q1, Q3, Q2, Q4, P1, P3, P2, P4 = range(8)
INVARIANT_NAMES = ("pi1_1", "pi1_2", "pi2_1", "pi2_2", "pi3_1", "pi3_2", "pi4_1", "pi4_2")


def _x(i: int) -> Poly:
    return Poly.variable(8, i)


def oscillator_invariants() -> Dict[str, Poly]:
    """Quadratic invariants pi_k^i of the rotation + reflection action (i = 1, 2)."""
    q = {1: _x(Q1), 2: _x(Q2), 3: _x(Q3), 4: _x(Q4)}
    p = {1: _x(P1), 2: _x(P2), 3: _x(P3), 4: _x(P4)}
    out = {}
    for i in (1, 2):
        j = i + 2
        out[f"pi1_{i}"] = q[i] * q[i] + q[j] * q[j]
        out[f"pi2_{i}"] = p[i] * p[i] + p[j] * p[j]
        out[f"pi3_{i}"] = p[i] * q[j] - p[j] * q[i]
        out[f"pi4_{i}"] = q[i] * p[i] + q[j] * p[j]
    return out


def default_interaction(eps: float = 0.05) -> Dict[Tuple[int, ...], float]:
    """eps (pi3_1 + pi3_2)^2 as exponents over INVARIANT_NAMES."""
    return {(0, 0, 0, 0, 2, 0, 0, 0): eps, (0, 0, 0, 0, 1, 1, 0, 0): 2 * eps,
            (0, 0, 0, 0, 0, 2, 0, 0): eps}


def split_interaction(eps1: float = 0.05, eps2: float = 0.02) -> Dict[Tuple[int, ...], float]:
    """eps1 ((pi1_1)^2 + (pi1_2)^2) + eps2 pi1_1 pi1_2; gives distinct O(2) cubic coefficients."""
    return {(2, 0, 0, 0, 0, 0, 0, 0): eps1, (0, 2, 0, 0, 0, 0, 0, 0): eps1,
            (1, 1, 0, 0, 0, 0, 0, 0): eps2}


@dataclass(frozen=True)
class OscillatorParams:
    m: float = 1.0
    gamma: float = 1.0
    k: float = 1.0
    f_coeffs: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    parameter: str = "k"          # bifurcation parameter: "k" or "gamma"

    def __post_init__(self):
        if self.parameter not in ("k", "gamma"):
            raise ValueError("parameter must be 'k' or 'gamma'")

    @property
    def k_hopf(self) -> float:
        return self.gamma ** 2 / self.m

    @property
    def gamma_hopf(self) -> float:
        return math.sqrt(self.k * self.m)

    @property
    def lambda_hopf(self) -> float:
        return self.k_hopf if self.parameter == "k" else self.gamma_hopf


def oscillator_omega() -> np.ndarray:
    return -standard_J(8)


def oscillator_K() -> Poly:
    """K = p3 q1 - q3 p1 - p2 q4 + p4 q2, momentum of the rotation action."""
    return _x(P3) * _x(Q1) - _x(Q3) * _x(P1) - _x(P2) * _x(Q4) + _x(P4) * _x(Q2)


def oscillator_rotation(phi: float) -> np.ndarray:
    """Lifted rotation of the (q1,q3) and (q2,q4) planes."""
    c, s = math.cos(phi), math.sin(phi)
    R = np.array([[c, -s], [s, c]])
    Z = np.zeros((2, 2))
    Rq = np.block([[R, Z], [Z, R]])
    return np.block([[Rq, np.zeros((4, 4))], [np.zeros((4, 4)), Rq]])


def oscillator_reflection() -> np.ndarray:
    """tau: (q3, q4, p3, p4) -> -(q3, q4, p3, p4)."""
    return np.diag([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


def oscillator_linearization(p: OscillatorParams, k: Optional[float] = None) -> np.ndarray:
    k = p.k if k is None else k
    J4 = standard_J(4)
    I4 = np.eye(4)
    g = p.gamma / p.m
    return np.block([[-g * J4, I4 / p.m], [(k - p.gamma ** 2 / p.m) * I4, -g * J4]])


def oscillator_eigenvalues(p: OscillatorParams, k: Optional[float] = None) -> np.ndarray:
    """Closed form +-(1/m) sqrt(km - 2 gamma^2 +- 2 gamma sqrt(gamma^2 - km))."""
    k = p.k if k is None else k
    m, g = p.m, p.gamma
    inner = np.sqrt(complex(g * g - k * m))
    out = []
    for s in (1, -1):
        mu = np.sqrt(complex(k * m - 2 * g * g + s * 2 * g * inner)) / m
        out.extend([mu, -mu])
    return np.array(out)


def coupled_oscillator_family(p: OscillatorParams = OscillatorParams(),
                              check: bool = True) -> HamiltonianFamily:
    """Family in lam := k (or lam := gamma), degree <= 4 (f must be a quadratic form in the invariants)."""
    m, g = p.m, p.gamma
    q = [_x(i) for i in (Q1, Q3, Q2, Q4)]
    pp = [_x(i) for i in (P1, P3, P2, P4)]
    kin = sum((x * x for x in pp), Poly(8)).scale(1 / (2 * m))
    qsq = sum((x * x for x in q), Poly(8))
    mag = (_x(P1) * _x(Q2) - _x(P2) * _x(Q1) + _x(P3) * _x(Q4) - _x(P4) * _x(Q3)).scale(1 / m)
    inv = oscillator_invariants()
    f = Poly(8)
    for e, c in p.f_coeffs.items():
        term = Poly(8, {(0,) * 8: float(c)})
        for name, k in zip(INVARIANT_NAMES, e):
            if k:
                term = term * inv[name] ** k
        f = f + term
    if f.terms and (min(f.degrees()) < 4 or max(f.degrees()) > 4):
        raise ValueError("interaction must be quartic in phase space (quadratic in invariants)")
    if p.parameter == "k":
        jet = PolyJet.from_polys([kin + qsq.scale(g * g / (2 * m)) + mag.scale(g) + f, qsq.scale(-0.5)])
    else:
        jet = PolyJet.from_polys([kin + qsq.scale(-0.5 * p.k) + f, mag, qsq.scale(1 / (2 * m))])
    W = oscillator_omega()
    K = oscillator_K()
    xi = -np.linalg.inv(W) @ K.quadratic_matrix()
    G = GroupData(
        finite_generators=(oscillator_reflection(), oscillator_rotation(0.7)),
        algebra_generators=(xi,),
        structure_tags=("O(2)", "torus_rank=1"),
        names=("tau", "rotation(0.7)"),
    )
    fam = HamiltonianFamily(jet=jet, omega=W, group=G, momenta={"K": K},
                            name="coupled_oscillator", lambda0=p.lambda_hopf,
                            meta={"m": m, "gamma": g, "k": p.k, "parameter": p.parameter, "f": {str(list(e)): c for e, c in p.f_coeffs.items()}})
    if check:
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 8))
        h = jet.at(p.k if p.parameter == "k" else g)
        worst = max(invariance_residual(h, gm, X) for gm in G.finite_generators)
        if worst > 1e-10:
            raise HopfError(NOT_INVARIANT, "interaction is not invariant", residual=worst)
    return fam


# complex coordinates on V0 for the O(2) x S1 case ---------------------------------


@dataclass(frozen=True)
class ComplexFrameO2:
    """z = Z x0 on V0 (frame coordinates), normalized so |z1|^2 + |z2|^2 = |x0|^2."""

    Z: np.ndarray                  # 2 x 2n complex
    weights_rotation: tuple        # (w1, w2): rotation acts as exp(i w phi)
    weights_s1: tuple              # circle action weights
    xi_sign: float                 # J xi acts as xi_sign * xi * diag(1, -1) on z
    rotation_generator: np.ndarray # 2n x 2n block of the rotation generator
    residuals: dict

    def to_z(self, x0) -> np.ndarray:
        return self.Z @ np.asarray(x0, float)

    def from_z(self, z) -> np.ndarray:
        z = np.asarray(z, complex)
        R = np.vstack([self.Z.real, self.Z.imag])
        return np.linalg.solve(R, np.concatenate([z.real, z.imag]))


def complex_frame_o2(F: CanonicalFrame, family: Optional[HamiltonianFamily] = None,
                     tol: float = 1e-8) -> ComplexFrameO2:
    """Complex coordinates z1 = q1+q4+i(q2-q3), z2 = q1-q4+i(q2+q3) on V0, in frame units."""
    if F.n != 2 or F.resonance.basis.shape[0] != 8:
        raise HopfError(FRAME_MISMATCH, "expects the 8-dimensional oscillator frame")
    E = F.ambient_basis[:, :4]
    if np.abs(E[4:]).max() > tol:
        raise HopfError(FRAME_MISMATCH, "V0 is not the configuration subspace")
    Eq = E[:4]                                    # (q1,q3,q2,q4) components of e_j
    c2 = np.diag(Eq.T @ Eq)
    if np.abs(Eq.T @ Eq - c2.mean() * np.eye(4)).max() > tol * max(1.0, c2.mean()):
        raise HopfError(FRAME_MISMATCH, "frame inner product on V0 is not Euclidean up to scale")
    c = math.sqrt(c2.mean())
    Mq = np.array([[1, -1j, 1j, 1], [1, 1j, 1j, -1]], complex)
    Z = Mq @ Eq / (math.sqrt(2) * c)
    R = np.vstack([Z.real, Z.imag])
    Rinv = np.linalg.inv(R)

    def as_z_matrix(X):
        """Complex-linear matrix D with Z X x = D Z x, or raise."""
        Y = (Z @ X) @ Rinv                          # maps (Re z, Im z) -> z
        if np.abs(Y[:, 2:] - 1j * Y[:, :2]).max() > tol:
            raise HopfError(FRAME_MISMATCH, "map is not complex linear in z")
        return Y[:, :2]

    xi_amb = oscillator_rotation_generator()
    Xfr = F.to_frame(xi_amb)
    Xrot = Xfr[:4, :4]
    D_rot = as_z_matrix(Xrot)
    As = F.nu0 * standard_J(4)
    D_s1 = as_z_matrix(As / F.nu0)
    tau_fr = F.to_frame(oscillator_reflection())
    Atau = check_block_action(F, tau_fr)
    Ztau = Z @ Atau
    swap = np.array([[0, 1], [1, 0]])
    res = {
        "rotation_diag": float(abs(D_rot[0, 1]) + abs(D_rot[1, 0])),
        "s1_diag": float(abs(D_s1[0, 1]) + abs(D_s1[1, 0])),
        "tau_swap": float(np.abs(Ztau - swap @ Z).max()),
    }
    if res["rotation_diag"] > tol or res["s1_diag"] > tol:
        raise HopfError(FRAME_MISMATCH, "actions are not diagonal in z", **res)
    if res["tau_swap"] > tol:
        raise HopfError(FRAME_MISMATCH, "reflection does not swap z1 and z2", **res)
    wr = (float(D_rot[0, 0].imag), float(D_rot[1, 1].imag))
    ws = (float(D_s1[0, 0].imag), float(D_s1[1, 1].imag))
    Dj = as_z_matrix(standard_J(4) @ Xrot)
    kappa = float(Dj[0, 0].real)
    res["xi_form"] = float(abs(Dj[1, 1].real + kappa) + abs(Dj[0, 0].imag) + abs(Dj[1, 1].imag))
    return ComplexFrameO2(Z=Z, weights_rotation=wr, weights_s1=ws, xi_sign=kappa,
                          rotation_generator=Xrot, residuals=res)


def oscillator_rotation_generator() -> np.ndarray:
    W = oscillator_omega()
    return -np.linalg.inv(W) @ oscillator_K().quadratic_matrix()


def o2_cubic_coefficients(cubic, cf: ComplexFrameO2):
    """(a, b, residual) with Z C(x) = ((a|z1|^2 + b|z2|^2) z1, (a|z2|^2 + b|z1|^2) z2)."""
    def Cz(z):
        return cf.Z @ cubic(cf.from_z(np.asarray(z, complex)))

    a = Cz([1.0, 0.0])[0].real
    b = Cz([1.0, 1.0])[0].real - a
    rng = np.random.default_rng(1)
    res = 0.0
    for _ in range(8):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        p1, p2 = abs(z[0]) ** 2, abs(z[1]) ** 2
        model = np.array([(a * p1 + b * p2) * z[0], (a * p2 + b * p1) * z[1]])
        res = max(res, float(np.abs(Cz(z) - model).max() / (1 + np.abs(z).max() ** 3)))
    return float(a), float(b), res


# SO(3) on symmetric traceless 3x3 matrices ------------------------------------------


def so3_basis() -> Dict[int, np.ndarray]:
    """B_m, m in {-2,...,2}, weight m under rotation about the z-axis."""
    B = {
        0: np.diag([1.0, 1.0, -2.0]).astype(complex),
        1: np.array([[0, 0, 1], [0, 0, 1j], [1, 1j, 0]], complex),
        2: np.array([[1, 1j, 0], [1j, -1, 0], [0, 0, 0]], complex),
    }
    B[-1] = B[1].conj()
    B[-2] = B[2].conj()
    return B


def rotation_z(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def rotation_axis(axis, angle: float) -> np.ndarray:
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return expm(angle * K)


def _check_rotation(A, tol=1e-10):
    A = np.asarray(A, float)
    if A.shape != (3, 3) or np.abs(A.T @ A - np.eye(3)).max() > tol or abs(np.linalg.det(A) - 1) > tol:
        raise HopfError(INVALID_ROTATION, "matrix is not in SO(3)")
    return A


def so3_rep5(A, M) -> np.ndarray:
    """rho_A(M) = A^{-1} M A."""
    A = _check_rotation(A)
    return A.T @ np.asarray(M, complex) @ A


def so3_coordinates(M) -> Dict[int, complex]:
    """z_m with M = sum z_m B_m (B_m orthogonal under tr(X Y^H))."""
    B = so3_basis()
    M = np.asarray(M, complex)
    return {m: complex(np.trace(M @ Bm.conj().T) / np.trace(Bm @ Bm.conj().T)) for m, Bm in B.items()}


@dataclass(frozen=True)
class So3Model:
    b1: float = 1.0
    b2: float = 0.0
    b3: float = 1.0

    @property
    def B_basis(self) -> Dict[int, np.ndarray]:
        return so3_basis()


def so3_cubic(model: So3Model, M) -> np.ndarray:
    """b1 tr(M Mbar) M + b2 tr(M^2) Mbar + b3 (M^2 Mbar + Mbar M^2 - 2/3 tr(M^2 Mbar) I)."""
    M = np.asarray(M, complex)
    Mb = M.conj()
    M2 = M @ M
    return (model.b1 * np.trace(M @ Mb) * M + model.b2 * np.trace(M2) * Mb
            + model.b3 * (M2 @ Mb + Mb @ M2 - (2.0 / 3.0) * np.trace(M2 @ Mb) * np.eye(3)))


@dataclass(frozen=True)
class So3Z3Analysis:
    c_hat: np.ndarray            # 2 x 2
    delta: np.ndarray            # (c11 - c21, c12 - c22)
    rank: int
    weights: tuple               # rotation weights on (z1, z2)
    c1: float
    condition_holds: bool
    symbolic_c_hat: Optional[np.ndarray]
    paths_agree: Optional[float]

    @property
    def certified(self) -> bool:
        return self.rank == 1 and self.condition_holds

    def to_json(self) -> dict:
        return {
            "c_hat": self.c_hat.tolist(),
            "delta": self.delta.tolist(),
            "rank": self.rank,
            "weights": list(self.weights),
            "c1": self.c1,
            "condition_holds": self.condition_holds,
            "certified": self.certified,
            "paths_agree": self.paths_agree,
        }


Z3_MODES = (1, -2)


def so3_z3_numeric(model: So3Model, samples: int = 12, seed: int = 0) -> np.ndarray:
    """c_hat by least squares: component_i = (c_i1 |z1|^2 + c_i2 |z2|^2) z_i on span{B1, B-2}."""
    B = so3_basis()
    rng = np.random.default_rng(seed)
    rows = {0: [], 1: []}
    rhs = {0: [], 1: []}
    for _ in range(samples):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        M = z[0] * B[Z3_MODES[0]] + z[1] * B[Z3_MODES[1]]
        co = so3_coordinates(so3_cubic(model, M))
        p = np.abs(z) ** 2
        for i, m in enumerate(Z3_MODES):
            # real and imaginary parts of (c_i1 p1 + c_i2 p2) z_i = co[m]
            rows[i].append([p[0] * z[i].real, p[1] * z[i].real])
            rows[i].append([p[0] * z[i].imag, p[1] * z[i].imag])
            rhs[i].extend([co[m].real, co[m].imag])
    c = np.zeros((2, 2))
    for i in range(2):
        c[i] = np.linalg.lstsq(np.array(rows[i]), np.array(rhs[i]), rcond=None)[0]
    return c


def so3_z3_symbolic(model: So3Model) -> np.ndarray:
    """c_hat from an exact symbolic restriction of the cubic to span{B1, B-2}.

    z and conj(z) are independent symbols, so the result is an exact
    polynomial identity rather than a fit.
    """
    import sympy as sp

    b1, b2, b3 = (sp.nsimplify(v) for v in (model.b1, model.b2, model.b3))
    z1, z2, w1, w2 = sp.symbols("z1 z2 w1 w2")

    def smat(A):
        return sp.Matrix(3, 3, lambda i, j: sp.nsimplify(A[i, j].real) + sp.I * sp.nsimplify(A[i, j].imag))

    B = so3_basis()
    Bs = {m: smat(Bm) for m, Bm in B.items()}
    M = z1 * Bs[1] + z2 * Bs[-2]
    Mb = w1 * Bs[-1] + w2 * Bs[2]
    M2 = M * M
    C = (b1 * (M * Mb).trace() * M + b2 * M2.trace() * Mb
         + b3 * (M2 * Mb + Mb * M2 - sp.Rational(2, 3) * (M2 * Mb).trace() * sp.eye(3)))
    out = np.zeros((2, 2))
    for i, (m, zi) in enumerate(zip(Z3_MODES, (z1, z2))):
        Bm = Bs[m]
        comp = sp.expand((C * Bm.H).trace() / (Bm * Bm.H).trace())
        poly = sp.Poly(comp, z1, z2, w1, w2)
        ci1 = poly.coeff_monomial(z1 * w1 * zi)
        ci2 = poly.coeff_monomial(z2 * w2 * zi)
        if sp.expand(comp - (ci1 * z1 * w1 + ci2 * z2 * w2) * zi) != 0:
            raise HopfError(FRAME_MISMATCH, "cubic restriction is not of the expected form")
        out[i] = [float(sp.re(ci1)), float(sp.re(ci2))]
    return out


def so3_z3_analysis(model: So3Model, symbolic: bool = True, tol: float = 1e-10) -> So3Z3Analysis:
    """c_hat on V0^{Z3}, Delta_j = c_1j - c_2j, and the rank verdict."""
    c = so3_z3_numeric(model)
    sym = so3_z3_symbolic(model) if symbolic else None
    agree = float(np.abs(sym - c).max()) if sym is not None else None
    c_use = sym if sym is not None else c
    delta = c_use[0] - c_use[1]
    rank = int(np.abs(delta).max() > tol)
    w = (1, -2)
    c1 = w[1] / w[0]
    return So3Z3Analysis(c_hat=c_use, delta=delta, rank=rank, weights=w, c1=float(c1),
                         condition_holds=bool(c1 != 1), symbolic_c_hat=sym, paths_agree=agree)


@dataclass(frozen=True)
class So3IsotropyEntry:
    label: str
    generators: tuple            # ((rotation matrix, phase), ...)
    fixed_dim: int
    quotient: str
    verdict: str
    quotient_type: Optional[str] = None   # S1_TRIVIAL / S1_Z2 / SU2 for maximal entries


def _phase_fixed_space(gens, tol=1e-10) -> np.ndarray:
    """Real basis (columns, 10-dim real coords of the 5 complex z_m) of {M : e^{i t} rho_A(M) = M}."""
    B = so3_basis()
    ms = sorted(B)
    d = len(ms)

    def real_matrix(A, t):
        Mc = np.zeros((d, d), complex)
        for j, m in enumerate(ms):
            img = np.exp(1j * t) * so3_rep5(A, B[m])
            co = so3_coordinates(img)
            for i, mi in enumerate(ms):
                Mc[i, j] = co[mi]
        return np.block([[Mc.real, -Mc.imag], [Mc.imag, Mc.real]])

    rows = [real_matrix(A, t) - np.eye(2 * d) for A, t in gens]
    if not rows:
        return np.eye(2 * d)
    K = np.vstack(rows)
    u, s, vt = np.linalg.svd(K)
    null = vt[np.sum(s > tol):].T
    return null


def so3_isotropy_lattice() -> list:
    """Twisted isotropy data for SO(3) x S1 on the five-dimensional representation."""
    Rz = rotation_z
    Rx = lambda a: rotation_axis([1, 0, 0], a)  # noqa: E731
    entries = [
        ("D2", ((Rz(math.pi), 0.0), (Rx(math.pi), 0.0)), "D3xS1", "PERIODIC_ONLY", None),
        ("Z4~", ((Rz(math.pi / 2), math.pi),), "O(2)xS1", "O2_CASE", None),
        ("Z2~", ((Rz(math.pi), math.pi),), "O(2)xS1", "O2_CASE", None),
        ("Z3~", ((Rz(2 * math.pi / 3), -2 * math.pi / 3),), "SO(2)xS1", "TORUS_CASE", None),
        ("Z2", ((Rz(math.pi), 0.0),), "O(2)xS1", "OUT_OF_RANGE", None),
        ("1", (), "SO(3)xS1", "OUT_OF_RANGE", None),
    ]
    out = []
    for label, gens, quo, verdict, qt in entries:
        dim = _phase_fixed_space(gens).shape[1]
        out.append(So3IsotropyEntry(label, gens, dim, quo, verdict, qt))
    return out


def lattice_lookup(label: str) -> So3IsotropyEntry:
    for e in so3_isotropy_lattice():
        if e.label == label:
            return e
    raise KeyError(label)
