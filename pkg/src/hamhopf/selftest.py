"""Property suites run by the ``selftest`` subcommand.

Each suite samples with a fixed seed and counts failures against the
default tolerances; a suite passes when it has zero failures.
"""

from __future__ import annotations

import math

import numpy as np

from .canonical import canonical_pair, williamson_frame
from .dynamics import flow_jacobian, integrate
from .linear_core import resonance_space, standard_J
from .models import (
    OscillatorParams,
    coupled_oscillator_family,
    default_interaction,
    oscillator_rotation,
)
from .normalform import (
    frame_jet,
    frame_s1_generator,
    invariance_residual,
    noether_residual,
    normalize_poly,
    s1_invariance_residual,
)
from .polynomial import Poly
from .tolerances import DEFAULT, Tolerances

SUITES = ("invariance", "symplecticity", "noether", "s1_normalization")


def _family():
    return coupled_oscillator_family(OscillatorParams(f_coeffs=default_interaction()))


def _record(cases, name, value, tol):
    cases.append({"case": name, "value": float(value), "tol": float(tol), "pass": bool(value < tol)})


def suite_invariance(seed: int, tols: Tolerances) -> list:
    fam = _family()
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 8))
    cases = []
    for lam in (0.95, 1.0, 1.05):
        h = fam.hamiltonian(lam)
        for i, g in enumerate(fam.group.finite_generators):
            _record(cases, f"generator{i}@{lam}", invariance_residual(h, g, X), 1e-10)
        for phi in rng.uniform(0, 2 * math.pi, 3):
            _record(cases, f"rotation({phi:.3f})@{lam}", invariance_residual(h, oscillator_rotation(phi), X), 1e-10)
    return cases


def suite_symplecticity(seed: int, tols: Tolerances) -> list:
    rng = np.random.default_rng(seed)
    cases = []
    fam = _family()
    W = fam.omega
    for i, g in enumerate(fam.group.finite_generators):
        _record(cases, f"group{i}", np.abs(g.T @ W @ g - W).max(), tols.symplectic_tol)
    # one integrator step of a random quadratic and of the quartic family
    d = 4
    J = standard_J(d)
    M = rng.standard_normal((d, d))
    hq = Poly.quadratic(M + M.T)
    _, S = flow_jacobian(hq, -np.linalg.inv(J), rng.standard_normal(d), 0.01, 0.01)
    Wf = J
    _record(cases, "step_quadratic", np.abs(S.T @ Wf @ S - Wf).max(), 1e-10)
    h = fam.hamiltonian(1.0)
    _, S = flow_jacobian(h, fam.poisson, 0.3 * rng.standard_normal(8), 0.05, 0.01)
    _record(cases, "flow_quartic", np.abs(S.T @ W @ S - W).max(), 1e-10)
    # frames of random symplectic conjugates of the canonical pair
    for n in (1, 2):
        A, Wc = canonical_pair(n, 1.0, "PLUS")
        H = rng.standard_normal((4 * n, 4 * n))
        H = 0.3 * (H + H.T)
        from scipy.linalg import expm

        T = expm(-np.linalg.inv(Wc) @ H)             # symplectic for Wc
        Ti = np.linalg.inv(T)
        R = resonance_space(Ti @ A @ T, 1.0, T.T @ Wc @ T, tols)
        F = williamson_frame(R, tols=tols)
        _record(cases, f"frame_n{n}", max(F.residuals["A"], F.residuals["omega"]), tols.frame_tol)
    return cases


def suite_noether(seed: int, tols: Tolerances) -> list:
    fam = _family()
    rng = np.random.default_rng(seed)
    cases = []
    K = fam.momenta["K"]
    for lam in (0.97, 1.03):
        h = fam.hamiltonian(lam)
        _record(cases, f"bracket@{lam}", noether_residual(h, K, fam.poisson), tols.noether_tol)
    h = fam.hamiltonian(1.02)
    v = 0.2 * rng.standard_normal(8)
    tr = integrate(h, fam.poisson, v, 4 * math.pi, 2 * math.pi / 400, momenta={"K": K})
    _record(cases, "K_drift", tr.momentum_drift("K"), tols.noether_tol)
    _record(cases, "energy_drift", tr.energy_drift, tols.drift_tol)
    return cases


def suite_s1_normalization(seed: int, tols: Tolerances) -> list:
    fam = _family()
    rng = np.random.default_rng(seed)
    cases = []
    R = resonance_space(fam.linearization(1.0), 1.0, fam.omega, tols)
    F = williamson_frame(R, fam.group, tols)
    As = frame_s1_generator(F)
    X = 0.5 * rng.standard_normal((30, 8))
    h = frame_jet(fam.jet, F).at(1.0)
    # add a non-invariant cubic so the normalization has work to do
    cubic = Poly(8, {tuple(int(i == a) + int(i == b) + int(i == c) for i in range(8)): rng.standard_normal()
                     for a, b, c in rng.integers(0, 8, (6, 3))})
    for name, poly in (("frame_family", h), ("with_cubic", h + cubic.scale(0.1))):
        hn, info = normalize_poly(poly, As, standard_J(8), F.nu0, 4, tols)
        _record(cases, name, s1_invariance_residual(hn, As, F.nu0, X), tols.normal_form_tol)
        _record(cases, name + ":homological", max(info.residuals.values()), tols.homological_tol)
    return cases


def run_selftest(seed: int = 0, tols: Tolerances = DEFAULT, suites=SUITES) -> dict:
    table = {"invariance": suite_invariance, "symplecticity": suite_symplecticity,
             "noether": suite_noether, "s1_normalization": suite_s1_normalization}
    out = {}
    for name in suites:
        cases = table[name](seed, tols)
        out[name] = {"cases": cases, "failures": sum(not c["pass"] for c in cases)}
    out["total_failures"] = sum(v["failures"] for v in out.values() if isinstance(v, dict))
    return out
