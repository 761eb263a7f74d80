"""Orchestration shared by the CLI: model construction, analysis chain and
report assembly.  Every function returns plain JSON-ready dictionaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .branches import (
    o2_branches,
    principal_branch_point,
    torus_branches,
)
from .canonical import CanonicalFrame, williamson_frame
from .dynamics import certify_rpo
from .errors import DEGENERATE_COEFFICIENTS, NOT_RESONANT, HopfError
from .linear_core import GroupData, resonance_space, verify_equivariance
from .models import (
    OscillatorParams,
    So3Model,
    complex_frame_o2,
    coupled_oscillator_family,
    default_interaction,
    o2_cubic_coefficients,
    oscillator_rotation_generator,
    so3_isotropy_lattice,
    so3_z3_analysis,
    split_interaction,
)
from .normalform import (
    HamiltonianFamily,
    HessianCoefficients,
    check_h4,
    eigenvalues_closed_form,
    extract_coefficients,
    invariance_residual,
    krein_classify,
    locate_collision,
    match_spectra,
    noether_residual,
    numeric_spectrum,
)
from .polynomial import Poly, PolyJet
from .reduction import ReductionData, reduction_data, v1_derivative
from .tolerances import DEFAULT, Tolerances

MODELS = ("coupled_oscillator", "so3_rep5")


@dataclass
class RunConfig:
    model: str
    lambda_interval: tuple
    params: dict = field(default_factory=dict)
    tolerances: Tolerances = DEFAULT
    branches: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    inline: Optional[HamiltonianFamily] = None
    seed: int = 0


# model construction ----------------------------------------------------------------


def oscillator_params(params: dict) -> OscillatorParams:
    f = params.get("f", "default")
    if f == "default":
        coeffs = default_interaction(params.get("eps", 0.05))
    elif f == "split":
        coeffs = split_interaction(params.get("eps1", 0.05), params.get("eps2", 0.02))
    elif f == "none":
        coeffs = {}
    else:
        coeffs = {tuple(int(k) for k in item["exp"]): float(item["coef"]) for item in f}
    return OscillatorParams(m=params.get("m", 1.0), gamma=params.get("gamma", 1.0),
                            k=params.get("k", 1.0), f_coeffs=coeffs,
                            parameter=params.get("parameter", "k"))


def inline_family(spec: dict) -> HamiltonianFamily:
    jet = PolyJet.from_json(spec["jet"])
    jet.check_h1()
    omega = np.asarray(spec["omega"], float)
    g = spec.get("group", {})
    group = GroupData(
        finite_generators=tuple(np.asarray(m, float) for m in g.get("finite_generators", [])),
        algebra_generators=tuple(np.asarray(m, float) for m in g.get("algebra_generators", [])),
        names=tuple(g.get("names", [])),
    )
    momenta = {}
    for name, mj in spec.get("momenta", {}).items():
        momenta[name] = Poly(jet.dim, {tuple(t["exp"]): float(t["coef"]) for t in mj["terms"]})
    return HamiltonianFamily(jet=jet, omega=omega, group=group, momenta=momenta, name="inline")


def build_family(cfg: RunConfig) -> HamiltonianFamily:
    if cfg.inline is not None:
        return cfg.inline
    if cfg.model == "coupled_oscillator":
        return coupled_oscillator_family(oscillator_params(cfg.params))
    raise HopfError(NOT_RESONANT, f"model {cfg.model} has no Hamiltonian family")


# analysis chain ------------------------------------------------------------------------


@dataclass
class Analysis:
    family: HamiltonianFamily
    lambda_star: float
    nu_star: float
    frame: CanonicalFrame
    coeffs: HessianCoefficients
    event: object
    hypotheses: dict
    collision_info: dict
    reduction: Optional[ReductionData] = None


def hypothesis_checks(family: HamiltonianFamily, lam: float, nu: float, tols: Tolerances) -> dict:
    out = {}
    bad = sorted(e for e in family.jet.terms if sum(e) <= 1)
    out["H1"] = {"pass": not bad, "low_degree_terms": [list(e) for e in bad]}
    ev = np.linalg.eigvals(family.linearization(lam))
    scale = max(1.0, np.abs(ev).max())
    on = np.abs(np.abs(ev.imag) - nu) + np.abs(ev.real)
    out["H2"] = {"pass": bool(np.abs(ev).min() > tols.spectral_rel * scale and nu > 0
                              and on.min() < 1e-6 * scale),
                 "min_abs_eigenvalue": float(np.abs(ev).min()), "nu0": nu}
    return out


def analyze_family(family: HamiltonianFamily, interval, tols: Tolerances = DEFAULT,
                   with_reduction: bool = False) -> Analysis:
    family.jet.check_h1()
    lam, nu, info = locate_collision(family, interval, tols=tols)
    hyp = hypothesis_checks(family, lam, nu, tols)
    R = resonance_space(family.linearization(lam), nu, family.omega, tols)
    F = williamson_frame(R, family.group, tols)
    hyp["H3"] = {"pass": True, "dim_U": R.dim, "case": F.case, "frame_residuals": F.residuals}
    C = extract_coefficients(family, F, tols=tols, lambda0=lam)
    hyp["H4"] = check_h4(C)
    event = krein_classify(C, tols=tols)
    red = reduction_data(family, F, C, tols) if with_reduction else None
    return Analysis(family, lam, nu, F, C, event, hyp, info, red)


def symmetry_checks(family: HamiltonianFamily, lam: float, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((32, family.dim))
    h = family.hamiltonian(lam)
    out = {"invariance": [invariance_residual(h, g, X) for g in family.group.finite_generators],
           "noether": {k: noether_residual(h, K, family.poisson) for k, K in family.momenta.items()},
           "symplectic": family.group.validate(family.omega)}
    return out


def spectra_table(A: Analysis, grid) -> list:
    rows = []
    for lam in grid:
        closed = eigenvalues_closed_form(A.coeffs, lam)
        U = A.frame.resonance
        Aamb = A.family.linearization(lam)
        num = numeric_spectrum(U.basis.T @ Aamb @ U.basis, precise=True)
        rows.append({"lambda": float(lam), "mismatch": match_spectra(closed, num, A.frame.n)})
    return rows


# reports --------------------------------------------------------------------------------


def base_report(command: str, cfg: RunConfig) -> dict:
    return {"command": command, "tool_version": __version__, "model": cfg.model,
            "lambda_interval": list(cfg.lambda_interval), "tolerances": cfg.tolerances.as_dict(),
            "seed": cfg.seed}


def run_analyze(cfg: RunConfig) -> dict:
    rep = base_report("analyze", cfg)
    if cfg.model == "so3_rep5" and cfg.inline is None:
        rep["note"] = "normal-form level model; no Hamiltonian family to scan"
        rep["hopf_events"] = []
        return rep
    fam = build_family(cfg)
    A = analyze_family(fam, cfg.lambda_interval, cfg.tolerances)
    rep["hopf_events"] = [A.event.to_json()]
    rep["collision"] = {"lambda_star": A.lambda_star, "nu_star": A.nu_star, **A.collision_info}
    rep["hypotheses"] = A.hypotheses
    rep["frame_residuals"] = A.frame.residuals
    rep["coefficients"] = A.coeffs.to_json()
    rep["symmetry"] = symmetry_checks(fam, A.lambda_star, cfg.seed)
    return rep


def run_resonance(cfg: RunConfig) -> dict:
    rep = base_report("resonance", cfg)
    fam = build_family(cfg)
    A = analyze_family(fam, cfg.lambda_interval, cfg.tolerances)
    R = A.frame.resonance
    rep["resonance"] = {"dim": R.dim, "nu0": R.nu0, "period": R.period, "harmonics": list(R.harmonics),
                        "properties": R.properties(),
                        "equivariance": verify_equivariance(R, fam.group)}
    rep["frame"] = A.frame.to_json()
    rep["coefficients"] = A.coeffs.to_json()
    rep["spectra"] = spectra_table(A, A.coeffs.grid)
    return rep


def _oscillator_reduction(cfg: RunConfig):
    fam = build_family(cfg)
    A = analyze_family(fam, cfg.lambda_interval, cfg.tolerances, with_reduction=True)
    cf = complex_frame_o2(A.frame)
    a, b, res = o2_cubic_coefficients(A.reduction.cubic, cf)
    return fam, A, cf, a, b, res


def run_branches(cfg: RunConfig) -> dict:
    rep = base_report("branches", cfg)
    bc = cfg.branches
    r_values = bc.get("r", [0.025, 0.05, 0.1])
    if cfg.model == "so3_rep5":
        model = So3Model(**{k: cfg.params.get(k, v) for k, v in (("b1", 1.0), ("b2", 0.5), ("b3", 1.0))})
        z3 = so3_z3_analysis(model)
        rep["z3_analysis"] = z3.to_json()
        rep["lattice"] = [{"label": e.label, "fixed_dim": e.fixed_dim, "quotient": e.quotient,
                           "verdict": e.verdict} for e in so3_isotropy_lattice()]
        rep["branches"] = []
        if z3.certified:
            psi = bc.get("psi", [1.1, 1.0])
            sols = torus_branches([z3.c1], z3.c_hat, psi, bc.get("pi_n", [0.01, 0.02, 0.05]))
            rep["branches"] = [s.to_json() for s in sols]
        return rep
    fam, A, cf, a, b, res = _oscillator_reduction(cfg)
    rep["o2_coefficients"] = {"a": a, "b": b, "residual": res, "xi_sign": cf.xi_sign,
                              "weights_rotation": list(cf.weights_rotation),
                              "weights_s1": list(cf.weights_s1)}
    rep["hopf_events"] = [A.event.to_json()]
    xi_list = bc.get("xi", [0.0]) if isinstance(bc.get("xi", [0.0]), list) else [bc["xi"]]
    alphas = bc.get("alpha", [0.0, 0.01])
    table = []
    try:
        pairs = [(al, cf.xi_sign * xs) for al in alphas for xs in xi_list]
        for p in o2_branches(a, b, A.nu_star, A.coeffs.sigma_prime_0, pairs, r_values,
                             lambda0=A.lambda_star, trust_radius=cfg.tolerances.trust_radius):
            table.append(p.to_json())
        rep["law"] = "o2_mixed"
    except HopfError as err:
        if err.code != DEGENERATE_COEFFICIENTS:
            raise
        rep["law"] = "principal_part_sphere_zeros"
        rep["degenerate"] = err.to_dict()
        dirs = {"symmetric": [1.0, 1.0], "z1": [1.0, 0.0], "z2": [0.0, 1.0]}
        for al in alphas:
            for xs in xi_list:
                xi = xs * cf.rotation_generator
                for name, z in dirs.items():
                    u0 = cf.from_z(np.array(z, complex))
                    for r in r_values:
                        p = principal_branch_point(A.reduction, u0, r, al, xi, xs, name, cfg.tolerances)
                        zz = cf.to_z(p.coords)
                        p.coords = np.abs(zz) ** 2
                        table.append(p.to_json())
    rep["branches"] = table
    return rep


def predicted_rpo_guess(A: Analysis, cf, r: float, alpha: float, xs: float, mode: str = "z1",
                        tols: Tolerances = DEFAULT):
    """Branch point from the principal part, lifted to the ambient space with v1 = D v1(0) v0."""
    z = {"z1": [1.0, 0.0], "z2": [0.0, 1.0], "symmetric": [1.0, 1.0]}[mode]
    xi = xs * cf.rotation_generator
    u0 = cf.from_z(np.array(z, complex))
    bp = principal_branch_point(A.reduction, u0, r, alpha, xi, xs, mode, tols)
    D = v1_derivative(A.coeffs, alpha, bp.lam, xi)
    x = np.concatenate([bp.coords, D @ bp.coords])
    return bp, A.frame.vector(x)


def run_verify(cfg: RunConfig) -> dict:
    rep = base_report("verify", cfg)
    vc = cfg.verify
    fam, A, cf, a, b, res = _oscillator_reduction(cfg)
    r, al, xs = vc.get("r", 0.05), vc.get("alpha", 0.02), vc.get("xi", 0.01)
    bp, v = predicted_rpo_guess(A, cf, r, al, xs, vc.get("mode", "z1"), cfg.tolerances)
    h = fam.hamiltonian(bp.lam)
    xi_amb = xs * oscillator_rotation_generator()
    K = fam.momenta["K"].scale(xs)
    cert = certify_rpo(h, K, xi_amb, fam.poisson, v, bp.relative_period, tols=cfg.tolerances)
    T0 = 2 * np.pi / A.nu_star
    rep["prediction"] = bp.to_json()
    rep["certificates"] = [{**cert.to_json(), "lambda": bp.lam,
                            "period_ratio": cert.tau / T0,
                            "pass": bool(cert.residual < cfg.tolerances.rpo_tol
                                         and abs(cert.tau / T0 - 1) < 0.05)}]
    return rep


def sweep_rows(cfg: RunConfig, jobs: int = 1) -> tuple:
    fam = build_family(cfg)
    A = analyze_family(fam, cfg.lambda_interval, cfg.tolerances)
    lo, hi = cfg.lambda_interval
    grid = np.linspace(lo, hi, int(cfg.sweep.get("npts", 21)))
    R = A.frame.resonance
    n4 = 4 * A.frame.n

    def row(lam):
        num = numeric_spectrum(R.basis.T @ fam.linearization(lam) @ R.basis)
        num = num[np.lexsort((num.real, num.imag))]
        s, rr, t, p = A.coeffs.at(lam)
        vals = [lam]
        for mu in num:
            vals += [mu.real, mu.imag]
        return vals + [s, rr, t, p, rr * s - t * t]

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(row, grid))
    else:
        rows = [row(l) for l in grid]
    header = ["lambda"] + [f"{p}_mu{k}" for k in range(1, n4 + 1) for p in ("re", "im")] + \
        ["sigma", "rho", "tau", "psi", "f1"]
    return header, rows


def format_csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(format(float(x), ".17g") if np.isfinite(x) else "nan" for x in r))
    return "\n".join(lines) + "\n"


def run_sweep(cfg: RunConfig, jobs: int = 1) -> dict:
    rep = base_report("sweep", cfg)
    header, rows = sweep_rows(cfg, jobs)
    rep["header"] = header
    rep["rows"] = [[float(x) for x in r] for r in rows]
    return rep
