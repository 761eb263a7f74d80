"""Acceptance criteria C1-C10; each test prints one PASS/FAIL line."""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, build
from hamhopf.branches import maximal_isotropy_count, o2_branches, o2_newton_refine, torus_branches
from hamhopf.canonical import canonical_hessian, canonical_pair, williamson_frame
from hamhopf.cli import parse_config
from hamhopf.errors import RANK_DEFICIENT, HopfError
from hamhopf.linear_core import resonance_space
from hamhopf.models import (
    OscillatorParams,
    So3Model,
    coupled_oscillator_family,
    o2_cubic_coefficients,
    oscillator_eigenvalues,
    so3_z3_analysis,
    split_interaction,
)
from hamhopf.normalform import (
    eigenvalues_closed_form,
    equivariant_normalize,
    frame_jet,
    frame_s1_generator,
    krein_classify,
    locate_collision,
    match_spectra,
    numeric_spectrum,
)
from hamhopf.pipeline import run_verify
from hamhopf.reduction import (
    BifPoint,
    bifurcation_potential_g,
    jacobian_B,
    principal_part_B,
    reduced_equation,
    v1_derivative,
    v1_fd_derivative,
)
from hamhopf.selftest import run_selftest


def record(num: int, title: str, ok: bool, detail: str):
    line = f"C{num} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    assert ok, line


def test_c1_krein_collision():
    p = OscillatorParams()
    fam = coupled_oscillator_family(p)
    worst = 0.0
    for k in (0.96, 1.04):
        closed = oscillator_eigenvalues(p, k)
        worst = max(worst, match_spectra(closed, np.linalg.eigvals(fam.linearization(k)), 2))
    ev = oscillator_eigenvalues(p, 0.96)
    values_ok = np.allclose(np.sort(ev.imag), [-1.2, -0.8, 0.8, 1.2], atol=1e-12) and np.abs(ev.real).max() < 1e-12
    mu2 = oscillator_eigenvalues(p, 1.04) ** 2
    quad_ok = (np.abs(oscillator_eigenvalues(p, 1.04).real).min() > 0
               and np.abs(np.sort(mu2.imag) - [-0.4, -0.4, 0.4, 0.4]).max() < 1e-12
               and np.abs(mu2.real + 0.96).max() < 1e-12)
    k_star, nu_star, _ = locate_collision(fam, (0.9, 1.1))
    ok = values_ok and quad_ok and worst < 1e-8 and abs(k_star - 1) < 1e-6 and abs(nu_star - 1) < 1e-8
    record(1, "Krein collision", ok,
           f"oracle mismatch {worst:.1e}, k*={k_star:.12f}, nu*={nu_star:.12f}")


def test_c2_williamson_frame(osc):
    rng = np.random.default_rng(2024)
    worst = max(osc.frame.residuals["A"], osc.frame.residuals["omega"])
    for i in range(100):
        n = 1 + i % 2
        case = "PLUS" if i % 4 < 2 else "MINUS"
        nu0 = float(rng.uniform(0.5, 2.0))
        A, W = canonical_pair(n, nu0, case)
        from scipy.linalg import expm

        H = rng.standard_normal((4 * n, 4 * n))
        T = expm(-np.linalg.inv(W) @ (0.3 * (H + H.T)))
        F = williamson_frame(resonance_space(np.linalg.solve(T, A @ T), nu0, T.T @ W @ T))
        assert F.case == case
        worst = max(worst, F.residuals["A"] / max(1.0, nu0), F.residuals["omega"])
    H0 = osc.frame.hessian_in_frame(osc.family.hessian(osc.params.lambda_hopf))
    hn = equivariant_normalize(frame_jet(osc.family.jet, osc.frame), frame_s1_generator(osc.frame),
                               lam=osc.params.lambda_hopf, nu0=osc.frame.nu0).at(0.0)
    hess_err = max(np.abs(H0 - canonical_hessian(2, 1.0)).max(),
                   np.abs(hn.degree_part(2).quadratic_matrix() - canonical_hessian(2, 1.0)).max())
    record(2, "Williamson frame", worst < 1e-8 and hess_err < 1e-8,
           f"max frame residual {worst:.1e} over 101 frames, Hessian error {hess_err:.1e}")


def test_c3_coefficient_initial_conditions(osc):
    C = osc.coeffs
    s, r, t, p = C.at(C.lambda0)
    init_err = max(abs(s), abs(r + 1), abs(t), abs(p - C.nu0))
    grid = np.concatenate([C.grid, np.linspace(C.lambda0 - 0.05, C.lambda0 + 0.05, 21)])
    worst = max(match_spectra(eigenvalues_closed_form(C, lam),
                              numeric_spectrum(osc.family.linearization(lam), precise=True), C.n)
                for lam in grid)
    record(3, "coefficient initial conditions", init_err < 1e-8 and worst < 1e-8,
           f"(sigma,rho,tau,psi) error {init_err:.1e}, spectrum mismatch {worst:.1e} on {grid.size} points")


def test_c4_v1_derivative(osc):
    R = osc.reduction
    u = np.array([0.3, -0.5, 0.7, 0.2])
    u /= np.linalg.norm(u)
    alpha, lam = 0.05, 1.01
    xi = 0.03 * osc.cf.rotation_generator
    D = v1_derivative(R.coeffs, alpha, lam, xi)
    sizes = [0.1 / 2 ** k for k in range(4)]
    errs = [np.abs(v1_fd_derivative(R, s * u, alpha, lam, xi) - D).max() for s in sizes]
    ratios = [errs[k + 1] / errs[k] for k in range(3)]
    consts = [e / s for e, s in zip(errs, sizes)]
    ok = all(q <= 0.6 for q in ratios) and all(c <= consts[0] * 1.0001 for c in consts)
    record(4, "v1 derivative vs implicit-function oracle", ok,
           f"C = {max(consts):.2e}, errors {', '.join(f'{e:.1e}' for e in errs)}, "
           f"halving ratios {', '.join(f'{q:.2f}' for q in ratios)}")


def _fd_gradient(g, v, h=1e-3):
    """Five-point central stencil: exact for polynomials of degree <= 4 up to roundoff."""
    out = np.zeros_like(v)
    for k in range(v.size):
        e = np.zeros_like(v)
        e[k] = h
        out[k] = (-g(v + 2 * e) + 8 * g(v + e) - 8 * g(v - e) + g(v - 2 * e)) / (12 * h)
    return out


def test_c5_gradient_structure(osc_split, osc_gamma):
    rng = np.random.default_rng(5)
    asym, rel = 0.0, 0.0
    for i in range(100):
        P = osc_split if i % 2 == 0 else osc_gamma
        R = P.reduction
        v = 0.1 * rng.standard_normal(4)
        alpha = rng.uniform(-0.05, 0.05)
        lam = R.lambda0 + rng.uniform(-0.02, 0.02)
        xi = rng.uniform(-0.05, 0.05) * P.cf.rotation_generator
        p = BifPoint.make(v, alpha, lam, xi)
        Jb = jacobian_B(R, p)
        asym = max(asym, np.abs(Jb - Jb.T).max())
        B = principal_part_B(R, p)
        grad = _fd_gradient(lambda w: bifurcation_potential_g(R, BifPoint.make(w, alpha, lam, xi)), v)
        rel = max(rel, np.linalg.norm(grad - B) / np.linalg.norm(B))
    record(5, "gradient structure", asym < 1e-8 and rel < 1e-6,
           f"max Jacobian asymmetry {asym:.1e}, max relative gradient mismatch {rel:.1e} at 100 points")


def test_c6_o2_branch_law(osc_gamma):
    R, cf = osc_gamma.reduction, osc_gamma.cf
    a, b, _ = o2_cubic_coefficients(R.cubic, cf)
    nu = R.nu0
    sp = R.coeffs.sigma_prime_0
    devs, rs = [], [0.2 / 2 ** k for k in range(4)]
    for r in rs:
        al, xs = 0.1 * r, 0.05 * r
        xe = cf.xi_sign * xs
        xi = xs * cf.rotation_generator
        guess = o2_branches(a, b, nu, sp, [(al, xe)], [r], lambda0=R.lambda0)[0]
        p1, p2, _, _ = o2_newton_refine(lambda v0, lam: reduced_equation(R, v0, al, lam, xi),
                                        cf.from_z, cf.to_z, guess)
        devs.append(abs(p2 - p1 + 4 * nu * al * xe / (a - b)))
    orders = [math.log2(devs[k] / devs[k + 1]) for k in range(len(devs) - 1)]
    bound = [d / (r ** 4 + r * r * abs(0.1 * r * 0.05 * r)) for d, r in zip(devs, rs)]
    record(6, "O(2) branch law", min(orders) >= 1.8,
           f"a={a:.4f}, b={b:.4f}, deviations {', '.join(f'{d:.2e}' for d in devs)}, "
           f"observed orders {', '.join(f'{o:.2f}' for o in orders)}, "
           f"deviation/(r^4+r^2|alpha xi|) <= {max(bound):.2f}")


def test_c7_torus_theorem():
    worst = 0.0
    ok = True
    for b3 in (1.0, 0.5, -0.7, 2.0):
        an = so3_z3_analysis(So3Model(b1=1.0, b2=0.3, b3=b3))
        worst = max(worst, an.paths_agree)
        ok &= np.abs(an.delta - [-2 * b3, 4 * b3]).max() < 1e-10 and an.rank == 1 and an.certified
        # the frequency offset psi_1^2 - psi_2^2 is free; its sign must oppose Delta_1
        psi = [1.1, 1.0] if an.delta[0] < 0 else [1.0, 1.1]
        sols = torus_branches([an.c1], an.c_hat, psi, [0.01, 0.02, 0.05])
        ok &= bool(sols) and all(s.meta["residual"] < 1e-12 and min(s.coords) > 0 for s in sols)
    ranks = {b3: so3_z3_analysis(So3Model(1.0, 0.3, b3)).rank for b3 in (-1e-6, 0.0, 1e-6)}
    ok &= ranks == {-1e-6: 1, 0.0: 0, 1e-6: 1}
    try:
        torus_branches([-2], so3_z3_analysis(So3Model(1.0, 0.3, 0.0)).c_hat, [1.1, 1.0], [0.01])
        ok = False
    except HopfError as e:
        ok &= e.code == RANK_DEFICIENT
    record(7, "torus theorem, SO(3) Z3 case", ok and worst < 1e-10,
           f"symbolic vs least-squares {worst:.1e}, Delta = (-2 b3, 4 b3), ranks {ranks}")


def test_c8_rpo_certificate():
    cfg = parse_config('{"schema_version": 1, "model": "coupled_oscillator", "lambda_interval": [0.9, 1.1],'
                       ' "verify": {"r": 0.05, "alpha": 0.02, "xi": 0.01, "mode": "z1"}}')
    rep = run_verify(cfg)
    c = rep["certificates"][0]
    T0 = 2 * math.pi
    ok = c["residual"] < 1e-6 and abs(c["tau"] / T0 - 1) < 0.05
    record(8, "end-to-end RPO certificate", ok,
           f"lambda={c['lambda']:.6f}, tau={c['tau']:.5f} ({100 * abs(c['tau'] / T0 - 1):.2f}% from T), "
           f"residual {c['residual']:.1e}")


def test_c9_counts():
    expected = {"S1_TRIVIAL": lambda l: l // 2, "S1_Z2": lambda l: l // 4, "SU2": lambda l: l // 4}
    checked, ok = 0, True
    for q, f in expected.items():
        for l in (2, 4, 6, 8):
            if q != "S1_TRIVIAL" and l % 4:
                continue
            got = maximal_isotropy_count(l, q)
            ok &= isinstance(got, int) and got == f(l)
            checked += 1
    record(9, "count formulas", ok, f"{checked} parity-valid (l, quotient) cases exact")


def test_c10_selftest():
    res = run_selftest(seed=0)
    per = ", ".join(f"{k} {v['failures']}/{len(v['cases'])}" for k, v in res.items() if isinstance(v, dict))
    record(10, "property suites", res["total_failures"] == 0, f"failures: {per}")
