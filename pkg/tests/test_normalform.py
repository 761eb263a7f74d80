import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamhopf.canonical import canonical_hessian
from hamhopf.errors import FIT_RESIDUAL_EXCEEDED, H1_VIOLATION, NO_ROOT, HopfError
from hamhopf.linear_core import standard_J
from hamhopf.models import (
    P1,
    P3,
    Q1,
    Q3,
    OscillatorParams,
    coupled_oscillator_family,
    oscillator_eigenvalues,
)
from hamhopf.normalform import (
    HamiltonianFamily,
    HessianCoefficients,
    check_h4,
    eigenvalues_closed_form,
    equivariant_normalize,
    extract_coefficients,
    frame_jet,
    frame_s1_generator,
    invariance_residual,
    krein_classify,
    locate_collision,
    match_spectra,
    numeric_spectrum,
    s1_invariance_residual,
    taylor_at_origin,
)
from hamhopf.polynomial import Poly, PolyJet


def test_taylor_quadratic_family_unchanged():
    jet = PolyJet.from_polys([Poly.quadratic(np.eye(2)), Poly.quadratic(np.diag([1.0, 0.0]))])
    fam = HamiltonianFamily(jet, standard_J(2))
    out = taylor_at_origin(fam)
    for lam in (0.0, 0.3):
        assert (out.at(lam) - jet.at(lam)).max_abs_coef() == 0.0


def test_taylor_contains_position_quartic():
    eps = 0.05
    fam = coupled_oscillator_family(OscillatorParams(f_coeffs={(2, 0, 0, 0, 0, 0, 0, 0): eps}))
    h4 = taylor_at_origin(fam).at(1.0).degree_part(4)
    x = [Poly.variable(8, i) for i in range(8)]
    expected = (x[Q1] * x[Q1] + x[Q3] * x[Q3]) ** 2
    assert (h4 - expected.scale(eps)).max_abs_coef() < 1e-15


def test_taylor_rejects_linear_term():
    jet = PolyJet.from_polys([Poly.quadratic(np.eye(2)) + Poly.linear([1.0, 0.0])])
    with pytest.raises(HopfError) as e:
        taylor_at_origin(HamiltonianFamily(jet, standard_J(2)))
    assert e.value.code == H1_VIOLATION


def test_normalize_keeps_invariant_jet(osc):
    As = frame_s1_generator(osc.frame)
    jet = frame_jet(osc.family.jet, osc.frame)
    h = jet.at(1.0)
    hn = equivariant_normalize(jet, As, lam=1.0, nu0=1.0).at(0.0)
    assert (hn - h).max_abs_coef() < 1e-12


def test_normalize_removes_nonresonant_cubic():
    A = np.block([[standard_J(2), np.zeros((2, 2))], [np.zeros((2, 2)), standard_J(2)]])
    x = [Poly.variable(4, i) for i in range(4)]
    h2 = Poly.quadratic(canonical_hessian(1, 1.0))
    # Re z^3 for z = x0 + i x1 has zero circle average
    cubic = x[0] ** 3 - (x[0] * x[1] * x[1]).scale(3.0)
    hn = equivariant_normalize(PolyJet.from_polys([h2 + cubic.scale(0.1)]), A, standard_J(4), order=3,
                               nu0=1.0).at(0.0)
    assert hn.degree_part(3).max_abs_coef() < 1e-12
    assert (hn.degree_part(2) - h2).max_abs_coef() < 1e-15


def test_normalized_quadratic_matches_canonical(osc):
    As = frame_s1_generator(osc.frame)
    h = equivariant_normalize(frame_jet(osc.family.jet, osc.frame), As, lam=1.0, nu0=1.0).at(0.0)
    assert np.abs(h.degree_part(2).quadratic_matrix() - canonical_hessian(2, 1.0)).max() < 1e-8


def test_normal_form_invariance(osc, rng):
    As = frame_s1_generator(osc.frame)
    h = equivariant_normalize(frame_jet(osc.family.jet, osc.frame), As, lam=1.02, nu0=1.0).at(0.0)
    X = rng.standard_normal((100, 8))
    assert s1_invariance_residual(h, As, 1.0, X) < 1e-9
    for g in osc.family.group.finite_generators:
        assert invariance_residual(h, osc.frame.to_frame(g), X) < 1e-9


def test_initial_conditions(osc):
    s, r, t, p = osc.coeffs.at(osc.coeffs.lambda0)
    assert abs(s) < 1e-8 and abs(r + 1) < 1e-8 and abs(t) < 1e-8 and abs(p - 1) < 1e-8
    assert check_h4(osc.coeffs)["pass"]
    assert abs(osc.coeffs.sigma_prime_0) > 0.1


def test_sigma_prime_richardson(osc):
    C = osc.coeffs
    d1, d2 = C.derivative(0, 2e-3), C.derivative(0, 1e-3)
    assert abs(d1 - d2) < 1e-5 * max(1.0, abs(d2))


def test_fit_residual_negative_control(osc):
    M = np.diag([1.0, 2.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0, 0, 0, 0, 0, 0, 0, 0, 0][:8])
    jet = PolyJet.from_polys([osc.family.jet.at(1.0) + Poly.quadratic(M).compose_linear(osc.frame.inverse
                              @ np.linalg.pinv(osc.frame.resonance.basis)), Poly.quadratic(0.0 * M)])
    fam = HamiltonianFamily(jet, osc.family.omega, lambda0=0.0)
    with pytest.raises(HopfError) as e:
        extract_coefficients(fam, osc.frame)
    assert e.value.code == FIT_RESIDUAL_EXCEEDED


def test_closed_form_eigenvalues():
    p = OscillatorParams()
    ev = oscillator_eigenvalues(p, 0.96)
    assert np.allclose(sorted(ev.imag), [-1.2, -0.8, 0.8, 1.2]) and np.allclose(ev.real, 0)
    ev = oscillator_eigenvalues(p, 1.04)
    assert np.all(np.abs(ev.real) > 0.1)
    assert np.allclose(sorted((ev ** 2).imag), [-0.4, -0.4, 0.4, 0.4])
    assert np.allclose((ev ** 2).real, -0.96)


def test_closed_form_from_coefficients(osc):
    C = osc.coeffs
    mu = eigenvalues_closed_form(C, C.lambda0)
    assert np.allclose(np.sort(mu.imag), [-1, -1, 1, 1], atol=1e-7) and np.allclose(mu.real, 0, atol=1e-7)
    for lam in (0.96, 1.0, 1.04):
        A = osc.family.linearization(lam)
        closed = eigenvalues_closed_form(C, lam)
        assert match_spectra(closed, numeric_spectrum(A, precise=True), 2) < 1e-8
        assert match_spectra(closed, oscillator_eigenvalues(osc.params, lam), 1) < 1e-8


def test_krein_classify(osc):
    ev = krein_classify(osc.coeffs, (0.9, 1.1))
    assert ev.classification == "COLLISION_SPLIT"
    assert abs(ev.lambda_star - 1.0) < 1e-6 and abs(ev.nu_star - 1.0) < 1e-8
    assert ev.f1_sign_change[0] * ev.f1_sign_change[1] < 0
    flat = HessianCoefficients.from_functions(lambda l: 0.0, lambda l: -1.0, lambda l: 0.0,
                                              lambda l: 1.0, 0.0, 1.0)
    assert krein_classify(flat).classification == "NO_EVENT"
    with pytest.raises(HopfError) as e:
        krein_classify(osc.coeffs, (1.2, 1.4))
    assert e.value.code == NO_ROOT


def test_locate_collision(osc):
    lam, nu, _ = locate_collision(osc.family, (0.9, 1.1))
    assert abs(lam - 1.0) < 1e-6 and abs(nu - 1.0) < 1e-8
    with pytest.raises(HopfError) as e:
        locate_collision(osc.family, (0.5, 0.8))
    assert e.value.code == NO_ROOT


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_collision_at_gamma_squared_over_m(m, gamma):
    fam = coupled_oscillator_family(OscillatorParams(m=m, gamma=gamma))
    k0 = gamma ** 2 / m
    lam, nu, _ = locate_collision(fam, (0.9 * k0, 1.1 * k0))
    assert math.isclose(lam, k0, rel_tol=1e-6)
    assert math.isclose(nu, gamma / m, rel_tol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.9, 1.1))
def test_closed_form_matches_numeric_on_grid(lam):
    p = OscillatorParams()
    A = coupled_oscillator_family(p).linearization(lam)
    assert match_spectra(oscillator_eigenvalues(p, lam), numeric_spectrum(A, precise=True), 2) < 1e-8
