import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from hamhopf.canonical import canonical_hessian
from hamhopf.errors import RHO_SINGULAR, HopfError
from hamhopf.linear_core import standard_J
from hamhopf.normalform import HessianCoefficients
from hamhopf.polynomial import Poly
from hamhopf.reduction import (
    BifPoint,
    DB_at_zero,
    L_zeta,
    ReductionData,
    bifurcation_potential_g,
    jacobian_B,
    principal_part_B,
    solve_lambda,
    sphere_field_G,
    v1_derivative,
    v1_fd_derivative,
)

J2 = standard_J(2)


def synthetic(sigma_prime=-2.0, psi_prime=0.0, n=1, quartic=None):
    C = HessianCoefficients.linear(sigma_prime, psi_prime, nu0=1.0, lambda0=0.0, n=n)
    q = Poly(2 * n) if quartic is None else quartic
    return ReductionData(coeffs=C, quartic=q, n=n, nu0=1.0)


def test_L_zeta_examples():
    C = HessianCoefficients.linear(-2.0, n=1)
    Z = np.zeros((2, 2))
    assert np.allclose(L_zeta(C, 1.0), np.block([[Z, Z], [Z, -np.eye(2)]]))
    assert np.allclose(L_zeta(C, 0.0), canonical_hessian(1, 1.0))
    L2 = L_zeta(C, 2.0)
    assert np.allclose(L2[:2, 2:], -J2) and np.allclose(L2[2:, :2], J2)


def test_L_zeta_kernel_is_v0(osc):
    L = L_zeta(osc.coeffs, osc.coeffs.nu0)
    assert np.abs(L[:, :4]).max() < 1e-8
    assert np.linalg.matrix_rank(L, tol=1e-6) == 4


def test_v1_derivative_examples(osc):
    C = osc.coeffs
    lam0 = C.lambda0
    assert np.abs(v1_derivative(C, 0.0, lam0, np.zeros((4, 4)))).max() < 1e-8
    assert np.abs(v1_derivative(C, 0.1, lam0, np.zeros((4, 4))) - 0.1 * standard_J(4)).max() < 1e-8


def test_rho_singular():
    C = HessianCoefficients.from_functions(lambda l: 0.0, lambda l: 0.0, lambda l: 0.0, lambda l: 1.0, 0.0, 1.0)
    with pytest.raises(HopfError) as e:
        v1_derivative(C, 0.0, 0.0, np.zeros((2, 2)))
    assert e.value.code == RHO_SINGULAR
    with pytest.raises(HopfError):
        DB_at_zero(C, 0.0, 0.0, np.zeros((2, 2)))


def test_DB_examples(osc):
    C = osc.coeffs
    Z = np.zeros((4, 4))
    assert np.abs(DB_at_zero(C, 0.0, C.lambda0, Z)).max() < 1e-8
    a = 1e-2
    assert np.abs(DB_at_zero(C, a, C.lambda0, Z) - a * a * np.eye(4)).max() < 1e-8


def test_DB_matches_principal_jacobian(osc):
    """At the same (alpha, lam, xi), the exact DB(0) and the principal part agree to second order."""
    R = osc.reduction
    xi = 0.01 * osc.cf.rotation_generator
    for a, dl in ((0.01, 0.002), (0.005, 0.001)):
        DB = DB_at_zero(R.coeffs, a, R.lambda0 + dl, xi)
        P = jacobian_B(R, BifPoint.make(np.zeros(4), a, R.lambda0 + dl, xi))
        assert np.abs(DB - P).max() < 50 * (a + dl) ** 2 * max(a, dl)


def test_v1_fd_oracle_small(osc):
    R = osc.reduction
    u = np.array([0.3, -0.5, 0.7, 0.2])
    u /= np.linalg.norm(u)
    xi = 0.03 * osc.cf.rotation_generator
    D = v1_derivative(R.coeffs, 0.05, 1.01, xi)
    err = np.abs(v1_fd_derivative(R, 1e-3 * u, 0.05, 1.01, xi) - D).max()
    assert err < 1e-6


def test_B_vanishes_at_zero(osc):
    R = osc.reduction
    assert np.abs(principal_part_B(R, BifPoint.make(np.zeros(4), 0.1, 1.02, 0.1 * osc.cf.rotation_generator))).max() == 0


def test_quadratic_only_case():
    R = synthetic(-2.0)
    v = np.array([0.3, -0.4])
    p = BifPoint.make(v, 0.1, 0.02)
    c = 0.02 * -2.0 + 0.01
    assert np.allclose(principal_part_B(R, p), c * v)
    assert np.isclose(bifurcation_potential_g(R, p), 0.5 * c * v @ v)
    for a in (0.0, 0.05, 0.1):
        assert np.isclose(solve_lambda(R, 0.1, [1.0, 0.0], a, np.zeros((2, 2))), a * a / 2.0, atol=1e-12)


def test_solve_lambda_limit(osc):
    R = osc.reduction
    u = np.array([1.0, 0.0, 0.0, 0.0])
    assert abs(solve_lambda(R, 0.0, u, 0.0, np.zeros((4, 4))) - R.lambda0) < 1e-12
    lams = [solve_lambda(R, r, u, 0.0, np.zeros((4, 4))) for r in (1e-2, 1e-3)]
    assert abs(lams[1] - R.lambda0) < abs(lams[0] - R.lambda0) + 1e-14


def test_solve_lambda_o2(osc_split):
    """lambda = lambda0 - [(nu alpha - xi_eff)^2 + a|z1|^2 + b|z2|^2]/sigma' on the O(2) model."""
    cf, R = osc_split.cf, osc_split.reduction
    from hamhopf.models import o2_cubic_coefficients

    a, b, _ = o2_cubic_coefficients(R.cubic, cf)
    z = np.array([0.06, 0.03j])
    u = cf.from_z(z)
    r = np.linalg.norm(u)
    alpha, xs = 0.02, 0.01
    xi = xs * cf.rotation_generator
    lam = solve_lambda(R, r, u / r, alpha, xi)
    xe = cf.xi_sign * xs
    p1, p2 = abs(z[0]) ** 2, abs(z[1]) ** 2
    sp = R.coeffs.sigma_prime_0
    # projecting onto u weights the two component equations by p1 and p2
    num = (alpha - xe) ** 2 * p1 + (alpha + xe) ** 2 * p2 + a * (p1 * p1 + p2 * p2) + 2 * b * p1 * p2
    assert abs(lam - (R.lambda0 - num / (sp * (p1 + p2)))) < 1e-10


def test_sphere_field_tangent_and_equivariant(osc_split, rng):
    R, cf = osc_split.reduction, osc_split.cf
    xi = 0.01 * cf.rotation_generator
    F = osc_split.frame
    from hamhopf.canonical import check_block_action
    from hamhopf.models import oscillator_rotation

    for _ in range(5):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        G = sphere_field_G(R, 0.05, u, 0.02, xi)
        assert abs(G @ u) < 1e-10 * max(1.0, np.linalg.norm(G))
        phi, th = rng.uniform(0, 2 * np.pi, 2)
        g = check_block_action(F, F.to_frame(oscillator_rotation(phi))) @ expm(th * standard_J(4))
        Gg = sphere_field_G(R, 0.05, g @ u, 0.02, xi)
        assert np.abs(Gg - g @ G).max() < 1e-9


def test_sphere_field_zeros_on_symmetric_circle(osc_split):
    R, cf = osc_split.reduction, osc_split.cf
    for ph in (0.0, 0.7, 2.1):
        u = cf.from_z(np.array([1.0, np.exp(1j * ph)]) / np.sqrt(2))
        G = sphere_field_G(R, 0.05, u, 0.0, np.zeros((4, 4)))
        assert np.abs(G).max() < 1e-12


def test_B_equivariant(osc_split, rng):
    R, F = osc_split.reduction, osc_split.frame
    from hamhopf.canonical import check_block_action

    xi = 0.02 * osc_split.cf.rotation_generator
    gens = [check_block_action(F, F.to_frame(g)) for g in osc_split.family.group.finite_generators[1:]]
    gens.append(expm(0.9 * standard_J(4)))
    for _ in range(5):
        v = 0.1 * rng.standard_normal(4)
        p = BifPoint.make(v, 0.03, R.lambda0 + 0.01, xi)
        B = principal_part_B(R, p)
        for g in gens:
            Bg = principal_part_B(R, BifPoint.make(g @ v, 0.03, R.lambda0 + 0.01, xi))
            assert np.abs(Bg - g @ B).max() < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gradient_structure(seed):
    rng = np.random.default_rng(seed)
    q = Poly(4)
    for e in [(4, 0, 0, 0), (2, 2, 0, 0), (0, 0, 2, 2), (1, 1, 1, 1), (0, 4, 0, 0), (2, 0, 2, 0)]:
        q = q + Poly(4, {e: rng.standard_normal()})
    R = synthetic(-2.0, 1.0, n=2, quartic=q)
    X = standard_J(4)
    p = BifPoint.make(0.2 * rng.standard_normal(4), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05),
                      rng.uniform(-0.1, 0.1) * X)
    Jb = jacobian_B(R, p)
    assert np.abs(Jb - Jb.T).max() < 1e-8 * max(1.0, np.abs(Jb).max())
    h = 1e-5
    grad = np.array([(bifurcation_potential_g(R, BifPoint.make(p.v0 + h * e, p.alpha, p.lam, p.xi))
                      - bifurcation_potential_g(R, BifPoint.make(p.v0 - h * e, p.alpha, p.lam, p.xi))) / (2 * h)
                     for e in np.eye(4)])
    B = principal_part_B(R, p)
    assert np.linalg.norm(grad - B) <= 1e-6 * max(np.linalg.norm(B), 1e-12) + 1e-11
