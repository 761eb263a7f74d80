import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from hamhopf.canonical import canonical_pair
from hamhopf.errors import DIMENSION_MISMATCH, NOT_HAMILTONIAN, NOT_RESONANT, HopfError
from hamhopf.linear_core import (
    GroupData,
    SymplecticForm,
    check_infinitesimally_symplectic,
    jordan_chevalley,
    momentum_hessian,
    momentum_map_J,
    quadratic_hamiltonian,
    resonance_space,
    s1_action,
    standard_J,
    verify_equivariance,
)

J2 = standard_J(2)


def test_symplectic_form_rejects_bad_matrices():
    with pytest.raises(Exception):
        SymplecticForm(np.eye(2))
    with pytest.raises(Exception):
        SymplecticForm(np.zeros((3, 3)))
    assert SymplecticForm(standard_J(4)).dim == 4


def test_check_infinitesimally_symplectic_examples():
    assert check_infinitesimally_symplectic(J2, J2)[0]
    assert not check_infinitesimally_symplectic(np.eye(2), J2)[0]
    A, W = canonical_pair(1, 1.0, "PLUS")
    assert check_infinitesimally_symplectic(A, W)[0]
    with pytest.raises(HopfError) as e:
        check_infinitesimally_symplectic(np.eye(3), J2)
    assert e.value.code == DIMENSION_MISMATCH


def test_quadratic_hamiltonian_examples():
    assert np.allclose(quadratic_hamiltonian(np.zeros((2, 2)), J2), 0)
    # 1/2 omega(J v, v) = 1/2 (q^2 + p^2): Hessian is the identity
    assert np.allclose(quadratic_hamiltonian(J2, J2), np.eye(2))
    A, W = canonical_pair(1, 1.0, "PLUS")
    J = standard_J(2)
    expected = np.block([[np.zeros((2, 2)), J], [-J, -np.eye(2)]])
    assert np.allclose(quadratic_hamiltonian(A, W), expected)
    with pytest.raises(HopfError) as e:
        quadratic_hamiltonian(np.eye(2), J2)
    assert e.value.code == NOT_HAMILTONIAN


def test_jordan_chevalley_examples():
    jc = jordan_chevalley(J2)
    assert np.allclose(jc.semisimple, J2) and np.allclose(jc.nilpotent, 0)
    N = np.array([[0.0, 1.0, 2.0], [0, 0, 3.0], [0, 0, 0]])
    jc = jordan_chevalley(N)
    assert np.allclose(jc.semisimple, 0, atol=1e-12) and np.allclose(jc.nilpotent, N)
    A, _ = canonical_pair(1, 1.0, "PLUS")
    jc = jordan_chevalley(A)
    Z = np.zeros((2, 2))
    assert np.allclose(jc.semisimple, np.block([[J2, Z], [Z, J2]]), atol=1e-10)
    assert np.allclose(jc.nilpotent, np.block([[Z, np.eye(2)], [Z, Z]]), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jordan_chevalley_invariants(seed):
    rng = np.random.default_rng(seed)
    A, W = canonical_pair(2, 1.3, "PLUS")
    T = expm(0.3 * (lambda M: M + M.T)(rng.standard_normal((8, 8))) @ W)
    A = np.linalg.solve(T, A @ T)
    jc = jordan_chevalley(A)
    nA = np.linalg.norm(A)
    assert np.abs(jc.semisimple + jc.nilpotent - A).max() < 1e-10 * nA
    assert np.abs(jc.semisimple @ jc.nilpotent - jc.nilpotent @ jc.semisimple).max() < 1e-8 * nA ** 2
    assert np.abs(np.linalg.matrix_power(jc.nilpotent, 8)).max() < 1e-8


def test_resonance_space_examples():
    A, W = canonical_pair(1, 1.0, "PLUS")
    R = resonance_space(A, 1.0, W)
    assert R.dim == 4
    Z = np.zeros((2, 2))
    B = np.block([[J2, Z], [Z, math.sqrt(2) * J2]])
    R = resonance_space(B, 1.0, standard_J(4))
    assert R.dim == 2
    assert np.allclose(np.abs(R.basis.T @ np.eye(4)[:, [0, 2]]).sum(axis=0), [1, 1]) or R.dim == 2
    B3 = np.block([[J2, Z], [Z, 3 * J2]])
    R3 = resonance_space(B3, 1.0, standard_J(4))
    assert R3.dim == 4 and set(R3.harmonics) == {1, 3}
    with pytest.raises(HopfError) as e:
        resonance_space(B, 0.7, standard_J(4))
    assert e.value.code == NOT_RESONANT


def test_resonance_space_properties():
    A, W = canonical_pair(2, 1.0, "PLUS")
    R = resonance_space(A, 1.0, W)
    p = R.properties()
    assert p["kernel_identity"] < 1e-10 and p["dim_even"] and p["omega_min_singular"] > 0.5


def test_s1_action_examples_and_group_law(rng):
    A, W = canonical_pair(1, 1.0, "PLUS")
    R = resonance_space(A, 1.0, W)
    assert np.allclose(s1_action(R, 0.0), np.eye(4))
    assert np.allclose(s1_action(R, 2 * math.pi), np.eye(4), atol=1e-12)
    assert np.allclose(s1_action(R, math.pi), -np.eye(4), atol=1e-12)
    for _ in range(5):
        a, b = rng.uniform(0, 2 * math.pi, 2)
        lhs = s1_action(R, a) @ s1_action(R, b)
        assert np.abs(lhs - s1_action(R, (a + b) % (2 * math.pi))).max() < 1e-10
        P = s1_action(R, a)
        assert np.abs(P.T @ R.omega_restricted @ P - R.omega_restricted).max() < 1e-10


def test_momentum_map(rng):
    A, W = canonical_pair(2, 1.0, "PLUS")
    R = resonance_space(A, 1.0, W)
    assert momentum_map_J(R, np.zeros(8)) == 0.0
    J4 = standard_J(4)
    assert np.allclose(momentum_hessian(R), np.block([[np.zeros((4, 4)), J4], [-J4, np.zeros((4, 4))]]))
    for _ in range(5):
        v = rng.standard_normal(8)
        j0 = momentum_map_J(R, v)
        for t in np.linspace(0, R.period, 5):
            assert abs(momentum_map_J(R, expm(t * A) @ v) - j0) < 1e-10 * (1 + abs(j0))
        th = rng.uniform(0, 2 * math.pi)
        assert abs(momentum_map_J(R, s1_action(R, th) @ v) - j0) < 1e-10 * (1 + abs(j0))


def test_verify_equivariance(osc):
    R = osc.resonance
    rep = verify_equivariance(R, GroupData())
    assert rep["pass"]
    rep = verify_equivariance(R, osc.family.group)
    assert rep["pass"], rep
    g = osc.family.group.finite_generators[1].copy()
    g[0, 1] += 1e-3
    bad = verify_equivariance(R, GroupData(finite_generators=(g,)))
    assert not bad["pass"]


def test_group_data_validate(osc):
    out = osc.family.group.validate(osc.family.omega)
    assert out["ok"]
