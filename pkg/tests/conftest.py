"""Shared fixtures: the oscillator pipeline is built once per session."""

from dataclasses import dataclass

import numpy as np
import pytest

from hamhopf.canonical import williamson_frame
from hamhopf.linear_core import resonance_space
from hamhopf.models import (
    OscillatorParams,
    complex_frame_o2,
    coupled_oscillator_family,
    default_interaction,
    split_interaction,
)
from hamhopf.normalform import extract_coefficients
from hamhopf.reduction import reduction_data


@dataclass
class Pipeline:
    params: OscillatorParams
    family: object
    resonance: object
    frame: object
    coeffs: object
    reduction: object
    cf: object


def build(params: OscillatorParams) -> Pipeline:
    fam = coupled_oscillator_family(params)
    lam0 = params.lambda_hopf
    R = resonance_space(fam.linearization(lam0), 1.0, fam.omega)
    F = williamson_frame(R, fam.group)
    C = extract_coefficients(fam, F)
    RD = reduction_data(fam, F, C)
    return Pipeline(params, fam, R, F, C, RD, complex_frame_o2(F))


@pytest.fixture(scope="session")
def osc():
    """m = gamma = 1, default interaction, lam := k."""
    return build(OscillatorParams(f_coeffs=default_interaction()))


@pytest.fixture(scope="session")
def osc_split():
    return build(OscillatorParams(f_coeffs=split_interaction()))


@pytest.fixture(scope="session")
def osc_gamma():
    """Split interaction with the field strength as bifurcation parameter (psi' != 0)."""
    return build(OscillatorParams(f_coeffs=split_interaction(), parameter="gamma"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)
