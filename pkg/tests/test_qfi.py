import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tricrit.errors import DegenerateGround, PhaseError, ZeroVariance
from tricrit.evolve import ground_gaussian
from tricrit.fockspace import ComplexOperator, FockBasis, squeezed_vacuum
from tricrit.models import (AqrmParams, JcmParams, build_np_hamiltonian, jcm_coefficients, jcm_np_solution,
                            np_coefficients, np_solution)
from tricrit.qfi import (qfi_fidelity, qfi_jcm_analytic, qfi_np_analytic, qfi_perturbative, snr_from_runner,
                         snr_photon_number)

from conftest import OMEGA, W, np_grid


def P(s1, s2):
    return AqrmParams.scaled(OMEGA, W, s1, s2)


def fock_state_at(p, basis):
    return lambda w: squeezed_vacuum(basis, np_solution(p.with_omega(w)).gamma)


def test_analytic_examples():
    assert qfi_np_analytic(P(0.6, 0.0)).value == 0
    F = qfi_np_analytic(P(0.998, 0.001)).value
    assert F == pytest.approx(222221.8, rel=1e-6)
    assert F * W ** 2 == pytest.approx(13888.86, rel=1e-6)
    with pytest.raises(PhaseError):
        qfi_np_analytic(P(0.8, 0.6))


def test_analytic_equals_twice_dgamma_squared():
    p = P(0.5, 0.3)
    h = 1e-6 * W
    dg = (np_solution(p.with_omega(W + h)).gamma - np_solution(p.with_omega(W - h)).gamma) / (2 * h)
    assert qfi_np_analytic(p).value == pytest.approx(2 * dg * dg, rel=1e-7)


def test_sqrt_path_limit():
    k = 2.0
    u = 1e-8
    assert qfi_np_analytic(P(1 - k * math.sqrt(u), u)).value == pytest.approx(1 / (8 * W * W * k ** 4), rel=1e-3)


def test_perturbative_toys():
    b = FockBasis(2)
    H0 = ComplexOperator(np.diag([0.0, 1.0, 2.0]), b)
    assert qfi_perturbative(H0, ComplexOperator(np.diag([3.0, 1.0, 7.0]), b)).value == 0
    # two-level toy embedded in the lowest two levels
    H0 = ComplexOperator(np.diag([-0.5, 0.5, 10.0]), b)
    H1 = np.zeros((3, 3))
    H1[0, 1] = H1[1, 0] = 0.5
    assert qfi_perturbative(H0, ComplexOperator(H1, b)).value == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(DegenerateGround):
        qfi_perturbative(ComplexOperator(np.zeros((3, 3)), b), ComplexOperator(H1, b))


def _perturbative(p, basis):
    h = 1e-4 * p.omega
    H0 = build_np_hamiltonian(p, basis)
    H1 = (build_np_hamiltonian(p.with_omega(p.omega + h), basis) - build_np_hamiltonian(
        p.with_omega(p.omega - h), basis)) * (1 / (2 * h))
    return qfi_perturbative(H0, H1)


def test_estimator_concordance_on_grid():
    basis = FockBasis(120)
    for s in np_grid(8, 0.05):
        p = P(*s)
        if np_solution(p).Delta / W < 0.02:
            continue
        Fa = qfi_np_analytic(p).value
        Fp = _perturbative(p, basis).value
        Ff = qfi_fidelity(fock_state_at(p, basis), W).value
        if Fa < 1e-10:
            assert Fp < 1e-8 and Ff < 1e-8
            continue
        assert Fp == pytest.approx(Fa, rel=1e-3)
        assert Ff == pytest.approx(Fa, rel=1e-3)


def test_fidelity_matches_analytic_1e4():
    basis = FockBasis(200)
    p = P(0.9, 0.05)
    assert qfi_fidelity(fock_state_at(p, basis), W).value == pytest.approx(qfi_np_analytic(p).value, rel=1e-4)
    # the Gaussian representation of the same states
    A, c = np_coefficients(p)
    g = qfi_fidelity(lambda w: ground_gaussian(A + w - W, c), W).value
    assert g == pytest.approx(qfi_np_analytic(p).value, rel=1e-4)


def test_fidelity_constant_state():
    psi = squeezed_vacuum(FockBasis(20), 0.2)
    assert qfi_fidelity(lambda w: psi, 1.0).value == 0


def test_jcm_fidelity():
    basis = FockBasis(200)
    q = JcmParams.scaled(2.5e5, 0.25, 1 - 3 * 0.05, 0.05)
    Fa = qfi_jcm_analytic(q).value
    Ff = qfi_fidelity(lambda w: squeezed_vacuum(basis, jcm_np_solution(q.with_omega(w)).gamma_t), 0.25).value
    assert Ff == pytest.approx(Fa, rel=1e-4)


def test_jcm_analytic_examples():
    assert qfi_jcm_analytic(JcmParams.scaled(2.5e5, 0.25, 0.5, 0.0)).value == 0
    r = 1e-3
    q = JcmParams.scaled(2.5e5, 0.25, 1 - 3 * r, r)
    assert 1 / (2 * 0.25 ** 2 * 64) * r ** -2 == pytest.approx(125000.0)
    assert qfi_jcm_analytic(q).value == pytest.approx(125000.0, rel=5e-3)
    # beta = 1/2 gives a finite limit 1/(2 w^2 k^4)
    r = 1e-10
    q = JcmParams.scaled(2.5e5, 0.25, 1 - 3 * math.sqrt(r), r)
    assert qfi_jcm_analytic(q).value == pytest.approx(1 / (2 * 0.25 ** 2 * 81), rel=1e-3)


def test_snr_zero_variance():
    v = squeezed_vacuum(FockBasis(10), 0.0)
    with pytest.raises(ZeroVariance):
        snr_photon_number(v, [(1e-5, v, v)])


def test_snr_saturates_qfi_near_triple_point():
    p = P(0.998, 0.001)
    c = np_coefficients(p)[1]
    S = snr_from_runner(lambda w: ground_gaussian(np_coefficients(p.with_omega(w))[0], c), W)
    assert S.value == pytest.approx(qfi_np_analytic(p).value, rel=1e-3)
    assert S.value == pytest.approx(S.dn_domega ** 2 / S.var_n, rel=1e-15)


@given(st.tuples(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9)).filter(
    lambda s: abs(s[0] + s[1]) < 0.9 and abs(s[0] - s[1]) < 0.9 and abs(s[0] * s[1]) > 1e-3))
def test_snr_equals_qfi_property(s):
    p = P(*s)
    c = np_coefficients(p)[1]
    S = snr_from_runner(lambda w: ground_gaussian(np_coefficients(p.with_omega(w))[0], c), W)
    assert S.value == pytest.approx(qfi_np_analytic(p).value, rel=1e-3)


@given(st.floats(1.05, 5.0))
def test_monotone_divergence(k):
    us = np.logspace(-1.0, -6, 30) / k
    F = [qfi_np_analytic(P(1 - k * u, u)).value for u in us]
    assert np.all(np.diff(F) > 0)


@pytest.mark.parametrize("beta", [1 / 3, 0.5, 2 / 3, 1.0])
def test_table_regimes(beta):
    k, u = 2.0, 1e-4
    F = qfi_np_analytic(P(1 - k * u ** beta, u)).value
    if beta == 1.0:
        ref = u ** -2 / (8 * W * W * (k * k - 1) ** 2)
    else:
        ref = u ** (2 * (1 - 2 * beta)) / (8 * W * W * k ** 4)
    assert F == pytest.approx(ref, rel=0.05)


def test_jcm_coefficients_match_solution():
    q = JcmParams.scaled(2.5e5, 0.25, 0.5, 0.1)
    A, c = jcm_coefficients(q)
    assert math.sqrt(A * A - 4 * c * c) == pytest.approx(jcm_np_solution(q).Delta_t)
