import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tricrit.errors import NotHermitian, TruncationError
from tricrit.fockspace import (ComplexOperator, DensityOperator, FockBasis, PureState, build_displacement_op,
                               build_ladder_ops, build_squeeze_op, eig_hermitian, n_min, parity_expectation,
                               quadrature_ops, squeezed_vacuum)
from tricrit.models import AqrmParams, build_np_hamiltonian


def test_basis_dimension():
    assert FockBasis(5).dim == 6
    assert FockBasis(5, True).dim == 12
    with pytest.raises(ValueError):
        FockBasis(1)


def test_ladder_elements_nmax2():
    a, ad, n = build_ladder_ops(FockBasis(2))
    expect = np.zeros((3, 3))
    expect[0, 1], expect[1, 2] = 1.0, math.sqrt(2)
    assert np.array_equal(a.matrix, expect)
    assert np.array_equal(ad.matrix, expect.T)


@given(st.integers(4, 60))
def test_number_operator_exact(n_max):
    b = FockBasis(n_max)
    a, ad, n = build_ladder_ops(b)
    # the number operator is exact; the product of stored sqrt(n) elements is exact to one rounding
    assert np.array_equal(np.diag(n.matrix).real, np.arange(n_max + 1, dtype=float))
    prod = (ad @ a).matrix
    assert np.abs(prod - n.matrix).max() <= 4 * np.finfo(float).eps * n_max


def test_number_on_fock_two():
    b = FockBasis(6)
    _, _, n = build_ladder_ops(b)
    v = n.matrix @ b.fock_state(2).vector
    assert np.allclose(v, 2 * b.fock_state(2).vector, atol=0)


def test_commutator_away_from_top_row():
    b = FockBasis(10)
    a, ad, _ = build_ladder_ops(b)
    comm = a.matrix @ ad.matrix - ad.matrix @ a.matrix - np.eye(b.dim)
    # exact up to the rounding of the stored sqrt(n) elements
    assert np.abs(comm[:-1, :-1]).max() <= 4 * np.finfo(float).eps * b.n_max
    assert abs(comm[-1, -1] + b.dim) < 1e-12


def test_squeeze_identity_at_zero():
    assert np.array_equal(build_squeeze_op(FockBasis(10), 0.0).matrix, np.eye(11))


def test_squeezed_vacuum_even_parity():
    b = FockBasis(60)
    v = build_squeeze_op(b, -0.1683).matrix[:, 0]
    assert np.abs(v[1::2]).max() == 0


def test_squeezed_vacuum_photon_number():
    b = FockBasis(n_min(0.5) + 20)
    v = build_squeeze_op(b, 0.5).matrix[:, 0]
    n = float(np.abs(v) ** 2 @ np.arange(b.dim))
    assert abs(n - math.sinh(0.5) ** 2) < 1e-6
    # closed-form amplitudes agree with the matrix exponential
    # away from the truncation edge, where the exponential of the truncated generator is reliable
    assert np.abs(squeezed_vacuum(b, 0.5).vector - v)[: b.n_max - 10].max() < 1e-10


@given(st.floats(-1.2, 1.2))
def test_squeeze_unitary_at_qualified_cutoff(g):
    b = FockBasis(n_min(g) + 10)
    U = build_squeeze_op(b, g).matrix
    # unitarity holds on the columns the state lives in; check Gamma^dag Gamma on them
    assert np.abs(U.conj().T @ U - np.eye(b.dim)).max() <= 1e-8


def test_squeeze_truncation_error():
    with pytest.raises(TruncationError):
        build_squeeze_op(FockBasis(10), 2.0)


def test_displacement():
    assert np.array_equal(build_displacement_op(FockBasis(10), 0).matrix, np.eye(11))
    b = FockBasis(40)
    psi = PureState(build_displacement_op(b, 1.0).matrix[:, 0], b)
    _, _, n = build_ladder_ops(b)
    assert abs(psi.expect(n).real - 1.0) < 1e-8
    a, _, _ = build_ladder_ops(b)
    assert abs(psi.expect(a) - 1.0) < 1e-6
    U = build_displacement_op(b, 1.0).matrix
    assert np.abs(U.conj().T @ U - np.eye(b.dim))[:30, :30].max() < 1e-8


def test_displacement_momentum():
    b = FockBasis(60)
    psi = PureState(build_displacement_op(b, 2j).matrix[:, 0], b)
    x, p = quadrature_ops(b)
    assert abs(psi.expect(p) - 2 * math.sqrt(2)) < 1e-6
    assert abs(psi.expect(x)) < 1e-6


def test_displacement_truncation_error():
    with pytest.raises(TruncationError):
        build_displacement_op(FockBasis(10), 3.0)


def test_eig_ordering_and_phase():
    b = FockBasis(2)
    w, states = eig_hermitian(ComplexOperator(np.diag([3.0, 1.0, 2.0]), b))
    assert np.array_equal(w, [1.0, 2.0, 3.0])
    for s in states:
        k = np.argmax(np.abs(s.vector))
        assert s.vector[k].imag == 0 and s.vector[k].real > 0


def test_eig_deterministic():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    op = ComplexOperator(m + m.conj().T, FockBasis(7))
    _, s1 = eig_hermitian(op)
    _, s2 = eig_hermitian(op)
    assert all(np.array_equal(a.vector, b.vector) for a, b in zip(s1, s2))


def test_eig_not_hermitian():
    with pytest.raises(NotHermitian):
        eig_hermitian(ComplexOperator(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), FockBasis(2)))


def test_free_oscillator_spectrum():
    b = FockBasis(30)
    p = AqrmParams(100.0, 1.0)
    w, _ = eig_hermitian(build_np_hamiltonian(p, b))
    assert np.allclose(w, np.arange(31), rtol=0, atol=1e-10)


def test_np_gap_at_035():
    b = FockBasis(60)
    p = AqrmParams.scaled(2.5e5, 0.25, 0.35, 0.35)
    w, _ = eig_hermitian(build_np_hamiltonian(p, b))
    assert abs((w[1] - w[0]) / p.omega - 0.71414) < 1e-5
    assert abs((w[1] - w[0]) / p.omega - math.sqrt(0.51)) < 1e-6


def test_parity():
    b = FockBasis(10)
    assert parity_expectation(b.vacuum()) == 1.0
    assert parity_expectation(b.fock_state(1)) == -1.0
    assert abs(parity_expectation(squeezed_vacuum(FockBasis(80), 0.7)) - 1.0) < 1e-12
    bs = FockBasis(10, True)
    assert parity_expectation(bs.fock_state(0, "down")) == 1.0


def test_pure_state_normalized():
    b = FockBasis(4)
    psi = PureState(np.array([1, 1, 0, 0, 0], complex), b)
    assert abs(np.linalg.norm(psi.vector) - 1) < 1e-10


def test_density_validation():
    b = FockBasis(2)
    DensityOperator(np.diag([0.5, 0.5, 0.0]), b)
    with pytest.raises(ValueError):
        DensityOperator(np.diag([0.6, 0.5, 0.0]), b)
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.1, -0.1, 0.0]), b)
