"""Truncated Fock-space kernel for one bosonic mode, optionally tensored with a spin.

Tensor order is spin (x) boson, with spin index 0 = up so that
``sigma_z = diag(1, -1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import linalg
from scipy.stats import poisson

from .errors import NotHermitian, TruncationError

DEFAULT_NMAX = 120
LEAKAGE_TOL = 1e-6
HERM_TOL = 1e-12


def n_min(gamma: float) -> int:
    """Smallest Fock cutoff trusted for a squeezed vacuum of factor gamma."""
    return int(math.ceil(12.0 * math.exp(2.0 * abs(gamma))))


@dataclass(frozen=True)
class FockBasis:
    n_max: int = DEFAULT_NMAX
    with_spin: bool = False

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")

    @property
    def n_boson(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.n_boson * (2 if self.with_spin else 1)

    def photon_numbers(self) -> np.ndarray:
        n = np.arange(self.n_boson, dtype=float)
        return np.concatenate([n, n]) if self.with_spin else n

    def spin_z(self) -> np.ndarray:
        if not self.with_spin:
            raise ValueError("basis has no spin")
        return np.repeat([1.0, -1.0], self.n_boson)

    def fock_state(self, n: int, spin: str | None = None) -> "PureState":
        psi = np.zeros(self.dim, complex)
        if self.with_spin:
            if spin not in ("up", "down"):
                raise ValueError("spin must be 'up' or 'down' for a spin basis")
            psi[(0 if spin == "up" else self.n_boson) + n] = 1.0
        else:
            psi[n] = 1.0
        return PureState(psi, self)

    def vacuum(self) -> "PureState":
        return self.fock_state(0, "down" if self.with_spin else None)


def _frozen(m):
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


class ComplexOperator:
    """Dense square matrix attached to a basis; immutable."""

    __slots__ = ("matrix", "basis", "_herm")

    def __init__(self, matrix, basis: FockBasis):
        m = _frozen(matrix)
        if m.shape != (basis.dim, basis.dim):
            raise ValueError(f"operator shape {m.shape} does not match basis dim {basis.dim}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_herm", None)

    def __setattr__(self, k, v):
        raise AttributeError("ComplexOperator is immutable")

    @property
    def is_hermitian(self) -> bool:
        if self._herm is None:
            m = self.matrix
            scale = np.abs(m).max() if m.size else 0.0
            dev = np.abs(m - m.conj().T).max() if m.size else 0.0
            object.__setattr__(self, "_herm", bool(dev <= HERM_TOL * max(scale, 1e-300)))
        return self._herm

    @property
    def dag(self) -> "ComplexOperator":
        return ComplexOperator(self.matrix.conj().T, self.basis)

    def __matmul__(self, other):
        if isinstance(other, ComplexOperator):
            return ComplexOperator(self.matrix @ other.matrix, self.basis)
        if isinstance(other, PureState):
            return PureState(self.matrix @ other.vector, self.basis, other.norm_leakage, normalize=False)
        return self.matrix @ other

    def __add__(self, other):
        return ComplexOperator(self.matrix + other.matrix, self.basis)

    def __sub__(self, other):
        return ComplexOperator(self.matrix - other.matrix, self.basis)

    def __mul__(self, c):
        return ComplexOperator(c * self.matrix, self.basis)

    __rmul__ = __mul__

    def __repr__(self):
        return f"ComplexOperator(dim={self.basis.dim}, hermitian={self.is_hermitian})"


class PureState:
    """Normalized state vector plus the amplitude lost to truncation."""

    __slots__ = ("vector", "basis", "norm_leakage")

    def __init__(self, vector, basis: FockBasis, norm_leakage: float = 0.0, normalize=True):
        v = np.array(vector, dtype=complex)
        if v.shape != (basis.dim,):
            raise ValueError(f"state length {v.shape} does not match basis dim {basis.dim}")
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("zero vector")
        if normalize:
            v = v / nrm
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "norm_leakage", float(norm_leakage))

    def __setattr__(self, k, v):
        raise AttributeError("PureState is immutable")

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.vector, other.vector))

    def infidelity(self, other: "PureState") -> float:
        """1 - |<self|other>| evaluated without cancellation."""
        ov = np.vdot(self.vector, other.vector)
        ph = ov / abs(ov) if abs(ov) > 0 else 1.0
        d = other.vector - ph * self.vector
        return 0.5 * float(np.vdot(d, d).real)

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, ComplexOperator) else op
        return complex(np.vdot(self.vector, m @ self.vector))

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.vector, self.vector.conj()), self.basis)

    def __repr__(self):
        return f"PureState(dim={self.basis.dim}, leakage={self.norm_leakage:.2e})"


class DensityOperator:
    __slots__ = ("matrix", "basis")

    def __init__(self, matrix, basis: FockBasis, check=True):
        m = _frozen(matrix)
        if m.shape != (basis.dim, basis.dim):
            raise ValueError("density matrix shape mismatch")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis", basis)
        if check:
            self.validate()

    def __setattr__(self, k, v):
        raise AttributeError("DensityOperator is immutable")

    def validate(self, herm_tol=1e-10, trace_tol=1e-8, neg_tol=1e-8):
        m = self.matrix
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(m) - 1.0) > trace_tol:
            raise ValueError(f"trace {np.trace(m).real} != 1")
        if self.min_eigenvalue() < -neg_tol:
            raise ValueError("density matrix has negative eigenvalues")

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(linalg.eigvalsh(h)[0])

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, ComplexOperator) else op
        return complex(np.sum(m.T * self.matrix))

    def fidelity_to(self, psi: PureState) -> float:
        return float(np.vdot(psi.vector, self.matrix @ psi.vector).real)


@lru_cache(maxsize=64)
def _boson_ladder(n_max: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)
    a.flags.writeable = False
    return a


def _embed(boson_mat, basis: FockBasis):
    if basis.with_spin:
        return np.kron(np.eye(2), boson_mat)
    return boson_mat


def build_ladder_ops(basis: FockBasis):
    """Return (a, a_dagger, n) as ComplexOperators."""
    a = _boson_ladder(basis.n_max)
    num = np.diag(np.arange(basis.n_boson, dtype=float))
    return (ComplexOperator(_embed(a, basis), basis),
            ComplexOperator(_embed(a.T, basis), basis),
            ComplexOperator(_embed(num, basis), basis))


def build_spin_ops(basis: FockBasis):
    """Return (sigma_z, sigma_plus, sigma_minus) on a spin basis."""
    if not basis.with_spin:
        raise ValueError("spin operators need a with_spin basis")
    eye = np.eye(basis.n_boson)
    sz = np.kron(np.diag([1.0, -1.0]), eye)
    sp = np.kron(np.array([[0.0, 1.0], [0.0, 0.0]]), eye)
    return (ComplexOperator(sz, basis), ComplexOperator(sp, basis),
            ComplexOperator(sp.T, basis))


def parity_diagonal(basis: FockBasis) -> np.ndarray:
    """Diagonal of the parity operator.

    Bosonic basis: (-1)^n.  Spin basis: -sigma_z (-1)^n, i.e. the symmetry
    exp[i pi (a^dag a + sigma_z/2)] times i, fixed so that vacuum (x) down is +1.
    """
    par = (-1.0) ** np.arange(basis.n_boson)
    if basis.with_spin:
        return -basis.spin_z() * np.concatenate([par, par])
    return par


def build_parity_op(basis: FockBasis) -> ComplexOperator:
    return ComplexOperator(np.diag(parity_diagonal(basis)), basis)


def squeezed_vacuum_amplitudes(gamma: float, n_max: int) -> tuple[np.ndarray, float]:
    """Exact Fock amplitudes of Gamma(gamma)|0>, truncated, and the dropped weight."""
    t = math.tanh(gamma)
    c = np.zeros(n_max + 1)
    c[0] = 1.0 / math.sqrt(math.cosh(gamma))
    for m in range(1, n_max // 2 + 1):
        c[2 * m] = c[2 * m - 2] * (-t) * math.sqrt((2 * m - 1) / (2 * m))
    kept = float(np.sum(c * c))
    return c, max(0.0, 1.0 - kept)


def build_squeeze_op(basis: FockBasis, gamma: float) -> ComplexOperator:
    """Gamma(gamma) = exp[gamma (a^2 - a^dag^2) / 2] on a bosonic basis."""
    if basis.with_spin:
        raise ValueError("squeeze operator is built on a bosonic basis")
    if abs(gamma) > 5:
        raise ValueError(f"|gamma| = {abs(gamma)} exceeds 5")
    if gamma == 0:
        return ComplexOperator(np.eye(basis.dim), basis)
    a = _boson_ladder(basis.n_max)
    a2 = a @ a
    U = linalg.expm(0.5 * gamma * (a2 - a2.T))
    _, leak = squeezed_vacuum_amplitudes(gamma, basis.n_max)
    dev = np.abs(U.T @ U - np.eye(basis.dim)).max()
    if leak > LEAKAGE_TOL or dev > 1e-8:
        raise TruncationError(
            f"n_max={basis.n_max} too small for gamma={gamma:.4g} "
            f"(leakage {leak:.2e}, need n_max >= {n_min(gamma)})")
    return ComplexOperator(U, basis)


def squeezed_vacuum(basis: FockBasis, gamma: float) -> PureState:
    """Gamma(gamma)|0> from the closed-form amplitudes."""
    if basis.with_spin:
        raise ValueError("bosonic basis required")
    c, leak = squeezed_vacuum_amplitudes(gamma, basis.n_max)
    if leak > LEAKAGE_TOL:
        raise TruncationError(f"squeezed vacuum leaks {leak:.2e} beyond n_max={basis.n_max}")
    return PureState(c, basis, norm_leakage=leak)


def build_displacement_op(basis: FockBasis, alpha: complex) -> ComplexOperator:
    """D(alpha) = exp(alpha a^dag - alpha^* a) on a bosonic basis."""
    if basis.with_spin:
        raise ValueError("displacement operator is built on a bosonic basis")
    r = abs(alpha)
    if r == 0:
        return ComplexOperator(np.eye(basis.dim), basis)
    if r * r + 6 * r > basis.n_max:
        raise TruncationError(f"|alpha|={r:.3g} does not fit in n_max={basis.n_max}")
    leak = float(poisson.sf(basis.n_max, r * r))
    if leak > LEAKAGE_TOL:
        raise TruncationError(f"coherent state leaks {leak:.2e} beyond n_max={basis.n_max}")
    a = _boson_ladder(basis.n_max)
    U = linalg.expm(alpha * a.T - np.conj(alpha) * a)
    return ComplexOperator(U, basis)


def eig_hermitian(op: ComplexOperator):
    """Ascending eigenvalues and phase-fixed eigenvectors of a Hermitian operator."""
    if not op.is_hermitian:
        raise NotHermitian("eig_hermitian needs a Hermitian operator")
    m = op.matrix
    w, v = linalg.eigh(m)
    idx = np.argmax(np.abs(v), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(ph) / ph)[None, :]
    scale = max(np.abs(m).max(), 1e-300)
    res = np.linalg.norm(m @ v - v * w[None, :], axis=0).max()
    if res > 1e-9 * scale * max(1.0, np.sqrt(m.shape[0])):
        raise ArithmeticError(f"eigen-residual {res:.2e} too large")
    states = [PureState(v[:, i], op.basis, normalize=False) for i in range(v.shape[1])]
    return w, states


def number_moments(state):
    """(<n>, var n) for a PureState or DensityOperator."""
    n = state.basis.photon_numbers()
    if isinstance(state, PureState):
        p = np.abs(state.vector) ** 2
    else:
        p = np.real(np.diag(state.matrix))
    mean = float(p @ n)
    return mean, float(p @ (n - mean) ** 2)


def parity_expectation(state, basis: FockBasis | None = None) -> float:
    basis = basis or state.basis
    par = parity_diagonal(basis)
    if isinstance(state, PureState):
        return float(par @ (np.abs(state.vector) ** 2))
    return float(par @ np.real(np.diag(state.matrix)))


def quadrature_ops(basis: FockBasis):
    """x = (a^dag + a)/sqrt2 and p = i(a^dag - a)/sqrt2."""
    a, ad, _ = build_ladder_ops(basis)
    x = (ad.matrix + a.matrix) / math.sqrt(2)
    p = 1j * (ad.matrix - a.matrix) / math.sqrt(2)
    return ComplexOperator(x, basis), ComplexOperator(p, basis)
