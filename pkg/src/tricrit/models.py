"""Model parameters, Hamiltonian builders and closed-form phase solutions.

Two models share one mathematical core, a single squeezed mode

    H = A a^dag a + c (a^dag^2 + a^2),

whose ground state is Gamma(gamma)|0> with gamma = 1/4 ln[(A+2c)/(A-2c)]
and whose gap is sqrt(A^2 - 4c^2).  For the anisotropic Rabi model in its
normal phase A = omega (1 - (g1^2+g2^2)/gc^2) and c = -omega g1 g2 / gc^2;
for the squeezed-mode Jaynes-Cummings model A = wt (1 - gt^2/gtc^2), c = h/2.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
import math

import numpy as np

from .errors import AmbiguousRegion, ConfigError, PhaseError
from .fockspace import ComplexOperator, FockBasis, _boson_ladder

PHASE_TOL = 1e-9


@dataclass(frozen=True)
class AqrmParams:
    """Anisotropic Rabi model; couplings are absolute (same units as the frequencies)."""
    Omega: float
    omega: float
    g1: float = 0.0
    g2: float = 0.0

    def __post_init__(self):
        if not (self.Omega > 0 and self.omega > 0):
            raise ConfigError("Omega and omega must be positive")

    @property
    def gc(self) -> float:
        return 2.0 * math.sqrt(self.Omega * self.omega)

    @classmethod
    def scaled(cls, Omega, omega, s1, s2):
        """Build from couplings given in units of gc."""
        gc = 2.0 * math.sqrt(Omega * omega)
        return cls(Omega, omega, s1 * gc, s2 * gc)

    @property
    def s1(self):
        return self.g1 / self.gc

    @property
    def s2(self):
        return self.g2 / self.gc

    def with_couplings(self, g1, g2):
        return replace(self, g1=g1, g2=g2)

    def with_omega(self, omega):
        """Shift the field frequency while holding the absolute couplings fixed."""
        return replace(self, omega=omega)


@dataclass(frozen=True)
class JcmParams:
    Omega_t: float
    omega_t: float
    g_t: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not (self.Omega_t > 0 and self.omega_t > 0):
            raise ConfigError("frequencies must be positive")
        if self.g_t < 0:
            raise ConfigError("g_t must be non-negative")
        if abs(self.h) > self.omega_t:
            raise ConfigError("|h| must not exceed omega_t")

    @property
    def gt_c(self) -> float:
        return 2.0 * math.sqrt(self.Omega_t * self.omega_t)

    @property
    def x(self):
        return (self.g_t / self.gt_c) ** 2

    @property
    def r(self):
        return self.h / self.omega_t

    @classmethod
    def scaled(cls, Omega_t, omega_t, x, r):
        """Build from x = gt^2/gtc^2 and r = h/omega_t."""
        gtc = 2.0 * math.sqrt(Omega_t * omega_t)
        return cls(Omega_t, omega_t, gtc * math.sqrt(x), r * omega_t)

    def with_omega(self, omega_t):
        return replace(self, omega_t=omega_t)


class PhaseLabel(str, Enum):
    NP = "NP"
    SP_x = "SP_x"
    SP_p = "SP_p"
    Boundary = "Boundary"
    TriplePoint = "TriplePoint"


@dataclass(frozen=True)
class NpSolution:
    gamma: float
    Delta: float
    E0: float
    N: float
    dx: float
    dp: float


@dataclass(frozen=True)
class SpSolution:
    branch: str
    alpha: complex
    gamma_p: float
    Delta_p: float
    Omega_p: float
    g1p: float
    g2p: float
    gcp: float
    energy: float

    @property
    def mean_x(self):
        return math.sqrt(2.0) * self.alpha.real

    @property
    def mean_p(self):
        return math.sqrt(2.0) * self.alpha.imag


@dataclass(frozen=True)
class JcmNpSolution:
    gamma_t: float
    Delta_t: float


def quadratic_mode(A: float, c: float):
    """(gamma, gap) of A a^dag a + c (a^dag^2 + a^2); requires A > 2|c|."""
    lo, hi = A - 2 * c, A + 2 * c
    if not (lo > 0 and hi > 0):
        raise PhaseError(f"quadratic mode unstable: A={A:.6g}, c={c:.6g}")
    return 0.25 * math.log(hi / lo), math.sqrt(lo * hi)


def classify_phase(p: AqrmParams, tol: float = PHASE_TOL) -> PhaseLabel:
    gc = p.gc
    t = tol * gc
    a1, a2 = abs(p.g1), abs(p.g2)
    if (abs(a1 - gc) <= t and a2 <= t) or (abs(a2 - gc) <= t and a1 <= t):
        return PhaseLabel.TriplePoint
    dp = abs(p.g1 + p.g2) - gc
    dm = abs(p.g1 - p.g2) - gc
    if dp < -t and dm < -t:
        return PhaseLabel.NP
    prod = p.g1 * p.g2
    if prod == 0 and dp > t and dm > t:
        raise AmbiguousRegion(f"(g1, g2) = ({p.g1}, {p.g2}) lies on the SP_x/SP_p line")
    if min(a1, a2) > t:
        if prod > 0 and dp > t:
            return PhaseLabel.SP_x
        if prod < 0 and dm > t:
            return PhaseLabel.SP_p
    return PhaseLabel.Boundary


def np_coefficients(p: AqrmParams):
    """(A, c) of the effective normal-phase mode."""
    gc2 = p.gc ** 2
    A = p.omega * (1.0 - (p.g1 ** 2 + p.g2 ** 2) / gc2)
    c = -p.omega * p.g1 * p.g2 / gc2
    return A, c


def _require_np(p: AqrmParams):
    lab = classify_phase(p)
    if lab is not PhaseLabel.NP:
        raise PhaseError(f"point (g1/gc, g2/gc) = ({p.s1:.6g}, {p.s2:.6g}) is {lab.value}, not NP")


def np_gap(p: AqrmParams) -> float:
    sp = (p.g1 + p.g2) / p.gc
    sm = (p.g1 - p.g2) / p.gc
    return p.omega * math.sqrt((1 - sm * sm) * (1 - sp * sp))


def np_gamma(p: AqrmParams) -> float:
    gc2 = p.gc ** 2
    return 0.25 * math.log((gc2 - (p.g1 + p.g2) ** 2) / (gc2 - (p.g1 - p.g2) ** 2))


def np_solution(p: AqrmParams) -> NpSolution:
    _require_np(p)
    gamma = np_gamma(p)
    Delta = np_gap(p)
    E0 = -(p.Omega + p.omega) / 2 + 0.5 * p.omega * (p.g1 ** 2 - p.g2 ** 2) / p.gc ** 2 + Delta / 2
    N = 0.5 * (math.cosh(2 * gamma) - 1)
    return NpSolution(gamma, Delta, E0, N, math.exp(-gamma) / math.sqrt(2), math.exp(gamma) / math.sqrt(2))


def _sp_branch(p: AqrmParams, branch: str) -> SpSolution:
    gc = p.gc
    if branch == "x":
        G = p.g1 + p.g2
        D = p.g1 - p.g2
        g1p = -0.5 * (D + gc ** 2 / G)
        g2p = 0.5 * (D - gc ** 2 / G)
    else:
        G = p.g1 - p.g2
        D = p.g1 + p.g2
        g1p = -0.5 * (D + gc ** 2 / G)
        g2p = -0.5 * (D - gc ** 2 / G)
    u = (G / gc) ** 2
    if u <= 1:
        raise PhaseError(f"branch {branch} needs |g1 {'+' if branch == 'x' else '-'} g2| > gc")
    amp = p.Omega / abs(G) * math.sqrt(u * u - 1)
    alpha = complex(amp, 0.0) if branch == "x" else complex(0.0, amp)
    Omp = p.Omega * u
    prim = AqrmParams(Omp, p.omega, g1p, g2p)
    A, c = np_coefficients(prim)
    gamma_p, Delta_p = quadratic_mode(A, c)
    energy = (-0.25 * p.Omega * (u + 1 / u) - 0.5 * p.omega
              + 0.5 * p.omega * (D / G) * (gc / G) ** 2 + 0.5 * Delta_p)
    return SpSolution(f"{branch}-type", alpha, gamma_p, Delta_p, Omp, g1p, g2p, prim.gc, energy)


def sp_branch_energies(p: AqrmParams) -> dict:
    """Ground energies of whichever displaced branches exist at this point."""
    out = {}
    for b in ("x", "p"):
        try:
            out[b] = _sp_branch(p, b).energy
        except (PhaseError, ZeroDivisionError):
            pass
    return out


def sp_solution(p: AqrmParams, branch: str | None = None) -> SpSolution:
    """Superradiant solution; `branch` ('x' or 'p') selects a side of a degenerate line."""
    if branch is None:
        lab = classify_phase(p)
        if lab is PhaseLabel.SP_x:
            branch = "x"
        elif lab is PhaseLabel.SP_p:
            branch = "p"
        else:
            raise PhaseError(f"point is {lab.value}, not a superradiant phase")
    elif branch not in ("x", "p"):
        raise ValueError("branch must be 'x' or 'p'")
    return _sp_branch(p, branch)


@lru_cache(maxsize=16)
def _aqrm_terms(basis: FockBasis):
    a = _boson_ladder(basis.n_max)
    eye_b = np.eye(basis.n_boson)
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sz = np.kron(np.diag([1.0, -1.0]), eye_b)
    num = np.kron(np.eye(2), np.diag(np.arange(basis.n_boson, dtype=float)))
    A = np.kron(np.eye(2), a)
    Sp = np.kron(sp, eye_b)
    Sm = Sp.T
    c1 = A.T @ Sm + A @ Sp
    c2 = A.T @ Sp + A @ Sm
    for m in (sz, num, c1, c2):
        m.flags.writeable = False
    return sz, num, c1, c2


def build_full_aqrm(p: AqrmParams, basis: FockBasis) -> ComplexOperator:
    if not basis.with_spin:
        raise ValueError("full model needs a with_spin basis")
    sz, num, c1, c2 = _aqrm_terms(basis)
    H = 0.5 * p.Omega * sz + p.omega * num + 0.5 * p.g1 * c1 + 0.5 * p.g2 * c2
    return ComplexOperator(H, basis)


class LinearBuilder:
    """Hamiltonian builder that is linear in a few parameter combinations.

    Calling it builds the operator; `terms` and `coefficients(p)` expose the
    fixed real matrices and their weights so integrators can reassemble H
    without rebuilding it.
    """

    def __init__(self, build, terms, coefficients):
        self._build = build
        self.terms = terms
        self.coefficients = coefficients

    def __call__(self, p):
        return self._build(p)


def full_aqrm_builder(basis: FockBasis) -> LinearBuilder:
    return LinearBuilder(lambda p: build_full_aqrm(p, basis), _aqrm_terms(basis),
                         lambda p: (0.5 * p.Omega, p.omega, 0.5 * p.g1, 0.5 * p.g2))


@lru_cache(maxsize=16)
def _mode_terms(n_max: int):
    a = _boson_ladder(n_max)
    num = np.diag(np.arange(n_max + 1, dtype=float))
    two = a @ a
    two = two + two.T
    num.flags.writeable = False
    two.flags.writeable = False
    return num, two


def build_quadratic_mode(A: float, c: float, basis: FockBasis) -> ComplexOperator:
    if basis.with_spin:
        raise ValueError("effective model lives on a bosonic basis")
    num, two = _mode_terms(basis.n_max)
    return ComplexOperator(A * num + c * two, basis)


def build_np_hamiltonian(p: AqrmParams, basis: FockBasis) -> ComplexOperator:
    """Effective normal-phase field Hamiltonian with constants dropped."""
    _require_np(p)
    return build_quadratic_mode(*np_coefficients(p), basis)


def jcm_coefficients(p: JcmParams):
    return p.omega_t * (1.0 - p.x), 0.5 * p.h


def jcm_in_np(p: JcmParams) -> bool:
    return abs(p.r) < 1.0 - p.x


def _require_jcm_np(p: JcmParams):
    if not jcm_in_np(p):
        raise PhaseError(f"JCM point x={p.x:.6g}, h/wt={p.r:.6g} outside the normal phase")


def jcm_np_solution(p: JcmParams) -> JcmNpSolution:
    _require_jcm_np(p)
    one = 1.0 - p.x
    r = p.r
    return JcmNpSolution(0.25 * math.log((one + r) / (one - r)),
                         p.omega_t * math.sqrt(one * one - r * r))


def build_jcm_np_hamiltonian(p: JcmParams, basis: FockBasis) -> ComplexOperator:
    _require_jcm_np(p)
    return build_quadratic_mode(*jcm_coefficients(p), basis)


def mean_field_energy(p: AqrmParams, alpha: complex) -> float:
    """Semiclassical energy with the spin relaxed to its lower eigenstate."""
    z = p.g1 * np.conj(alpha) + p.g2 * alpha
    return p.omega * abs(alpha) ** 2 - 0.5 * math.sqrt(p.Omega ** 2 + abs(z) ** 2)


@dataclass(frozen=True)
class GroundObservables:
    label: str
    alpha: complex
    abs_alpha: float
    dx: float
    dp: float


def ground_observables(p: AqrmParams) -> GroundObservables:
    """Displacement and quadrature widths of the ground state anywhere in the plane.

    On the degenerate SP_x/SP_p line both branches have the same |alpha| but
    the direction of alpha is undetermined, and the displaced-frame mode is
    gapless there; those entries are NaN, as are the widths on NP-SP boundaries.
    """
    nan = float("nan")
    try:
        lab = classify_phase(p)
    except AmbiguousRegion:
        G = abs(p.g1 + p.g2)
        amp = p.Omega / G * math.sqrt((G / p.gc) ** 4 - 1)
        return GroundObservables("Degenerate", complex(nan, nan), amp, nan, nan)
    if lab is PhaseLabel.NP:
        s = np_solution(p)
        return GroundObservables(lab.value, 0j, 0.0, s.dx, s.dp)
    if lab in (PhaseLabel.SP_x, PhaseLabel.SP_p):
        s = sp_solution(p)
        r = math.sqrt(0.5)
        return GroundObservables(lab.value, s.alpha, abs(s.alpha), r * math.exp(-s.gamma_p), r * math.exp(s.gamma_p))
    return GroundObservables(lab.value, 0j, 0.0, nan, nan)
