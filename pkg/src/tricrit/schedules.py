"""Adiabatic paths toward a critical point, gap-slaved ramp laws and time grids.

Every path is parameterized by a dimensionless swept coordinate u: g2/gc for
the triple-point paths, g1/gc for the boundary approach and h/wt for the
squeezed JCM.  Along each path `distance(u)` measures how far the point is
from the gap closing; time grids are built uniformly in ln(distance).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConfigError, GapClosed, NoConvergence, PhaseError, RangeError, UnsupportedCombo
from .models import AqrmParams, JcmParams, np_coefficients, jcm_coefficients


class _Path:
    model = "aqrm"
    swept = "g2"

    def couplings(self, u):
        raise NotImplementedError

    def dcouplings(self, u):
        raise NotImplementedError

    def distance(self, u):
        return np.asarray(u, float)

    def u_from_distance(self, d):
        return np.asarray(d, float)

    def du_dd(self, u):
        return np.ones_like(np.asarray(u, float))

    @property
    def u_start(self):
        raise NotImplementedError

    @property
    def u_end_default(self):
        return 1e-3

    def check_u(self, u):
        lo, hi = sorted((self.u_start, 0.0))
        u = np.asarray(u, float)
        if np.any(u <= lo) or np.any(u > hi + 1e-15):
            raise RangeError(f"{self.name}: swept value outside ({lo:g}, {hi:g}]")

    @property
    def name(self):
        return type(self).__name__

    def point(self, base, u):
        """Absolute model parameters at swept value u (base supplies the frequencies)."""
        a, b = self.couplings(u)
        if self.model == "aqrm":
            return AqrmParams.scaled(base.Omega, base.omega, float(a), float(b))
        return JcmParams.scaled(base.Omega_t, base.omega_t, float(a), float(b))

    def gap(self, base, u):
        """Exact instantaneous gap, vectorized over u."""
        a, b = self.couplings(np.asarray(u, float))
        if self.model == "aqrm":
            sp, sm = a + b, a - b
            f1, f2 = 1 - sm * sm, 1 - sp * sp
            if np.any(f1 <= 0) or np.any(f2 <= 0):
                raise PhaseError(f"{self.name}: path leaves the normal phase")
            return base.omega * np.sqrt(f1 * f2)
        one = 1 - a
        if np.any(one - np.abs(b) <= 0):
            raise PhaseError(f"{self.name}: path leaves the normal phase")
        return base.omega_t * np.sqrt(one * one - b * b)

    def gamma(self, u):
        a, b = self.couplings(np.asarray(u, float))
        if self.model == "aqrm":
            return 0.25 * np.log((1 - (a + b) ** 2) / (1 - (a - b) ** 2))
        return 0.25 * np.log((1 - a + b) / (1 - a - b))

    def dgamma_du(self, u):
        u = np.asarray(u, float)
        a, b = self.couplings(u)
        da, db = self.dcouplings(u)
        if self.model == "aqrm":
            sp, sm = a + b, a - b
            return 0.5 * (-sp * (da + db) / (1 - sp * sp) + sm * (da - db) / (1 - sm * sm))
        one = 1 - a
        return 0.25 * ((-da + db) / (one + b) - (-da - db) / (one - b))

    def quadratic(self, base, u):
        """(A, c) of the instantaneous mode at fixed absolute couplings."""
        return _coeffs(self.point(base, u))


def _coeffs(p):
    return np_coefficients(p) if isinstance(p, AqrmParams) else jcm_coefficients(p)


@dataclass(frozen=True)
class StraightLine(_Path):
    k: float

    def __post_init__(self):
        if not self.k > 1:
            raise ConfigError("StraightLine needs k > 1")

    def couplings(self, u):
        return 1 - self.k * u, u

    def dcouplings(self, u):
        return -self.k + 0 * u, 1 + 0 * u

    @property
    def u_start(self):
        return 1 / self.k


@dataclass(frozen=True)
class Parabola(_Path):
    k: float

    def __post_init__(self):
        if not self.k > 1:
            raise ConfigError("Parabola needs k > 1")

    def couplings(self, u):
        return (1 - self.k * u) ** 2, u

    def dcouplings(self, u):
        return 2 * self.k * (self.k * u - 1), 1 + 0 * u

    @property
    def u_start(self):
        return 1 / self.k


@dataclass(frozen=True)
class PowerCurve(_Path):
    k: float
    beta: float

    def __post_init__(self):
        if not self.k > 1:
            raise ConfigError("PowerCurve needs k > 1")
        if not self.beta > 0:
            raise ConfigError("PowerCurve needs beta > 0")
        if self.beta >= 1:
            raise PhaseError("PowerCurve with beta >= 1 leaves the normal phase; beta must lie in (0, 1)")

    def couplings(self, u):
        return 1 - self.k * u ** self.beta, u

    def dcouplings(self, u):
        return -self.k * self.beta * u ** (self.beta - 1), 1 + 0 * u

    @property
    def u_start(self):
        return self.k ** (-1 / self.beta)


@dataclass(frozen=True)
class BoundaryLine(_Path):
    """g1 + eta g2 = 0 swept in g1 toward the line g1 + g2 = gc."""
    eta: float
    swept = "g1"

    def __post_init__(self):
        if not self.eta < 0:
            raise ConfigError("BoundaryLine needs eta < 0")

    @property
    def slope(self):
        return 1 - 1 / self.eta

    def couplings(self, u):
        return u, -u / self.eta

    def dcouplings(self, u):
        return 1 + 0 * u, -1 / self.eta + 0 * u

    def distance(self, u):
        return 1 - self.slope * np.asarray(u, float)

    def u_from_distance(self, d):
        return (1 - np.asarray(d, float)) / self.slope

    def du_dd(self, u):
        return -1 / self.slope + 0 * np.asarray(u, float)

    @property
    def u_start(self):
        return 0.0

    @property
    def u_end_default(self):
        return 0.999 / self.slope

    def check_u(self, u):
        u = np.asarray(u, float)
        if np.any(u < 0) or np.any(u >= 1 / self.slope):
            raise RangeError(f"BoundaryLine: g1/gc must lie in [0, {1 / self.slope:g})")


@dataclass(frozen=True)
class JcmLine(_Path):
    """1 - gt^2/gtc^2 = kt (h/wt)^bt, swept in h/wt toward zero."""
    k: float
    beta: float = 1.0
    model = "jcm"
    swept = "h"

    def __post_init__(self):
        if not self.k > 1:
            raise ConfigError("JcmLine needs k > 1")
        if not (0.5 < self.beta <= 1):
            raise ConfigError("JcmLine needs beta in (1/2, 1]")

    def couplings(self, u):
        return 1 - self.k * u ** self.beta, u

    def dcouplings(self, u):
        return -self.k * self.beta * u ** (self.beta - 1), 1 + 0 * u

    @property
    def u_start(self):
        return self.k ** (-1 / self.beta)


PATHS = {"StraightLine": StraightLine, "Parabola": Parabola, "PowerCurve": PowerCurve,
         "BoundaryLine": BoundaryLine, "JcmLine": JcmLine}


def path_from_dict(d: dict) -> _Path:
    d = dict(d)
    kind = d.pop("variant", None) or d.pop("kind", None)
    if kind not in PATHS:
        raise ConfigError(f"unknown path variant {kind!r}")
    try:
        return PATHS[kind](**d)
    except TypeError as e:
        raise ConfigError(f"bad parameters for {kind}: {e}") from None


def path_to_dict(p: _Path) -> dict:
    out = {"variant": p.name}
    out.update({k: getattr(p, k) for k in p.__dataclass_fields__})
    return out


class RampLaw(str, Enum):
    GapLinear = "GapLinear"
    GapQuadratic = "GapQuadratic"
    GapCubic = "GapCubic"
    Custom = "Custom"


@dataclass(frozen=True)
class RampSpec:
    delta: float
    law: RampLaw = RampLaw.GapLinear
    exponent: float = 1.0
    prefactor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "law", RampLaw(self.law))
        if not (0 < self.delta <= 0.1):
            raise ConfigError("ramp delta must lie in (0, 0.1]")
        if self.law is RampLaw.Custom and not self.prefactor > 0:
            raise ConfigError("custom ramp prefactor must be positive")


def _freq(base):
    return base.omega if isinstance(base, AqrmParams) else base.omega_t


def ramp_rate(path: _Path, ramp: RampSpec, base, u):
    """|du/dt| at swept value(s) u, slaved to the exact gap."""
    u = np.asarray(u, float)
    gap = path.gap(base, u)
    if np.any(gap <= 0):
        raise GapClosed("ramp rate requested where the gap has closed")
    w = _freq(base)
    dl = ramp.delta
    law = ramp.law
    if law is RampLaw.Custom:
        return ramp.prefactor * dl * w * (gap / w) ** ramp.exponent
    if isinstance(path, StraightLine):
        if law is RampLaw.GapLinear:
            return 2 * dl * gap / path.k
        if law is RampLaw.GapQuadratic:
            return 2 * dl * gap ** 2 / (path.k * w)
    elif isinstance(path, Parabola):
        if law is RampLaw.GapLinear:
            return 2 * dl * gap / (5 * path.k)
    elif isinstance(path, PowerCurve):
        if law is RampLaw.GapLinear:
            return (2 * dl / path.beta) * u * gap
    elif isinstance(path, BoundaryLine):
        if law is RampLaw.GapCubic:
            return dl * (1 - path.eta) * gap ** 3 / (4 * w * w)
    elif isinstance(path, JcmLine):
        if law is RampLaw.GapLinear:
            if path.beta == 1:
                return dl * gap
            return (2 * dl / path.beta) * u * gap
    raise UnsupportedCombo(f"ramp law {law.value} is not defined for {path.name}")


def gap_asymptote(path: _Path, base, u):
    """Leading small-distance form of the gap, for comparison with the exact value."""
    u = np.asarray(u, float)
    w = _freq(base)
    if isinstance(path, StraightLine):
        return 2 * w * math.sqrt(path.k ** 2 - 1) * u
    if isinstance(path, Parabola):
        return 2 * w * math.sqrt(4 * path.k ** 2 - 1) * u
    if isinstance(path, PowerCurve):
        return 2 * w * path.k * u ** path.beta
    if isinstance(path, BoundaryLine):
        return 2 * w * np.sqrt(-2 * path.eta * path.distance(u)) / (1 - path.eta)
    if isinstance(path, JcmLine):
        if path.beta == 1:
            return w * math.sqrt(path.k ** 2 - 1) * u
        return w * path.k * u ** path.beta
    raise UnsupportedCombo(path.name)


@dataclass(frozen=True)
class Schedule:
    path: _Path
    ramp: RampSpec
    base: object
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gap: np.ndarray
    certificate: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def control_variable(self) -> str:
        return self.path.swept

    @property
    def empty(self) -> bool:
        return len(self.t) < 2

    def couplings(self, u=None):
        """Absolute couplings along the samples: (g1, g2) or (gt, h)."""
        u = self.u if u is None else np.asarray(u, float)
        a, b = self.path.couplings(u)
        if self.path.model == "aqrm":
            gc = self.base.gc
            return a * gc, b * gc
        return self.base.gt_c * np.sqrt(a), b * self.base.omega_t

    @cached_property
    def _spline(self):
        return CubicSpline(self.t, np.log(self.path.distance(self.u)))

    def u_at(self, t):
        t = np.asarray(t, float)
        if self.empty:
            return np.full_like(t, self.u[0])
        tt = np.clip(t, 0.0, self.T)
        return self.path.u_from_distance(np.exp(self._spline(tt)))

    def params_at(self, t, omega=None):
        """Model parameters at time t.  `omega` shifts the field frequency
        while the absolute couplings stay those of the reference schedule."""
        u = float(self.u_at(t))
        p = self.path.point(self.base, u)
        if omega is not None:
            p = p.with_omega(omega)
        return p

    def quadratic_at(self, t, domega: float = 0.0):
        """(A, c) of the effective mode; a frequency shift moves A only."""
        A, c = _coeffs(self.path.point(self.base, float(self.u_at(t))))
        return A + domega, c

    def rows(self):
        g1, g2 = self.couplings()
        return np.column_stack([self.t, g1, g2, self.v, self.gap])


def _integrand(path, ramp, base, x):
    d = np.exp(-x)
    u = path.u_from_distance(d)
    return np.abs(d * path.du_dd(u)) / ramp_rate(path, ramp, base, u)


def _T_on_grid(path, ramp, base, x):
    y = _integrand(path, ramp, base, x)
    return integrate.cumulative_simpson(y, x=x, initial=0.0)


def build_schedule(path: _Path, ramp: RampSpec, base, s_start=None, s_end=None,
                   max_gap_step: float = 0.02, rtol: float = 1e-6, max_points: int = 2 ** 22) -> Schedule:
    """Sample the path from s_start to s_end with time from T = int du / v."""
    if path.model == "aqrm" and not isinstance(base, AqrmParams):
        raise ConfigError("this path needs AqrmParams")
    if path.model == "jcm" and not isinstance(base, JcmParams):
        raise ConfigError("this path needs JcmParams")
    u0 = path.u_start if s_start is None else float(s_start)
    u1 = path.u_end_default if s_end is None else float(s_end)
    path.check_u([u0, u1])
    if u0 == u1:
        gap0 = path.gap(base, np.array([u0]))
        return Schedule(path, ramp, base, np.zeros(1), np.array([u0]),
                        np.asarray(ramp_rate(path, ramp, base, [u0])), gap0, {"T_rel_change": 0.0})
    d0, d1 = float(path.distance(u0)), float(path.distance(u1))
    if not d1 < d0:
        raise RangeError("s_end must lie closer to the critical point than s_start")
    x0, x1 = -math.log(d0), -math.log(d1)
    n = max(64, 2 * int(math.ceil((x1 - x0) / 0.01)))
    while True:
        x = np.linspace(x0, x1, n + 1)
        u = path.u_from_distance(np.exp(-x))
        gap = path.gap(base, u)
        if np.max(np.abs(np.diff(gap)) / np.minimum(gap[:-1], gap[1:])) <= max_gap_step:
            break
        n *= 2
        if n > max_points:
            raise NoConvergence("could not resolve the gap on the time grid")
    t = _T_on_grid(path, ramp, base, x)
    while True:
        x2 = np.linspace(x0, x1, 2 * n + 1)
        t2 = _T_on_grid(path, ramp, base, x2)
        rel = abs(t2[-1] - t[-1]) / t2[-1]
        if rel < rtol:
            break
        n *= 2
        if n > max_points:
            raise NoConvergence(f"T quadrature not converged (rel change {rel:.2e})")
        x, t = x2, t2
    u = path.u_from_distance(np.exp(-x))
    quad_T, quad_err = integrate.quad(lambda s: float(_integrand(path, ramp, base, np.array([s]))[0]),
                                      x0, x1, limit=500, epsabs=0, epsrel=1e-10)
    cert = {"T_rel_change": float(rel), "n_intervals": n, "T_quad": float(quad_T),
            "quad_rel_diff": float(abs(quad_T - t[-1]) / quad_T)}
    return Schedule(path, ramp, base, t, u, ramp_rate(path, ramp, base, u), path.gap(base, u), cert)


def evolution_grid(schedule: Schedule, sample_times=None, dv: float = 1e-3, dphase: float = 0.1,
                   max_dt: float | None = None, refine: int = 1) -> np.ndarray:
    """Step boundaries with v dt <= dv and gap dt <= dphase, merged with sample times."""
    if schedule.empty:
        return np.zeros(1)
    t = schedule.t
    dens = np.maximum(schedule.v / dv, schedule.gap / dphase)
    if max_dt is not None:
        dens = np.maximum(dens, 1.0 / max_dt)
    cum = integrate.cumulative_trapezoid(dens, t, initial=0.0)
    nsteps = max(1, int(math.ceil(cum[-1] * 1.05))) * refine
    grid = np.interp(np.linspace(0, cum[-1], nsteps + 1), cum, t)
    if sample_times is not None:
        st = np.clip(np.asarray(sample_times, float), 0, schedule.T)
        tol = 1e-9 * schedule.T
        base = grid[grid < st[-1]]
        j = np.searchsorted(st, base)
        left = st[np.clip(j - 1, 0, len(st) - 1)]
        right = st[np.clip(j, 0, len(st) - 1)]
        near = np.minimum(np.abs(base - left), np.abs(base - right)) <= tol
        grid = np.union1d(base[~near], st)
    return grid


class Scaling(str, Enum):
    ExpSuperHS = "ExpSuperHS"
    Heisenberg = "Heisenberg"
    SubHS = "SubHS"
    QuarticBoundary = "QuarticBoundary"


@dataclass(frozen=True)
class Prediction:
    T_closed: float
    N_final: float
    F_final: float
    scaling: Scaling
    c2_sq: float
    coefficients: dict


def local_excitation(path: _Path, ramp: RampSpec, base, u) -> float:
    """Adiabatic estimate |c2|^2 ~ (1/2) (gamma_dot / (2 gap))^2 at u."""
    u = np.asarray(u, float)
    gdot = path.dgamma_du(u) * ramp_rate(path, ramp, base, u)
    return 0.5 * (gdot / (2 * path.gap(base, u))) ** 2


def predict(path: _Path, ramp: RampSpec, base, s_end=None) -> Prediction:
    """Closed-form time, photon number and QFI at the end of the protocol."""
    u = path.u_end_default if s_end is None else float(s_end)
    d, w = ramp.delta, _freq(base)
    law = ramp.law
    c2 = float(local_excitation(path, ramp, base, u))
    if isinstance(path, StraightLine) and law is RampLaw.GapLinear:
        k = path.k
        root = math.sqrt(1 - 1 / k ** 2)
        aT = 1 / (4 * d * w * root)
        b = 8 * d * w * root
        pref = 1 / (8 * w * w * (k * k - 1) ** 2)
        T = aT * math.log(1 / u)
        coeffs = {"a_T": aT, "b": b, "F_prefactor": pref, "c2_sq_asymptote": d * d / (32 * k * k)}
        return Prediction(T, k / (2 * math.sqrt(k * k - 1)) - 0.5, pref * math.exp(b * T),
                          Scaling.ExpSuperHS, c2, coeffs)
    if isinstance(path, StraightLine) and law is RampLaw.GapQuadratic:
        k = path.k
        aT = k / (8 * d * w * (k * k - 1))
        T = aT / u
        pref = 8 * d * d / (k * k)
        return Prediction(T, k / (2 * math.sqrt(k * k - 1)) - 0.5, pref * T * T, Scaling.Heisenberg, c2,
                          {"a_T": aT, "q": 1.0, "F_prefactor": pref, "p": 2.0})
    if isinstance(path, Parabola) and law is RampLaw.GapLinear:
        k = path.k
        aT = 5 / (8 * d * w)
        b = 16 * d * w / 5
        pref = 1 / (8 * w * w * (4 * k * k - 1) ** 2)
        T = aT * math.log(1 / u)
        N = 0.25 * (math.sqrt((2 * k - 1) / (2 * k + 1)) + math.sqrt((2 * k + 1) / (2 * k - 1))) - 0.5
        return Prediction(T, N, pref * math.exp(b * T), Scaling.ExpSuperHS, c2,
                          {"a_T": aT, "b": b, "F_prefactor": pref, "c2_sq_printed": d * d / (25 * k * k)})
    if isinstance(path, PowerCurve) and law is RampLaw.GapLinear:
        k, be = path.k, path.beta
        # v ~ (4 delta k w / beta) u^(1+beta)  =>  T ~ u^(-beta) / (4 delta k w)
        T = u ** (-be) / (4 * d * k * w)
        p = 2 * (2 - 1 / be)
        pref = 1 / (8 * k ** 4 * w * w)
        F = pref * (4 * d * k * w * T) ** p
        return Prediction(T, 0.0, F, Scaling.SubHS, c2,
                          {"p": p, "F_prefactor": pref * (4 * d * k * w) ** p, "a_T": 1 / (4 * d * k * w),
                           "q": be})
    if isinstance(path, BoundaryLine) and law is RampLaw.GapCubic:
        eta = path.eta
        eps = float(path.distance(u))
        aT = (1 - eta) / (2 * math.sqrt(-2 * eta) * d * w)
        T = aT * eps ** -0.5
        pref = 2 * d ** 4 * w * w * eta * eta / (1 - eta) ** 4
        return Prediction(T, float(0.5 * (math.cosh(2 * path.gamma(u)) - 1)), pref * T ** 4,
                          Scaling.QuarticBoundary, c2, {"a_T": aT, "q": 0.5, "F_prefactor": pref, "p": 4.0})
    if isinstance(path, JcmLine) and law is RampLaw.GapLinear and path.beta == 1:
        k = path.k
        b = 2 * d * math.sqrt(k * k - 1) * w
        aT = 1 / (d * w * math.sqrt(k * k - 1))
        pref = 1 / (2 * w * w * (k * k - 1) ** 2)
        T = aT * math.log(1 / u)
        N = 0.25 * (math.sqrt((k - 1) / (k + 1)) + math.sqrt((k + 1) / (k - 1))) - 0.5
        return Prediction(T, N, pref * math.exp(b * T), Scaling.ExpSuperHS, c2,
                          {"a_T": aT, "b": b, "F_prefactor": pref})
    raise UnsupportedCombo(f"no closed-form prediction for {path.name} with {law.value}")
