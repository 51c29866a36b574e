"""Quantum Fisher information estimators and the photon-number signal-to-noise ratio."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence
import math

import numpy as np

from .errors import DegenerateGround, NoConvergence, ZeroVariance
from .fockspace import ComplexOperator, DensityOperator, PureState, eig_hermitian, number_moments
from .gaussian import GaussianState
from .models import AqrmParams, JcmParams, _require_jcm_np, _require_np

DEFAULT_REL_STEP = 1e-5
STEP_FLOOR = 1e-9
RICHARDSON_RTOL = 1e-4


@dataclass(frozen=True)
class QfiEstimate:
    value: float
    method: str
    parameter: str = "omega"
    step_used: float | None = None
    flagged: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SnrEstimate:
    value: float
    mean_n: float
    var_n: float
    dn_domega: float
    step_used: float | None = None


def qfi_np_analytic(p: AqrmParams) -> QfiEstimate:
    _require_np(p)
    sp = (p.g1 + p.g2) / p.gc
    sm = (p.g1 - p.g2) / p.gc
    val = (1.0 / (1 - sp * sp) - 1.0 / (1 - sm * sm)) ** 2 / (8 * p.omega ** 2)
    return QfiEstimate(val, "analytic", "omega")


def qfi_jcm_analytic(p: JcmParams) -> QfiEstimate:
    _require_jcm_np(p)
    one, r = 1.0 - p.x, p.r
    val = (r / ((one + r) * (one - r))) ** 2 / (2 * p.omega_t ** 2)
    return QfiEstimate(val, "analytic", "omega_t")


def qfi_perturbative(H0: ComplexOperator, H1: ComplexOperator, gap_tol: float = 1e-10) -> QfiEstimate:
    """4 sum_n |<n|H1|0>|^2 / (E0 - En)^2 over all retained eigenstates."""
    w, states = eig_hermitian(H0)
    scale = max(np.abs(H0.matrix).max(), 1e-300)
    if w[1] - w[0] < gap_tol * scale:
        raise DegenerateGround(f"ground-state gap {w[1] - w[0]:.3e} below threshold")
    V = np.column_stack([s.vector for s in states])
    col = V.conj().T @ (H1.matrix @ V[:, 0])
    terms = 4.0 * np.abs(col[1:]) ** 2 / (w[1:] - w[0]) ** 2
    total = float(terms.sum())
    ntop = max(1, int(math.ceil(0.1 * len(terms))))
    top = float(terms[-ntop:].sum())
    frac = top / total if total > 0 else 0.0
    return QfiEstimate(total, "perturbative", "lambda", flagged=frac > 1e-6,
                       diagnostics={"top_decile_fraction": frac})


def _fd_qfi(state_at, lam, d):
    # PureState and GaussianState both expose a cancellation-free infidelity
    return 8.0 * state_at(lam - d / 2).infidelity(state_at(lam + d / 2)) / (d * d)


def qfi_fidelity(state_at: Callable, lam: float, dlam: float | None = None,
                 rtol: float = RICHARDSON_RTOL, floor: float | None = None,
                 parameter: str = "lambda") -> QfiEstimate:
    """Fidelity-susceptibility estimate with Richardson step halving.

    `state_at` maps a parameter value to a PureState or a GaussianState.
    """
    scale = abs(lam) if lam != 0 else 1.0
    d = DEFAULT_REL_STEP * scale if dlam is None else dlam
    if d <= 0:
        raise ValueError("dlam must be positive")
    floor = STEP_FLOOR * scale if floor is None else floor
    f_prev = _fd_qfi(state_at, lam, d)
    hist = [(d, f_prev)]
    while d / 2 >= floor:
        d /= 2
        f = _fd_qfi(state_at, lam, d)
        hist.append((d, f))
        big = max(abs(f), abs(f_prev))
        if big == 0 or abs(f - f_prev) <= rtol * big:
            val = (4 * f - f_prev) / 3
            return QfiEstimate(max(val, 0.0), "fidelity", parameter, step_used=d)
        f_prev = f
    raise NoConvergence("fidelity QFI did not settle before the step floor", estimates=hist)


def photon_stats(state):
    """(<n>, var n) for Gaussian, pure or mixed states."""
    if isinstance(state, GaussianState):
        return float(state.mean_n), float(state.var_n)
    if isinstance(state, (PureState, DensityOperator)):
        return number_moments(state)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _dn(pair):
    dw, minus, plus = pair
    return (photon_stats(plus)[0] - photon_stats(minus)[0]) / dw


def snr_photon_number(final, reference_runs: Sequence, rtol: float = RICHARDSON_RTOL) -> SnrEstimate:
    """S = (d<n>/d omega)^2 / var n.

    `reference_runs` is a sequence of (domega, state at omega - domega/2,
    state at omega + domega/2), ordered by decreasing step.  With two or more
    pairs the derivative is Richardson-extrapolated from the first pair of
    successive estimates that agree to `rtol`.
    """
    mean, var = photon_stats(final)
    if var < 1e-14:
        raise ZeroVariance(f"photon-number variance {var:.3e} too small")
    runs = list(reference_runs)
    if not runs:
        raise ValueError("at least one paired run is needed")
    prev = _dn(runs[0])
    deriv, step = prev, runs[0][0]
    for pair in runs[1:]:
        cur = _dn(pair)
        big = max(abs(cur), abs(prev))
        deriv, step = cur, pair[0]
        if big == 0 or abs(cur - prev) <= rtol * big:
            deriv = (4 * cur - prev) / 3
            break
        prev = cur
    else:
        if len(runs) > 1:
            raise NoConvergence("SNR derivative did not settle",
                                estimates=[(r[0], _dn(r)) for r in runs])
    return SnrEstimate(deriv * deriv / var, mean, var, deriv, step)


def snr_from_runner(run_at: Callable, omega: float, domega: float | None = None,
                    levels: int = 4, rtol: float = RICHARDSON_RTOL) -> SnrEstimate:
    """Drive `run_at(omega')` for paired runs with halving steps, then form the SNR."""
    d = DEFAULT_REL_STEP * omega if domega is None else domega
    final = run_at(omega)
    runs = []
    for i in range(levels):
        runs.append((d, run_at(omega - d / 2), run_at(omega + d / 2)))
        if len(runs) >= 2:
            try:
                return snr_photon_number(final, runs, rtol)
            except NoConvergence:
                pass
        d /= 2
    return snr_photon_number(final, runs, rtol)
