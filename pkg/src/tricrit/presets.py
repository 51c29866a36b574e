"""Named model parameter sets and figure-level sweep configurations."""
from __future__ import annotations

import math

from .config import SweepConfig
from .errors import ConfigError
from .models import AqrmParams, JcmParams

TWO_PI = 2 * math.pi

# frequencies of each named model; couplings are set by the path
MODEL_PRESETS = {
    # gc = 500 with Omega/omega = 1e6
    "main": {"model": "aqrm", "Omega": 2.5e5, "omega": 0.25},
    # reduced ratio for full spin-boson runs
    "full": {"model": "aqrm", "Omega": 200.0, "omega": 1.0, "kappa_p": 0.01, "kappa_a": 2.0},
    # angular frequencies in rad/s; rates follow kappa_p = 0.01 omega, kappa_a = 0.01 Omega
    "trapped-ion": {"model": "aqrm", "Omega": TWO_PI * 250e3, "omega": TWO_PI * 1e3,
                    "kappa_p": 0.01 * TWO_PI * 1e3, "kappa_a": 0.01 * TWO_PI * 250e3},
    "jcm-main": {"model": "jcm", "Omega_t": 2.5e5, "omega_t": 0.25},
}


def model_base(name: str, overrides: dict | None = None):
    if name not in MODEL_PRESETS:
        raise ConfigError(f"unknown model preset {name!r}; choose from {sorted(MODEL_PRESETS)}")
    d = {**MODEL_PRESETS[name], **(overrides or {})}
    if d["model"] == "aqrm":
        return AqrmParams(float(d["Omega"]), float(d["omega"]))
    return JcmParams(float(d["Omega_t"]), float(d["omega_t"]))


def model_rates(name: str) -> dict:
    d = MODEL_PRESETS[name]
    return {k: d[k] for k in ("kappa_p", "kappa_a") if k in d}


_FIG = {
    "fig2-k2": dict(preset="main", path={"variant": "StraightLine", "k": 2.0}, ramp={"delta": 1e-3},
                    outputs=("qfi", "fits"), n_samples=241),
    "fig2-k1.5": dict(preset="main", path={"variant": "StraightLine", "k": 1.5}, ramp={"delta": 1e-3},
                      outputs=("qfi", "fits"), n_samples=241),
    "line-quadratic-k2": dict(preset="main", path={"variant": "StraightLine", "k": 2.0},
                              ramp={"delta": 1e-3, "law": "GapQuadratic"}, outputs=("qfi", "fits"),
                              n_samples=241),
    "parabola-k2": dict(preset="main", path={"variant": "Parabola", "k": 2.0}, ramp={"delta": 1e-3},
                        outputs=("qfi", "fits"), n_samples=241),
    "power-k2-b2/3": dict(preset="main", path={"variant": "PowerCurve", "k": 2.0, "beta": 2 / 3},
                          ramp={"delta": 1e-3}, outputs=("qfi", "fits"), n_samples=241),
    "figS4-eta-1": dict(preset="main", path={"variant": "BoundaryLine", "eta": -1.0},
                        ramp={"delta": 1e-3, "law": "GapCubic"}, outputs=("qfi", "fits"), n_samples=241),
    "figS4-eta-3": dict(preset="main", path={"variant": "BoundaryLine", "eta": -3.0},
                        ramp={"delta": 1e-3, "law": "GapCubic"}, outputs=("qfi", "fits"), n_samples=241),
    "figS6-jcm": dict(preset="jcm-main", path={"variant": "JcmLine", "k": 3.0, "beta": 1.0},
                      ramp={"delta": 1e-3}, outputs=("qfi", "fits"), n_samples=241),
    "fig3": dict(preset="full", path={"variant": "StraightLine", "k": 2.0}, ramp={"delta": 1e-2},
                 outputs=("snr",), n_samples=81, n_max=60,
                 dissipation={"kappa_p": 0.01, "kappa_a": 2.0, "mode": "FullModel", "richardson": False}),
}

FIGURE_PRESETS = tuple(_FIG)


def figure_config(name: str) -> SweepConfig:
    if name not in _FIG:
        raise ConfigError(f"unknown figure preset {name!r}; choose from {sorted(_FIG)}")
    return SweepConfig(name=name, **_FIG[name])
