"""Scaling-law fits by ordinary least squares in the space where each law is linear."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import ConfigError, InsufficientData, NonPositiveData

MIN_POINTS = 10


class FitModel(str, Enum):
    Exponential = "Exponential"     # y = a exp(b x)
    Power = "Power"                 # y = a x^p
    LogTime = "LogTime"             # y = a ln(scale / x) [+ c]
    InversePower = "InversePower"   # y = a x^(-q) [+ c]


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    coefficients: dict
    stderr: dict
    window: tuple
    residual_rms: float
    n_points: int
    fixed: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return self.coefficients[k]

    def as_dict(self):
        return {"model": self.model.value, "coefficients": self.coefficients, "stderr": self.stderr,
                "window": list(self.window), "residual_rms": self.residual_rms,
                "n_points": self.n_points, "fixed": self.fixed}


def final_decade(x, decades: float = 1.0, toward: str = "min") -> tuple:
    """Window covering the last `decades` of a positive swept variable.

    `toward="min"` keeps [min, min*10^decades] (a coupling swept down to its
    endpoint); `toward="max"` keeps [max/10^decades, max].
    """
    x = np.asarray(x, float)
    if toward == "min":
        lo = float(np.min(x))
        return lo, lo * 10 ** decades
    hi = float(np.max(x))
    return hi / 10 ** decades, hi


def _ols(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise InsufficientData("design matrix is rank deficient")
    res = y - X @ coef
    dof = len(y) - X.shape[1]
    s2 = float(res @ res) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    return coef, np.sqrt(np.diag(cov)), float(np.sqrt(np.mean(res * res)))


def fit_scaling(x, y, model, window: tuple | None = None, mask=None, fixed: float | None = None,
                intercept: bool = False, scale: float = 1.0) -> FitResult:
    """Fit y(x) to one of the FitModel laws.

    `window` = (lo, hi) selects lo <= x <= hi; `mask` is an extra boolean
    selection.  `fixed` pins the rate or exponent (b, p or q) so only the
    prefactor is fitted.  `intercept` adds a constant term to LogTime and to
    InversePower with a fixed exponent.  Residual RMS is in the transformed
    space (ln y for the exponential and power laws).
    """
    model = FitModel(model)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape:
        raise ConfigError("x and y must have the same shape")
    sel = np.isfinite(x) & np.isfinite(y)
    if mask is not None:
        sel &= np.asarray(mask, bool)
    if window is not None:
        lo, hi = window
        sel &= (x >= lo * (1 - 1e-12)) & (x <= hi * (1 + 1e-12))
    x, y = x[sel], y[sel]
    if len(x) < MIN_POINTS:
        raise InsufficientData(f"{len(x)} points in window, need at least {MIN_POINTS}")
    win = (float(x.min()), float(x.max()))
    if intercept and model in (FitModel.Exponential, FitModel.Power):
        raise ConfigError(f"{model.value} fits have no intercept option")
    if intercept and model is FitModel.InversePower and fixed is None:
        raise ConfigError("InversePower with intercept needs a fixed exponent")
    ones = np.ones_like(x)

    if model in (FitModel.Exponential, FitModel.Power, FitModel.InversePower) and not (
            model is FitModel.InversePower and intercept):
        if np.any(y <= 0):
            raise NonPositiveData("log-space fit needs y > 0")
        ly = np.log(y)
        if model is FitModel.Exponential:
            X, rate = x, "b"
        else:
            if np.any(x <= 0):
                raise NonPositiveData("log-space fit needs x > 0")
            X, rate = np.log(x), ("p" if model is FitModel.Power else "q")
        sign = -1.0 if model is FitModel.InversePower else 1.0
        if fixed is None:
            coef, se, rms = _ols(np.column_stack([ones, X]), ly)
            coeffs = {"a": math.exp(coef[0]), rate: sign * coef[1]}
            errs = {"ln_a": float(se[0]), rate: float(se[1])}
            fx = {}
        else:
            coef, se, rms = _ols(ones[:, None], ly - sign * fixed * X)
            coeffs = {"a": math.exp(coef[0]), rate: float(fixed)}
            errs = {"ln_a": float(se[0]), rate: 0.0}
            fx = {rate: float(fixed)}
        return FitResult(model, coeffs, errs, win, rms, len(x), fx)

    if np.any(x <= 0):
        raise NonPositiveData("swept variable must be positive")
    if model is FitModel.LogTime:
        X = np.log(scale / x)
        cols, names = [X], ["a"]
    else:
        X = x ** (-fixed)
        cols, names = [X], ["a"]
    if intercept:
        cols.append(ones)
        names.append("c")
    coef, se, rms = _ols(np.column_stack(cols), y)
    coeffs = {n: float(c) for n, c in zip(names, coef)}
    errs = {n: float(s) for n, s in zip(names, se)}
    fx = {}
    if model is FitModel.InversePower:
        coeffs["q"] = float(fixed)
        errs["q"] = 0.0
        fx = {"q": float(fixed)}
    return FitResult(model, coeffs, errs, win, rms, len(x), fx)


def evaluate(fit: FitResult, x, scale: float = 1.0):
    """Model prediction at x."""
    x = np.asarray(x, float)
    c = fit.coefficients
    if fit.model is FitModel.Exponential:
        return c["a"] * np.exp(c["b"] * x)
    if fit.model is FitModel.Power:
        return c["a"] * x ** c["p"]
    if fit.model is FitModel.LogTime:
        return c["a"] * np.log(scale / x) + c.get("c", 0.0)
    return c["a"] * x ** (-c["q"]) + c.get("c", 0.0)
