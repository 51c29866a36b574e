"""Single-mode Gaussian states in the (x, p) quadrature picture.

Convention: x = (a^dag + a)/sqrt2, p = i(a^dag - a)/sqrt2, vacuum covariance I/2.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def squeezed_vacuum(cls, gamma: float):
        return cls(np.zeros(2), 0.5 * np.diag([math.exp(-2 * gamma), math.exp(2 * gamma)]))

    @classmethod
    def vacuum(cls):
        return cls.squeezed_vacuum(0.0)

    @property
    def mean_n(self) -> float:
        d = self.mean
        return 0.5 * (np.trace(self.cov) + d @ d - 1.0)

    @property
    def var_n(self) -> float:
        V, d = self.cov, self.mean
        return 0.5 * np.sum(V * V) - 0.25 + d @ V @ d

    @property
    def purity_det(self) -> float:
        return float(np.linalg.det(self.cov))

    @property
    def dx(self):
        return math.sqrt(self.cov[0, 0])

    @property
    def dp(self):
        return math.sqrt(self.cov[1, 1])

    def infidelity(self, other: "GaussianState") -> float:
        """1 - |<self|other>| for pure states, written to avoid cancellation.

        For pure single-mode states det(V1 + V2) = 1 - det(V2 - V1).
        """
        M = self.cov + other.cov
        d = other.mean - self.mean
        E = other.cov - self.cov
        detE = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
        expo = -0.25 * d @ np.linalg.solve(M, d) - 0.25 * math.log1p(-detE)
        return -math.expm1(expo)
