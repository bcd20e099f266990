"""Truncated Fourier basis for the disturbance approximations.

All three weight families (state, input, barrier) share one basis: the
constant term followed by sin/cos pairs at multiples of the fundamental
frequency 2*pi/period.  Every element is bounded by 1 and has an analytic
time derivative, which the nominal-control formula needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BasisSpec:
    """Fourier basis: [1, sin(wt), cos(wt), sin(2wt), cos(2wt), ...][:count]."""

    count: int = 5
    period: float = 120.0

    def __post_init__(self):
        if self.count < 1 or self.count % 2 == 0:
            raise ValueError(f"basis count must be odd and >= 1, got {self.count}")
        if self.period <= 0.0:
            raise ValueError(f"basis period must be positive, got {self.period}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period


def eval_basis(spec: BasisSpec, t: float) -> np.ndarray:
    """Basis values at time t; entries lie in [-1, 1], first entry is 1."""
    out = np.empty(spec.count)
    out[0] = 1.0
    w = spec.omega
    k = 1
    i = 1
    while i < spec.count:
        out[i] = math.sin(k * w * t)
        out[i + 1] = math.cos(k * w * t)
        k += 1
        i += 2
    return out


def eval_basis_dot(spec: BasisSpec, t: float) -> np.ndarray:
    """Elementwise time derivative of eval_basis (0 for the constant term)."""
    out = np.empty(spec.count)
    out[0] = 0.0
    w = spec.omega
    k = 1
    i = 1
    while i < spec.count:
        out[i] = k * w * math.cos(k * w * t)
        out[i + 1] = -k * w * math.sin(k * w * t)
        k += 1
        i += 2
    return out
