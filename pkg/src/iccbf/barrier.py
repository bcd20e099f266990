"""Barrier evaluation and the logarithmic barrier used as a counterexample.

Two barrier forms are supported:

  norm-ball     h = kappa^2 - u.u      (vector input, ||u|| <= kappa)
  affine-upper  h = kappa - u          (scalar input, u <= kappa)

eval_barrier also reports zeta = |dh/dkappa| * Pi_kappa, the worst-case
rate at which the constraint boundary can eat into h.  blf_log implements
the classic log-ratio barrier for box bounds; it exists to demonstrate the
failure mode when a bound crosses zero, and never feeds the controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class BarrierForm(Enum):
    NORM_BALL = "norm_ball"
    AFFINE_UPPER = "affine_upper"


class EvalError(ValueError):
    """kappa produced NaN or -inf at the queried point."""


class DomainError(ValueError):
    """Logarithm argument outside (0, inf)."""


class DegenerateBoundError(ValueError):
    """A box bound passed through zero; the log barrier is undefined there."""


@dataclass(frozen=True)
class BarrierEval:
    h: float
    dh_du: np.ndarray
    dh_dx: np.ndarray
    dh_dkappa: float
    kappa: float
    zeta: float


def eval_barrier(spec, x, u, t: float, dk_dx: np.ndarray | None = None) -> BarrierEval:
    """Evaluate h and its gradients for a BarrierSpec at (x, u, t).

    dh_dx is the chain-rule product dh/dkappa * dkappa/dx; h may come out
    negative (the caller decides what a violation means).  A precomputed
    dkappa/dx can be passed to avoid re-evaluating it.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    kappa = float(spec.kappa(x, u, t))
    if math.isnan(kappa) or kappa == -math.inf:
        raise EvalError(f"kappa undefined at x={x.tolist()}, t={t}")
    if dk_dx is None:
        dk_dx = np.array([spec.dkappa_dx[i](x, u, t) for i in range(x.shape[0])])
    if spec.form is BarrierForm.NORM_BALL:
        h = kappa * kappa - float(u @ u)
        dh_du = -2.0 * u
        dh_dkappa = 2.0 * kappa
    else:
        if u.shape != (1,):
            raise ValueError("affine-upper barrier requires a scalar input")
        h = kappa - float(u[0])
        dh_du = np.array([-1.0])
        dh_dkappa = 1.0
    zeta = abs(dh_dkappa) * spec.pi_kappa
    return BarrierEval(
        h=h,
        dh_du=dh_du,
        dh_dx=dh_dkappa * dk_dx,
        dh_dkappa=dh_dkappa,
        kappa=kappa,
        zeta=zeta,
    )


_DEGENERATE_TOL = 1e-12


def blf_log(u: float, k_l: float, k_h: float) -> float:
    """Log-ratio barrier log((k_h/k_l) * (k_l - u)/(k_h - u)) on (k_l, k_h).

    Diverges as u approaches either bound.  When a bound itself reaches
    zero the expression degenerates for every u, which is exactly the
    failure this function exists to demonstrate.
    """
    if k_l >= k_h:
        raise ValueError(f"need k_l < k_h, got k_l={k_l}, k_h={k_h}")
    if abs(k_h) < _DEGENERATE_TOL or abs(k_l) < _DEGENERATE_TOL:
        raise DegenerateBoundError(
            f"box bound at zero (k_l={k_l}, k_h={k_h}); log barrier undefined"
        )
    arg = (k_h / k_l) * (k_l - u) / (k_h - u)
    if arg <= 0.0 or math.isinf(arg) or math.isnan(arg):
        raise DomainError(f"log argument {arg} not in (0, inf) for u={u}")
    return math.log(arg)
