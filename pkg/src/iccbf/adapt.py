"""Projection operator and the three weight-update laws.

The estimators represent unknown disturbances as weighted sums of basis
functions.  Two laws (state weights, input weights) are plain gradient
updates; the barrier-weight law is wrapped in a projection that keeps each
weight row inside a ball of radius w_bar with a soft margin nu, so the
estimates stay bounded no matter what the barrier gradient does.

All functions return *rates*; the simulation loop integrates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec


class InitialUnsafeError(ValueError):
    """The scenario starts outside the input-safe set (h(0) <= 0)."""


@dataclass(frozen=True)
class EstimatorConfig:
    basis: BasisSpec = field(default_factory=BasisSpec)
    w_bar: float = 20.0
    nu: float = 0.1
    lambda_x: float = 1.0
    lambda_u: float = 1.0
    # Fraction of the gain-selection upper bound used for the barrier-weight
    # gains Q_j.  1.0 sits exactly at the bound; smaller values shrink the
    # barrier standoff term sum(Q_j * w_bar^2) proportionally.
    q_scale: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if self.w_bar <= 0.0 or self.nu <= 0.0:
            raise ValueError("w_bar and nu must be positive")
        if self.lambda_x <= 0.0 or self.lambda_u <= 0.0:
            raise ValueError("lambda_x and lambda_u must be positive")
        if not (0.0 < self.q_scale <= 1.0):
            raise ValueError("q_scale must lie in (0, 1]")


@dataclass
class EstimatorState:
    """Weight estimates; rows index basis terms."""

    w_x: np.ndarray  # (N, dim_x)
    w_u: np.ndarray  # (N, dim_u)
    w_h: np.ndarray  # (M, dim_u)

    @staticmethod
    def zeros(n_basis: int, dim_x: int, dim_u: int) -> "EstimatorState":
        return EstimatorState(
            w_x=np.zeros((n_basis, dim_x)),
            w_u=np.zeros((n_basis, dim_u)),
            w_h=np.zeros((n_basis, dim_u)),
        )


def proj(w_hat: np.ndarray, y: np.ndarray, w_bar: float, nu: float) -> np.ndarray:
    """Project the raw rate y so the estimate cannot leave ||w|| <= w_bar + nu.

    Uses the convex indicator l(w) = (w.w - w_bar^2) / (2 nu w_bar + nu^2):
    l <= 0 inside the nominal ball, l = 1 on the inflated boundary.  The
    rate is returned unchanged unless the estimate is in the margin shell
    and the rate points outward; then its radial component is scaled by
    (1 - l), which vanishes at the inflated boundary.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = 2.0 * nu * w_bar + nu * nu
    l_val = (float(w_hat @ w_hat) - w_bar * w_bar) / denom
    if l_val <= 0.0:
        return y.copy()
    grad = 2.0 * w_hat / denom
    y_dot_grad = float(y @ grad)
    if y_dot_grad <= 0.0:
        return y.copy()
    # y - l * (grad grad^T / ||grad||^2) y
    return y - (l_val * y_dot_grad / float(grad @ grad)) * grad


def update_w_x(psi: np.ndarray, x: np.ndarray, lambda_x: float) -> np.ndarray:
    """Rate of the state-disturbance weights: row i is psi_i * x / lambda_x."""
    return np.outer(psi, x) / lambda_x


def update_w_u(psi: np.ndarray, s_u: np.ndarray, lambda_u: float) -> np.ndarray:
    """Rate of the input-disturbance weights: row i is psi_i * s_u / lambda_u."""
    return np.outer(psi, s_u) / lambda_u


def update_w_h(
    w_h: np.ndarray,
    dh_du: np.ndarray,
    psi_h: np.ndarray,
    Q: np.ndarray,
    rho: float,
    w_bar: float,
    nu: float,
) -> np.ndarray:
    """Projected rate of the barrier weights.

    Row j is Proj(w_j, -(1/(2 Q_j)) * dh_du * psi_j - (rho/2) * w_j),
    computed for all rows at once.
    """
    raw = -np.outer(psi_h / (2.0 * np.asarray(Q, dtype=float)), dh_du) \
        - 0.5 * rho * w_h
    denom = 2.0 * nu * w_bar + nu * nu
    l_vals = (np.einsum("ij,ij->i", w_h, w_h) - w_bar * w_bar) / denom
    y_dot_w = np.einsum("ij,ij->i", raw, w_h)
    rows = np.flatnonzero((l_vals > 0.0) & (y_dot_w > 0.0))
    if rows.size:
        # the grad/||grad||^2 factors cancel to (y.w / w.w) w
        out = raw.copy()
        coeff = l_vals[rows] * y_dot_w[rows] / np.einsum(
            "ij,ij->i", w_h[rows], w_h[rows])
        out[rows] -= coeff[:, None] * w_h[rows]
        return out
    return raw


def select_Q(h0: float, m_basis: int, w_bar: float, w_h0_norms: np.ndarray) -> np.ndarray:
    """Largest admissible barrier-weight gains.

    Q_j = h0 / (2 M (||w_j(0)|| + w_bar)^2), which guarantees
    h0 - sum_j Q_j (w_bar + ||w_j(0)||)^2 >= 0.
    """
    if h0 <= 0.0:
        raise InitialUnsafeError(
            f"initial barrier value must be positive, got h(0) = {h0}"
        )
    w_h0_norms = np.asarray(w_h0_norms, dtype=float)
    if w_h0_norms.shape != (m_basis,):
        raise ValueError("need one initial weight norm per basis term")
    return h0 / (2.0 * m_basis * (w_h0_norms + w_bar) ** 2)
