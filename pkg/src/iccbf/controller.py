"""Per-step control assembly: surfaces, nominal control, QP rows, safe input.

The controller is stateless: every function maps the current plant state,
weight estimates and time to values.  ``control_step`` wires the pieces
together for one evaluation of the auxiliary input v = phi + mu:

  * sliding surfaces s_x, s_u and the desired drift u_d,
  * the nominal control phi (adaptive formula, or a scenario-supplied
    expression),
  * one soft stability row and one hard safety row,
  * the minimum-norm QP correction mu.

Controller variants:

  proposed   phi from live estimates; v = phi + mu* from the QP
  nominal    estimates pinned to zero and no QP filter; v = phi|_{w=0}
  clf-only   live estimates, no safety row; v = phi
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapt import EstimatorState
from .barrier import BarrierEval, eval_barrier
from .basis import eval_basis, eval_basis_dot
from .core import CbfMode, Scenario, Variant
from .qp import QPSolution, QPStatus, Row, RowKind, Sense, solve_controller_rows


class SingularInputError(ValueError):
    """g(x, t) is numerically rank deficient; phi is undefined."""


@dataclass(frozen=True)
class ControllerContext:
    s_x: np.ndarray
    s_u: np.ndarray
    u_d: np.ndarray
    phi: np.ndarray
    clf_row: Row
    cbf_row: Row | None
    barrier: BarrierEval


def sliding_surfaces(model, x, u, t, w_x, psi, gains):
    """Return (s_x, s_u, u_d) for the current state and weight estimates.

    The regulation target is the origin, so s_x = x.  u_d is the desired
    value of the drift f + g u, and s_u the distance from it.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    s_x = x.copy()
    u_d = -(w_x.T @ psi) - (gains.c_x / gains.theta_x) * s_x
    s_u = model.f(x, t) + model.g(x, t) @ u - u_d
    return s_x, s_u, u_d


def _pinv_apply(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if g.shape == (1, 1):
        if abs(g[0, 0]) < 1e-10:
            raise SingularInputError("scalar g is numerically zero")
        return rhs / g[0, 0]
    svals = np.linalg.svd(g, compute_uv=False)
    if svals[-1] < 1e-10:
        raise SingularInputError(f"smallest singular value of g is {svals[-1]:.3g}")
    return np.linalg.pinv(g) @ rhs


def nominal_phi(model, x, u, t, est: EstimatorState, gains, psi, psi_dot,
                lambda_x: float, adapt_live: bool = True,
                _f=None, _g=None) -> np.ndarray:
    """Adaptive nominal control.

    phi = g^+ [ -f_dot
                - (sum_i w_u_i psi_i + w_x_dot_i psi_i + w_x_i psi_dot_i)
                - (c_u/theta_u) (f + g u + sum_i w_x_i psi_i + c_x x/theta_x)
                - g_dot u
                - (c_x/theta_x) (f + g u) ]

    with f_dot, g_dot propagated along the disturbance-estimated state rate
    x_hat_dot = f + g u + sum_i w_x_i psi_i (the true disturbance is unknown
    to the controller).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    f = model.f(x, t) if _f is None else _f
    g = model.g(x, t) if _g is None else _g
    gu = g @ u
    w_x_sum = est.w_x.T @ psi  # sum_i w_x_i psi_i, in R^n
    x_hat_dot = f + gu + w_x_sum
    f_dot = model.df_dt(x, t) + model.jac_f(x, t) @ x_hat_dot
    g_dot = model.dg_dt(x, t) + model.jac_g(x, t) @ x_hat_dot
    # weight-rate feedforward: sum_i (w_x_dot_i psi_i) = (psi.psi / lambda_x) x;
    # zero when the update laws are switched off (frozen weights have no rate)
    w_x_dot_sum = (float(psi @ psi) / lambda_x) * x if adapt_live else 0.0
    w_x_psidot_sum = est.w_x.T @ psi_dot
    w_u_sum = est.w_u.T @ psi  # in R^m
    if model.dim_x != model.dim_u and np.any(w_u_sum):
        raise ValueError("input-weight compensation requires dim_x == dim_u")
    s_u_like = f + gu + w_x_sum + (gains.c_x / gains.theta_x) * x
    bracket = (
        -f_dot
        - (w_u_sum if model.dim_x == model.dim_u else 0.0)
        - w_x_dot_sum
        - w_x_psidot_sum
        - (gains.c_u / gains.theta_u) * s_u_like
        - g_dot @ u
        - (gains.c_x / gains.theta_x) * (f + gu)
    )
    return _pinv_apply(g, bracket)


def clf_row(s_u, gains, g=None) -> Row:
    """Soft stability row: mu . a <= (c_u/theta_u) ||s_u||^2, a = g^T s_u.

    The bound is nonnegative, so mu = 0 always satisfies this row; it can
    only bind when the safety row pushes mu against the stabilizing
    direction.
    """
    s_u = np.asarray(s_u, dtype=float)
    a = s_u.copy() if g is None else np.asarray(g, dtype=float).T @ s_u
    b = (gains.c_u / gains.theta_u) * float(s_u @ s_u)
    return Row(a=a, b=b, sense=Sense.LE, kind=RowKind.CLF)


def cbf_row(barrier: BarrierEval, phi, w_comp, psi, Q, rho: float, w_bar: float,
            kappa_dot: float | None = None) -> Row:
    """Hard safety row keeping the input inside the constraint set.

    Encodes dh_du . (phi + mu + comp) + boundary + (rho/2)(h - sum Q w_bar^2) >= 0
    where comp = sum_j w_comp_j psi_j estimates the input-channel
    disturbance.  ``boundary`` charges the moving constraint edge: the
    model-based rate dh_dkappa * kappa_dot when given, else the worst case
    -zeta.
    """
    phi = np.asarray(phi, dtype=float)
    comp = w_comp.T @ psi
    stand_off = float(np.sum(Q)) * w_bar * w_bar
    margin = 0.5 * rho * (barrier.h - stand_off)
    boundary = -barrier.zeta if kappa_dot is None else barrier.dh_dkappa * kappa_dot
    b = -boundary - margin - float(barrier.dh_du @ (phi + comp))
    return Row(a=barrier.dh_du.copy(), b=b, sense=Sense.GE, kind=RowKind.CBF)


def safe_input(ctx: ControllerContext, variant: Variant,
               slack_penalty: float = 1e3):
    """Resolve the auxiliary input for a variant; returns (v, QPSolution).

    On an infeasible safety row the nominal control is used for the step
    and the infeasibility is reported for logging.
    """
    m = ctx.phi.shape[0]
    if variant is not Variant.PROPOSED or ctx.cbf_row is None:
        sol = QPSolution(np.zeros(m), 0.0, QPStatus.OK, ())
        return ctx.phi.copy(), sol
    sol = solve_controller_rows(ctx.clf_row, ctx.cbf_row, slack_penalty)
    return ctx.phi + sol.mu, sol


@dataclass(frozen=True)
class StepControl:
    v: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    status: QPStatus
    clf_slack: float
    s_x: np.ndarray
    s_u: np.ndarray
    u_d: np.ndarray
    barrier: BarrierEval
    cbf_active: bool
    kappa_dot_est: float
    cbf_b: float = float("nan")


_CBF_ROW_INDEX = 1  # rows are (clf, cbf) in the QP problem


def control_step(sc: Scenario, variant: Variant, x, u, est: EstimatorState,
                 t: float, psi=None, psi_dot=None, Q=None) -> StepControl:
    """One full controller evaluation at state (x, u, est) and time t."""
    if psi is None:
        psi = eval_basis(sc.estimator.basis, t)
    if psi_dot is None:
        psi_dot = eval_basis_dot(sc.estimator.basis, t)
    live = sc.estimator.enabled and variant is not Variant.NOMINAL
    if live:
        est_eff = est
    else:
        est_eff = EstimatorState(
            w_x=np.zeros_like(est.w_x),
            w_u=np.zeros_like(est.w_u),
            w_h=np.zeros_like(est.w_h),
        )

    x_arr = np.asarray(x, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    f = sc.model.f(x_arr, t)
    g = sc.model.g(x_arr, t)
    gu = g @ u_arr
    gains = sc.gains

    s_x = x_arr.copy()
    u_d = -(est_eff.w_x.T @ psi) - (gains.c_x / gains.theta_x) * s_x
    s_u = f + gu - u_d

    if sc.phi_expr is not None:
        if sc.smooth_sgn_eps > 0.0:
            val = sc.phi_expr.eval_smooth(x_arr, u_arr, t, sc.smooth_sgn_eps)
        else:
            val = sc.phi_expr(x_arr, u_arr, t)
        phi = np.array([float(val)])  # custom nominal control is scalar
    else:
        phi = nominal_phi(sc.model, x_arr, u_arr, t, est_eff, gains, psi, psi_dot,
                          sc.estimator.lambda_x, adapt_live=live, _f=f, _g=g)

    dk_dx = np.array([d(x_arr, u_arr, t) for d in sc.barrier.dkappa_dx])
    be = eval_barrier(sc.barrier, x_arr, u_arr, t, dk_dx=dk_dx)

    # model-based boundary rate, with the disturbance replaced by its estimate
    x_hat_dot = f + gu + est_eff.w_x.T @ psi
    kappa_dot_est = float(dk_dx @ x_hat_dot) + float(sc.barrier.dkappa_dt(x_arr, u_arr, t))

    row_clf = clf_row(s_u, gains, g=g)
    row_cbf = None
    if variant is Variant.PROPOSED:
        kdot = kappa_dot_est if sc.cbf_mode is CbfMode.ESTIMATE else None
        row_cbf = cbf_row(
            be, phi, est_eff.w_u, psi, Q if Q is not None else np.zeros(1),
            gains.rho, sc.estimator.w_bar, kappa_dot=kdot,
        )

    ctx = ControllerContext(
        s_x=s_x, s_u=s_u, u_d=u_d, phi=phi,
        clf_row=row_clf, cbf_row=row_cbf, barrier=be,
    )
    v, sol = safe_input(ctx, variant)
    cbf_active = (
        sol.status is QPStatus.INFEASIBLE
        or _CBF_ROW_INDEX in sol.active_set
    )
    return StepControl(
        v=v, mu=sol.mu, phi=phi, status=sol.status, clf_slack=sol.clf_slack,
        s_x=s_x, s_u=s_u, u_d=u_d, barrier=be, cbf_active=cbf_active,
        kappa_dot_est=kappa_dot_est,
        cbf_b=float(row_cbf.b) if row_cbf is not None else float("nan"),
    )
