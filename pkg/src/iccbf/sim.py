"""Fixed-step closed-loop integration of plant, input integrator and weights.

The joint ODE state is (x, u, W_x, W_u, W_h).  Each RK4 stage re-evaluates
the controller (stage-consistent closed loop); a ``zoh`` flag switches to
sample-and-hold instead.  Disturbances are sampled at stage times, so the
jump discontinuities of the piecewise waveform cost one low-order step at
each breakpoint and nothing elsewhere.

Barrier-weight estimates are kept inside their projection ball: the rate
law already projects, and a post-step radial retraction absorbs the
overshoot a discrete step can produce when the adaptation rate is large
(a standard discrete-time completion of the projection operator).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .adapt import EstimatorState, select_Q, update_w_h, update_w_u, update_w_x
from .basis import eval_basis, eval_basis_dot
from .barrier import eval_barrier
from .controller import StepControl, control_step
from .core import DisturbanceKind, DisturbanceSpec, Scenario, Variant
from .qp import QPStatus


class NumericalBlowupError(FloatingPointError):
    """A state component left the realm of finite floats."""


def disturbance(spec: DisturbanceSpec, t: float) -> float:
    """Scalar disturbance value at time t (applied to every channel).

    The five-segment ramp waveform is evaluated verbatim in t (so the early
    ramps exceed d_max for long horizons); ``scale`` multiplies the result.
    The normalized variant evaluates the same segments on the rescaled
    clock tau = 6 t / T, which keeps the amplitude O(d_max) for any
    horizon.
    """
    kind = spec.kind
    if kind is DisturbanceKind.ZERO:
        return 0.0
    if kind is DisturbanceKind.CUSTOM:
        return spec.scale * float(spec.expr((), (), t))
    T = spec.period
    if kind is DisturbanceKind.PIECEWISE_NORMALIZED:
        t = 6.0 * (t % T) / T
        T = 6.0
    else:
        t = t % T
    d_max = spec.d_max
    if t < T / 6.0:
        val = 0.5 * d_max * t
    elif t < T / 3.0:
        val = d_max * t
    elif t < 2.0 * T / 3.0:
        val = 0.5 * d_max * (T / 2.0 - t)
    elif t < 5.0 * T / 6.0:
        val = -d_max
    else:
        val = 0.5 * d_max * (t - T)
    return spec.scale * val


@dataclass
class SimState:
    t: float
    x: np.ndarray
    u: np.ndarray
    est: EstimatorState


@dataclass
class Trace:
    """Time-indexed log of a run plus whole-run statistics.

    Logged rows may subsample the integration grid (``log_every``); the
    ``*_all`` statistics are accumulated over every step regardless.
    """

    scenario: str
    variant: str
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    s_x: np.ndarray
    s_u: np.ndarray
    w_norms: np.ndarray  # columns: ||W_x||_F, ||W_u||_F, max_j ||w_h_j||
    qp_status: np.ndarray  # int8: 0 ok, 1 slack, 2 infeasible
    clf_slack: np.ndarray
    cbf_b: np.ndarray = None  # required bound of the safety row (nan if no row)
    min_h_all: float = math.nan
    final_x_norm: float = math.nan
    n_slack: int = 0
    n_infeasible: int = 0
    kappa_dot_warnings: int = 0
    wall_time: float = 0.0

    @property
    def min_h(self) -> float:
        return float(np.min(self.h))

    @property
    def n_slack_logged(self) -> int:
        return int(np.sum(self.qp_status == 1))

    @property
    def n_infeasible_logged(self) -> int:
        return int(np.sum(self.qp_status == 2))


_STATUS_CODE = {QPStatus.OK: 0, QPStatus.SLACK_ACTIVE: 1, QPStatus.INFEASIBLE: 2}
STATUS_NAMES = {0: "ok", 1: "slack", 2: "infeasible"}


def _estimator_rates(sc: Scenario, variant: Variant, ctrl: StepControl,
                     x, est: EstimatorState, psi, Q):
    """Weight rates for one stage, honoring variant and windup hold."""
    zx = np.zeros_like(est.w_x)
    zu = np.zeros_like(est.w_u)
    zh = np.zeros_like(est.w_h)
    if not sc.estimator.enabled or variant is Variant.NOMINAL:
        return zx, zu, zh
    hold = (
        sc.adapt_hold.value == "cbf_active"
        and variant is Variant.PROPOSED
        and ctrl.cbf_active
    )
    if not hold:
        zx = update_w_x(psi, x, sc.estimator.lambda_x)
        zu = update_w_u(psi, ctrl.s_u, sc.estimator.lambda_u)
    if variant is Variant.PROPOSED:
        zh = update_w_h(
            est.w_h, ctrl.barrier.dh_du, psi, Q,
            sc.gains.rho, sc.estimator.w_bar, sc.estimator.nu,
        )
    return zx, zu, zh


def _rhs(sc: Scenario, variant: Variant, state: SimState, t: float, Q,
         held_v: np.ndarray | None = None):
    """Stage derivative of the joint system; returns (rates, StepControl)."""
    psi = eval_basis(sc.estimator.basis, t)
    psi_dot = eval_basis_dot(sc.estimator.basis, t)
    ctrl = control_step(sc, variant, state.x, state.u, state.est, t,
                        psi=psi, psi_dot=psi_dot, Q=Q)
    v = ctrl.v if held_v is None else held_v
    d = disturbance(sc.disturbance, t)
    x_dot = sc.model.f(state.x, t) + sc.model.g(state.x, t) @ state.u + d
    u_dot = v + d
    wx_dot, wu_dot, wh_dot = _estimator_rates(sc, variant, ctrl, state.x,
                                              state.est, psi, Q)
    return (x_dot, u_dot, wx_dot, wu_dot, wh_dot), ctrl


def _advance(state: SimState, rates, dt: float) -> SimState:
    x_dot, u_dot, wx_dot, wu_dot, wh_dot = rates
    return SimState(
        t=state.t + dt,
        x=state.x + dt * x_dot,
        u=state.u + dt * u_dot,
        est=EstimatorState(
            w_x=state.est.w_x + dt * wx_dot,
            w_u=state.est.w_u + dt * wu_dot,
            w_h=state.est.w_h + dt * wh_dot,
        ),
    )


def _combine(state: SimState, k1, k2, k3, k4, dt: float) -> SimState:
    sixth = dt / 6.0
    parts = []
    for a, b, c, d in zip(k1, k2, k3, k4):
        parts.append(sixth * (a + 2.0 * b + 2.0 * c + d))
    return SimState(
        t=state.t + dt,
        x=state.x + parts[0],
        u=state.u + parts[1],
        est=EstimatorState(
            w_x=state.est.w_x + parts[2],
            w_u=state.est.w_u + parts[3],
            w_h=state.est.w_h + parts[4],
        ),
    )


def _clamp_w_h(est: EstimatorState, w_bar: float, nu: float):
    """Radial retraction onto the inflated projection ball."""
    limit = w_bar + nu
    for j in range(est.w_h.shape[0]):
        norm = float(np.linalg.norm(est.w_h[j]))
        if norm > limit:
            est.w_h[j] *= limit / norm


_COMPONENTS = ("x", "u", "w_x", "w_u", "w_h")


def _check_finite(state: SimState):
    for name, arr in zip(_COMPONENTS, (state.x, state.u, state.est.w_x,
                                       state.est.w_u, state.est.w_h)):
        if not np.all(np.isfinite(arr)):
            raise NumericalBlowupError(
                f"non-finite value in component {name!r} at t = {state.t:.6g}"
            )


def step(sc: Scenario, state: SimState, dt: float, Q,
         variant: Variant | None = None):
    """One RK4 step of the closed loop; returns (new_state, stage-1 control)."""
    if variant is None:
        variant = sc.variant
    t = state.t
    k1, ctrl = _rhs(sc, variant, state, t, Q)
    held = ctrl.v if sc.zoh else None
    half = 0.5 * dt
    k2, _ = _rhs(sc, variant, _advance(state, k1, half), t + half, Q, held_v=held)
    k3, _ = _rhs(sc, variant, _advance(state, k2, half), t + half, Q, held_v=held)
    k4, _ = _rhs(sc, variant, _advance(state, k3, dt), t + dt, Q, held_v=held)
    new = _combine(state, k1, k2, k3, k4, dt)
    _clamp_w_h(new.est, sc.estimator.w_bar, sc.estimator.nu)
    _check_finite(new)
    return new, ctrl


def initial_state(sc: Scenario) -> SimState:
    n_basis = sc.estimator.basis.count
    return SimState(
        t=0.0,
        x=sc.x0.astype(float).copy(),
        u=sc.u0.astype(float).copy(),
        est=EstimatorState.zeros(n_basis, sc.model.dim_x, sc.model.dim_u),
    )


def barrier_gains(sc: Scenario) -> np.ndarray:
    """Per-term adaptation gains Q_j for the barrier weights.

    Computed from the initial barrier value at the q_scale fraction of the
    admissible upper bound; never configured directly.
    """
    h0 = eval_barrier(sc.barrier, sc.x0, sc.u0, 0.0).h
    m_basis = sc.estimator.basis.count
    bound = select_Q(h0, m_basis, sc.estimator.w_bar, np.zeros(m_basis))
    return sc.estimator.q_scale * bound


def run(sc: Scenario, variant: Variant | None = None) -> Trace:
    """Integrate the scenario over [0, T] and return the logged Trace.

    Scalar plants take a specialized float path (same math, far less
    array overhead); a regression test pins the two paths against each
    other.
    """
    if variant is None:
        variant = sc.variant
    if sc.model.dim_x == 1 and sc.model.dim_u == 1 and not sc.zoh:
        return _run_scalar(sc, variant)
    return _run_general(sc, variant)


def _run_general(sc: Scenario, variant: Variant) -> Trace:
    started = time.perf_counter()
    Q = barrier_gains(sc)
    state = initial_state(sc)
    n_steps = int(round(sc.T / sc.dt))
    log_every = sc.effective_log_every

    rows = []
    min_h_all = math.inf
    n_slack = 0
    n_infeasible = 0
    kappa_warnings = 0
    prev_kappa = None

    def w_norm_row(est: EstimatorState):
        return (
            float(np.linalg.norm(est.w_x)),
            float(np.linalg.norm(est.w_u)),
            float(max(np.linalg.norm(est.w_h[j]) for j in range(est.w_h.shape[0]))),
        )

    def log_row(state: SimState, ctrl: StepControl):
        rows.append((
            state.t, state.x.copy(), state.u.copy(), ctrl.v.copy(),
            ctrl.mu.copy(), ctrl.phi.copy(), ctrl.barrier.h, ctrl.barrier.kappa,
            ctrl.s_x.copy(), ctrl.s_u.copy(), w_norm_row(state.est),
            _STATUS_CODE[ctrl.status], ctrl.clf_slack, ctrl.cbf_b,
        ))

    for k in range(n_steps):
        new_state, ctrl = step(sc, state, sc.dt, Q, variant)
        if ctrl.status is QPStatus.INFEASIBLE:
            n_infeasible += 1
        elif ctrl.status is QPStatus.SLACK_ACTIVE:
            n_slack += 1
        min_h_all = min(min_h_all, ctrl.barrier.h)
        if prev_kappa is not None:
            if abs(ctrl.barrier.kappa - prev_kappa) / sc.dt > sc.barrier.pi_kappa:
                kappa_warnings += 1
        prev_kappa = ctrl.barrier.kappa
        if k % log_every == 0:
            log_row(state, ctrl)
        state = new_state

    # final sample at t = T with a fresh controller evaluation
    final_ctrl = control_step(sc, variant, state.x, state.u, state.est,
                              state.t, Q=Q)
    min_h_all = min(min_h_all, final_ctrl.barrier.h)
    log_row(state, final_ctrl)

    n = sc.model.dim_x
    m = sc.model.dim_u
    R = len(rows)
    trace = Trace(
        scenario=sc.name,
        variant=variant.value,
        t=np.array([r[0] for r in rows]),
        x=np.array([r[1] for r in rows]).reshape(R, n),
        u=np.array([r[2] for r in rows]).reshape(R, m),
        v=np.array([r[3] for r in rows]).reshape(R, m),
        mu=np.array([r[4] for r in rows]).reshape(R, m),
        phi=np.array([r[5] for r in rows]).reshape(R, m),
        h=np.array([r[6] for r in rows]),
        kappa=np.array([r[7] for r in rows]),
        s_x=np.array([r[8] for r in rows]).reshape(R, n),
        s_u=np.array([r[9] for r in rows]).reshape(R, n),
        w_norms=np.array([r[10] for r in rows]).reshape(R, 3),
        qp_status=np.array([r[11] for r in rows], dtype=np.int8),
        clf_slack=np.array([r[12] for r in rows]),
        cbf_b=np.array([r[13] for r in rows]),
        min_h_all=float(min_h_all),
        final_x_norm=float(np.linalg.norm(state.x)),
        n_slack=n_slack,
        n_infeasible=n_infeasible,
        kappa_dot_warnings=kappa_warnings,
        wall_time=time.perf_counter() - started,
    )
    return trace


# ---------------------------------------------------------------------------
# Scalar fast path
# ---------------------------------------------------------------------------

def _compile_disturbance(spec: DisturbanceSpec):
    kind = spec.kind
    if kind is DisturbanceKind.ZERO:
        return lambda t: 0.0
    if kind is DisturbanceKind.CUSTOM:
        expr = spec.expr
        scale = spec.scale
        return lambda t: scale * expr((), (), t)
    normalized = kind is DisturbanceKind.PIECEWISE_NORMALIZED
    period = spec.period
    d_max = spec.d_max
    scale = spec.scale

    def piecewise(t: float) -> float:
        if normalized:
            t = 6.0 * (t % period) / period
            T = 6.0
        else:
            t = t % period
            T = period
        if t < T / 6.0:
            val = 0.5 * d_max * t
        elif t < T / 3.0:
            val = d_max * t
        elif t < 2.0 * T / 3.0:
            val = 0.5 * d_max * (T / 2.0 - t)
        elif t < 5.0 * T / 6.0:
            val = -d_max
        else:
            val = 0.5 * d_max * (t - T)
        return scale * val

    return piecewise


def _run_scalar(sc: Scenario, variant: Variant) -> Trace:
    """run() specialized to dim_x = dim_u = 1 with float arithmetic."""
    from .barrier import BarrierForm, EvalError
    from .controller import SingularInputError
    from .core import CbfMode, Variant as V

    started = time.perf_counter()
    Q = barrier_gains(sc)
    est = sc.estimator
    basis = est.basis
    n_basis = basis.count
    gains = sc.gains
    cxtx = gains.c_x / gains.theta_x
    cutu = gains.c_u / gains.theta_u
    rho = gains.rho
    lam_x = est.lambda_x
    lam_u = est.lambda_u
    w_bar = est.w_bar
    nu = est.nu
    limit = w_bar + nu
    denom = 2.0 * nu * w_bar + nu * nu
    twoQ = 2.0 * Q
    stand_off = float(np.sum(Q)) * w_bar * w_bar
    pi_kappa = sc.barrier.pi_kappa
    norm_ball = sc.barrier.form is BarrierForm.NORM_BALL
    estimate_mode = sc.cbf_mode is CbfMode.ESTIMATE
    hold_enabled = sc.adapt_hold.value == "cbf_active"
    live = est.enabled and variant is not V.NOMINAL
    proposed = variant is V.PROPOSED
    adapt_h = proposed and est.enabled
    smooth_eps = sc.smooth_sgn_eps

    model = sc.model
    c = model._const
    f_const = float(c["f"][0]) if c["f"] is not None else None
    g_const = float(c["g"][0, 0]) if c["g"] is not None else None
    jf_const = float(c["jf"][0, 0]) if c["jf"] is not None else None
    ft_const = float(c["ft"][0]) if c["ft"] is not None else None
    jg_const = float(c["jg"][0, 0, 0]) if c["jg"] is not None else None
    gt_const = float(c["gt"][0, 0]) if c["gt"] is not None else None
    f_expr = model.f_exprs[0]
    g_expr = model.g_exprs[0][0]
    jf_expr = model._jf[0][0]
    ft_expr = model._ft[0]
    jg_expr = model._jg[0][0][0]
    gt_expr = model._gt[0][0]
    kappa_fn = sc.barrier.kappa_expr
    dkdx_fn = sc.barrier.dkappa_dx[0]
    dkdt_fn = sc.barrier.dkappa_dt
    phi_expr = sc.phi_expr
    dist = _compile_disturbance(sc.disturbance)

    basis_cache = [None, None, None]  # t, psi, psi_dot

    def basis_at(t):
        if basis_cache[0] == t:
            return basis_cache[1], basis_cache[2]
        psi = eval_basis(basis, t)
        psi_dot = eval_basis_dot(basis, t)
        basis_cache[0] = t
        basis_cache[1] = psi
        basis_cache[2] = psi_dot
        return psi, psi_dot

    def stage(t, x, u, Wx, Wu, Wh):
        """Returns (x_dot, u_dot, Wx_dot|None, Wu_dot|None, Wh_dot|None, info)."""
        psi, psi_dot = basis_at(t)
        xt = (x,)
        ut = (u,)
        f = f_const if f_const is not None else f_expr(xt, xt, t)
        g = g_const if g_const is not None else g_expr(xt, xt, t)
        gu = g * u
        wxs = float(Wx @ psi) if live else 0.0
        u_d = -wxs - cxtx * x
        s_u = f + gu - u_d
        wus = float(Wu @ psi) if live else 0.0

        if phi_expr is not None:
            if smooth_eps > 0.0:
                phi = phi_expr.eval_smooth(xt, ut, t, smooth_eps)
            else:
                phi = phi_expr(xt, ut, t)
        else:
            if abs(g) < 1e-10:
                raise SingularInputError("scalar g is numerically zero")
            x_hat_dot = f + gu + wxs
            jf = jf_const if jf_const is not None else jf_expr(xt, xt, t)
            ft = ft_const if ft_const is not None else ft_expr(xt, xt, t)
            jg = jg_const if jg_const is not None else jg_expr(xt, xt, t)
            gt = gt_const if gt_const is not None else gt_expr(xt, xt, t)
            f_dot = ft + jf * x_hat_dot
            g_dot = gt + jg * x_hat_dot
            w_x_dot_sum = (float(psi @ psi) / lam_x) * x if live else 0.0
            w_x_psidot = float(Wx @ psi_dot) if live else 0.0
            bracket = (
                -f_dot - wus - w_x_dot_sum - w_x_psidot
                - cutu * (f + gu + wxs + cxtx * x)
                - g_dot * u - cxtx * (f + gu)
            )
            phi = bracket / g

        kappa = kappa_fn(xt, ut, t)
        if math.isnan(kappa) or kappa == -math.inf:
            raise EvalError(f"kappa undefined at x={x}, t={t}")
        if norm_ball:
            h = kappa * kappa - u * u
            dh_du = -2.0 * u
            dh_dk = 2.0 * kappa
        else:
            h = kappa - u
            dh_du = -1.0
            dh_dk = 1.0
        dkdx = dkdx_fn(xt, ut, t)
        kappa_dot_est = dkdx * (f + gu + wxs) + dkdt_fn(xt, ut, t)

        mu = 0.0
        status = 0
        slack = 0.0
        cbf_active = False
        b_cbf_log = math.nan
        if proposed:
            boundary = dh_dk * kappa_dot_est if estimate_mode \
                else -abs(dh_dk) * pi_kappa
            b_cbf = -boundary - 0.5 * rho * (h - stand_off) - dh_du * (phi + wus)
            b_cbf_log = b_cbf
            a_clf = g * s_u
            b_clf = cutu * s_u * s_u
            if b_cbf <= 1e-9:
                cbf_active = abs(b_cbf) <= 1e-9 and dh_du != 0.0
            elif dh_du == 0.0:
                status = 2  # hard row unsatisfiable at this point
                cbf_active = True
            else:
                lo, hi = ((b_cbf / dh_du, math.inf) if dh_du > 0.0
                          else (-math.inf, b_cbf / dh_du))
                if a_clf > 0.0:
                    hi = min(hi, b_clf / a_clf)
                elif a_clf < 0.0:
                    lo = max(lo, b_clf / a_clf)
                if lo <= hi + 1e-9:
                    mu = min(max(0.0, lo), hi)
                    cbf_active = mu != 0.0 and (mu == lo if dh_du > 0.0 else mu == hi)
                else:
                    mu = b_cbf / dh_du
                    slack = max(0.0, a_clf * mu - b_clf)
                    status = 1 if slack > 1e-9 else 0
                    cbf_active = True
        v = phi + mu

        d = dist(t)
        x_dot = f + gu + d
        u_dot = v + d

        Wx_dot = Wu_dot = Wh_dot = None
        if live:
            hold = hold_enabled and proposed and cbf_active
            if not hold:
                Wx_dot = psi * (x / lam_x)
                Wu_dot = psi * (s_u / lam_u)
            if adapt_h:
                raw = -(psi / twoQ) * dh_du - 0.5 * rho * Wh
                l_vals = (Wh * Wh - w_bar * w_bar) / denom
                y_dot_w = raw * Wh
                idx = np.flatnonzero((l_vals > 0.0) & (y_dot_w > 0.0))
                if idx.size:
                    Wh_dot = raw.copy()
                    coeff = l_vals[idx] * y_dot_w[idx] / (Wh[idx] * Wh[idx])
                    Wh_dot[idx] -= coeff * Wh[idx]
                else:
                    Wh_dot = raw
        info = (v, mu, phi, status, slack, x, s_u, u_d, h, kappa, cbf_active,
                b_cbf_log)
        return x_dot, u_dot, Wx_dot, Wu_dot, Wh_dot, info

    def axpy(w, dw, s):
        return w if dw is None else w + s * dw

    def combine4(w, d1, d2, d3, d4, sixth):
        if d1 is None and d2 is None and d3 is None and d4 is None:
            return w
        z = np.zeros_like(w)
        a = z if d1 is None else d1
        b = z if d2 is None else d2
        c = z if d3 is None else d3
        d = z if d4 is None else d4
        return w + sixth * (a + 2.0 * b + 2.0 * c + d)

    x = float(sc.x0[0])
    u = float(sc.u0[0])
    Wx = np.zeros(n_basis)
    Wu = np.zeros(n_basis)
    Wh = np.zeros(n_basis)
    dt = sc.dt
    half = 0.5 * dt
    sixth = dt / 6.0
    n_steps = int(round(sc.T / dt))
    log_every = sc.effective_log_every

    rows = []
    min_h_all = math.inf
    n_slack = 0
    n_infeasible = 0
    kappa_warnings = 0
    prev_kappa = None

    def log_row(t, x, u, Wx, Wu, Wh, info):
        v, mu, phi, status, slack, s_x, s_u, u_d, h, kappa, _, b_cbf = info
        rows.append((
            t, x, u, v, mu, phi, h, kappa, s_x, s_u,
            (float(np.linalg.norm(Wx)), float(np.linalg.norm(Wu)),
             float(np.max(np.abs(Wh)))),
            status, slack, b_cbf,
        ))

    t = 0.0
    for k in range(n_steps):
        xd1, ud1, wx1, wu1, wh1, info = stage(t, x, u, Wx, Wu, Wh)
        status = info[3]
        if status == 2:
            n_infeasible += 1
        elif status == 1:
            n_slack += 1
        h_now = info[8]
        if h_now < min_h_all:
            min_h_all = h_now
        kap = info[9]
        if prev_kappa is not None and abs(kap - prev_kappa) / dt > pi_kappa:
            kappa_warnings += 1
        prev_kappa = kap
        if k % log_every == 0:
            log_row(t, x, u, Wx, Wu, Wh, info)

        xd2, ud2, wx2, wu2, wh2, _ = stage(
            t + half, x + half * xd1, u + half * ud1,
            axpy(Wx, wx1, half), axpy(Wu, wu1, half), axpy(Wh, wh1, half))
        xd3, ud3, wx3, wu3, wh3, _ = stage(
            t + half, x + half * xd2, u + half * ud2,
            axpy(Wx, wx2, half), axpy(Wu, wu2, half), axpy(Wh, wh2, half))
        t_next = t + dt
        xd4, ud4, wx4, wu4, wh4, _ = stage(
            t_next, x + dt * xd3, u + dt * ud3,
            axpy(Wx, wx3, dt), axpy(Wu, wu3, dt), axpy(Wh, wh3, dt))

        x = x + sixth * (xd1 + 2.0 * xd2 + 2.0 * xd3 + xd4)
        u = u + sixth * (ud1 + 2.0 * ud2 + 2.0 * ud3 + ud4)
        Wx = combine4(Wx, wx1, wx2, wx3, wx4, sixth)
        Wu = combine4(Wu, wu1, wu2, wu3, wu4, sixth)
        Wh = combine4(Wh, wh1, wh2, wh3, wh4, sixth)
        np.clip(Wh, -limit, limit, out=Wh)
        if not (math.isfinite(x) and math.isfinite(u)):
            comp = "x" if not math.isfinite(x) else "u"
            raise NumericalBlowupError(
                f"non-finite value in component {comp!r} at t = {t_next:.6g}"
            )
        if not (np.all(np.isfinite(Wx)) and np.all(np.isfinite(Wu))):
            raise NumericalBlowupError(
                f"non-finite value in component 'w_x'/'w_u' at t = {t_next:.6g}"
            )
        t = t_next

    _, _, _, _, _, info = stage(t, x, u, Wx, Wu, Wh)
    if info[8] < min_h_all:
        min_h_all = info[8]
    log_row(t, x, u, Wx, Wu, Wh, info)

    R = len(rows)
    trace = Trace(
        scenario=sc.name,
        variant=variant.value,
        t=np.array([r[0] for r in rows]),
        x=np.array([r[1] for r in rows]).reshape(R, 1),
        u=np.array([r[2] for r in rows]).reshape(R, 1),
        v=np.array([r[3] for r in rows]).reshape(R, 1),
        mu=np.array([r[4] for r in rows]).reshape(R, 1),
        phi=np.array([r[5] for r in rows]).reshape(R, 1),
        h=np.array([r[6] for r in rows]),
        kappa=np.array([r[7] for r in rows]),
        s_x=np.array([r[8] for r in rows]).reshape(R, 1),
        s_u=np.array([r[9] for r in rows]).reshape(R, 1),
        w_norms=np.array([r[10] for r in rows]).reshape(R, 3),
        qp_status=np.array([r[11] for r in rows], dtype=np.int8),
        clf_slack=np.array([r[12] for r in rows]),
        cbf_b=np.array([r[13] for r in rows]),
        min_h_all=float(min_h_all),
        final_x_norm=abs(x),
        n_slack=n_slack,
        n_infeasible=n_infeasible,
        kappa_dot_warnings=kappa_warnings,
        wall_time=time.perf_counter() - started,
    )
    return trace
