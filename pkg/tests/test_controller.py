import numpy as np
import pytest

from iccbf import builtin_scenario, eval_barrier
from iccbf.adapt import EstimatorState
from iccbf.controller import (
    SingularInputError,
    cbf_row,
    clf_row,
    control_step,
    nominal_phi,
    safe_input,
    sliding_surfaces,
    ControllerContext,
)
from iccbf.core import Gains, SystemModel, Variant, load_scenario
from iccbf.expr import Expr
from iccbf.qp import QPStatus, Row, RowKind, Sense
from iccbf.sim import barrier_gains


GAINS = Gains(c_x=0.21, c_u=0.21, theta_x=0.1, theta_u=0.1, rho=0.95)


def scalar_model(f="0", g="1"):
    return SystemModel(dim_x=1, dim_u=1, f_exprs=(Expr(f),),
                       g_exprs=((Expr(g),),))


class TestSlidingSurfaces:
    def test_hand_values(self):
        model = scalar_model()
        w_x = np.zeros((5, 1))
        psi = np.array([1.0, 0, 1, 0, 1])
        s_x, s_u, u_d = sliding_surfaces(model, [1.0], [0.5], 0.0, w_x, psi, GAINS)
        assert s_x == pytest.approx([1.0])
        assert u_d == pytest.approx([-2.1])
        assert s_u == pytest.approx([2.6])

    def test_origin(self):
        model = scalar_model(f="sin(x1)")
        s_x, s_u, u_d = sliding_surfaces(
            model, [0.0], [0.0], 0.0, np.zeros((1, 1)), np.ones(1), GAINS)
        assert s_x == pytest.approx([0.0])
        assert u_d == pytest.approx([0.0])
        assert s_u == pytest.approx(model.f([0.0], 0.0))

    def test_weight_sum_contribution(self):
        model = scalar_model()
        w_x = np.array([[0.4]])
        s_x, s_u, u_d = sliding_surfaces(
            model, [0.0], [0.0], 0.0, w_x, np.ones(1), GAINS)
        assert u_d == pytest.approx([-0.4])
        assert s_u == pytest.approx([0.4])


def phi_reference(model, x, u, t, est, gains, psi, psi_dot, lambda_x,
                  adapt_live=True):
    """Independent term-by-term transcription of the nominal control law."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    f = model.f(x, t)
    g = model.g(x, t)
    w_x_sum = sum(est.w_x[i] * psi[i] for i in range(psi.shape[0]))
    x_hat_dot = f + g @ u + w_x_sum
    f_dot = model.df_dt(x, t) + model.jac_f(x, t) @ x_hat_dot
    g_dot = model.dg_dt(x, t) + model.jac_g(x, t) @ x_hat_dot
    term_rates = np.zeros(model.dim_x)
    for i in range(psi.shape[0]):
        w_x_dot_i = psi[i] * x / lambda_x if adapt_live else 0.0 * x
        term_rates = term_rates + est.w_u[i] * psi[i] + w_x_dot_i * psi[i] \
            + est.w_x[i] * psi_dot[i]
    s_like = f + g @ u + w_x_sum + gains.c_x / gains.theta_x * x
    bracket = (-f_dot - term_rates
               - gains.c_u / gains.theta_u * s_like
               - g_dot @ u
               - gains.c_x / gains.theta_x * (f + g @ u))
    return np.linalg.pinv(g) @ bracket


class TestNominalPhi:
    def test_everything_zero(self):
        model = scalar_model()
        est = EstimatorState.zeros(5, 1, 1)
        phi = nominal_phi(model, [0.0], [0.0], 0.0, est, GAINS,
                          np.zeros(5), np.zeros(5), 1.0)
        assert phi == pytest.approx([0.0], abs=0)

    def test_hand_value(self):
        # estimates and basis values zeroed leaves the two damping terms
        model = scalar_model()
        est = EstimatorState.zeros(5, 1, 1)
        phi = nominal_phi(model, [1.0], [0.5], 0.0, est, GAINS,
                          np.zeros(5), np.zeros(5), 1.0)
        assert phi == pytest.approx([-6.51], rel=1e-12)

    def test_against_independent_transcription(self):
        rng = np.random.default_rng(13)
        models = [
            (scalar_model(), 1, 1),
            (scalar_model(f="-sin(x1)", g="2 + cos(t)"), 1, 1),
            (SystemModel(
                dim_x=2, dim_u=2,
                f_exprs=(Expr("x2"), Expr("-sin(x1) - 0.3*x2")),
                g_exprs=((Expr("1"), Expr("0.2")), (Expr("0.1*x1"), Expr("1 + t"))),
            ), 2, 2),
        ]
        for model, n, m in models:
            for _ in range(50):
                est = EstimatorState(
                    w_x=rng.normal(size=(5, n)),
                    w_u=rng.normal(size=(5, m)),
                    w_h=np.zeros((5, m)),
                )
                x = rng.uniform(-2, 2, size=n)
                u = rng.uniform(-2, 2, size=m)
                t = rng.uniform(0, 10)
                psi = rng.uniform(-1, 1, size=5)
                psi_dot = rng.uniform(-1, 1, size=5)
                got = nominal_phi(model, x, u, t, est, GAINS, psi, psi_dot, 1.0)
                want = phi_reference(model, x, u, t, est, GAINS, psi, psi_dot, 1.0)
                assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))

    def test_singular_input_guard(self):
        model = scalar_model(g="0.00000000001")
        est = EstimatorState.zeros(1, 1, 1)
        with pytest.raises(SingularInputError):
            nominal_phi(model, [1.0], [0.0], 0.0, est, GAINS,
                        np.ones(1), np.zeros(1), 1.0)


class TestRows:
    def test_clf_row_hand_value(self):
        row = clf_row(np.array([2.6]), GAINS)
        assert row.a == pytest.approx([2.6])
        assert row.b == pytest.approx(14.196)
        assert row.sense is Sense.LE
        assert row.kind is RowKind.CLF

    def test_clf_row_vacuous_on_surface(self):
        row = clf_row(np.zeros(1), GAINS)
        assert row.a == pytest.approx([0.0])
        assert row.b == 0.0

    def test_clf_row_admits_zero(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            s_u = rng.normal(size=2)
            row = clf_row(s_u, GAINS)
            assert 0.0 <= row.b + 1e-15

    def test_cbf_row_vacuous_when_unconstrained(self):
        sc = builtin_scenario("case2")
        be = eval_barrier(sc.barrier, [5.0], [0.0], 0.0)
        Q = barrier_gains(sc)
        row = cbf_row(be, np.array([-22.0]), np.zeros((5, 1)), np.zeros(5),
                      Q, 0.95, 20.0, kappa_dot=0.01)
        assert row.a == pytest.approx([0.0])
        assert row.b < 0  # satisfied by any mu

    def test_cbf_row_hand_value_worst_case(self):
        sc = builtin_scenario("case1")
        be = eval_barrier(sc.barrier, [3.0], [0.0], 0.0)
        Q = barrier_gains(sc)
        phi0 = np.array([-3.0])  # nominal control at (x, u) = (3, 0)
        row = cbf_row(be, phi0, np.zeros((1, 1)), np.ones(1), Q, 0.95, 1.0,
                      kappa_dot=None)
        # b = zeta - (rho/2)(h - Q w_bar^2) - dh_du (phi + 0)
        assert Q == pytest.approx([1.6])
        assert row.b == pytest.approx(15.0 - 0.475 * (3.2 - 1.6) - 3.0, rel=1e-12)
        assert row.a == pytest.approx([-1.0])
        assert row.sense is Sense.GE

    def test_cbf_row_matches_inline_inequality(self):
        # a.mu - b must equal the defining expression up to its mu = 0 value
        sc = builtin_scenario("case2")
        rng = np.random.default_rng(8)
        Q = barrier_gains(sc)
        for _ in range(100):
            x = np.array([rng.uniform(-3, 3)])
            u = np.array([rng.uniform(-0.4, 0.4)])
            t = rng.uniform(0, 100)
            be = eval_barrier(sc.barrier, x, u, t)
            phi = np.array([rng.normal()])
            w = rng.normal(size=(5, 1))
            psi = rng.uniform(-1, 1, 5)
            row = cbf_row(be, phi, w, psi, Q, 0.95, 20.0, kappa_dot=None)
            mu = np.array([rng.normal()])
            lhs = (be.dh_du @ (phi + mu + w.T @ psi) - be.zeta
                   + 0.475 * (be.h - float(np.sum(Q)) * 400.0))
            assert float(row.a @ mu - row.b) == pytest.approx(lhs, rel=1e-9, abs=1e-9)

    def test_cbf_row_tightens_with_rho(self):
        sc = builtin_scenario("case1")
        be = eval_barrier(sc.barrier, [3.0], [0.0], 0.0)
        Q = barrier_gains(sc)
        phi0 = np.zeros(1)
        b_lo = cbf_row(be, phi0, np.zeros((1, 1)), np.ones(1), Q, 0.5, 1.0).b
        b_hi = cbf_row(be, phi0, np.zeros((1, 1)), np.ones(1), Q, 0.95, 1.0).b
        assert b_hi < b_lo  # larger decay rate relaxes the row when h is large


class TestSafeInput:
    def _ctx(self, phi, clf, cbf):
        z = np.zeros(1)
        be = eval_barrier(builtin_scenario("case2").barrier, [5.0], [0.0], 0.0)
        return ControllerContext(s_x=z, s_u=z, u_d=z, phi=phi,
                                 clf_row=clf, cbf_row=cbf, barrier=be)

    def test_inactive_filter(self):
        ctx = self._ctx(np.array([-1.0]), clf_row(np.array([2.0]), GAINS),
                        Row(np.array([1.0]), -5.0, Sense.GE, RowKind.CBF))
        v, sol = safe_input(ctx, Variant.PROPOSED)
        assert sol.status is QPStatus.OK
        assert np.array_equal(sol.mu, np.zeros(1))
        assert v == pytest.approx([-1.0])

    def test_binding_row_projection(self):
        cbf = Row(np.array([2.0]), 3.0, Sense.GE, RowKind.CBF)
        ctx = self._ctx(np.zeros(1), clf_row(np.array([0.0]), GAINS), cbf)
        v, sol = safe_input(ctx, Variant.PROPOSED)
        assert sol.mu == pytest.approx([1.5])  # a b / ||a||^2

    def test_clf_only_ignores_barrier(self):
        cbf = Row(np.array([0.0]), 99.0, Sense.GE, RowKind.CBF)  # unsatisfiable
        ctx = self._ctx(np.array([0.7]), clf_row(np.array([1.0]), GAINS), cbf)
        v, sol = safe_input(ctx, Variant.CLF_ONLY)
        assert v == pytest.approx([0.7])
        assert sol.status is QPStatus.OK

    def test_infeasible_falls_back_to_nominal(self):
        cbf = Row(np.array([0.0]), 99.0, Sense.GE, RowKind.CBF)
        ctx = self._ctx(np.array([0.7]), clf_row(np.array([1.0]), GAINS), cbf)
        v, sol = safe_input(ctx, Variant.PROPOSED)
        assert sol.status is QPStatus.INFEASIBLE
        assert v == pytest.approx([0.7])


class TestVariantCoincidence:
    def test_nominal_equals_proposed_when_estimation_is_off(self):
        # estimator disabled and a slack safety row: the filter is inactive
        # and both variants reduce to the same nominal control
        sc = load_scenario(
            "[run]\nbase = case2\n[disturbance]\nkind = zero\n"
            "[estimator]\nadapt = off\n"
        )
        Q = barrier_gains(sc)
        est = EstimatorState.zeros(5, 1, 1)
        a = control_step(sc, Variant.PROPOSED, [0.05], [-0.05], est, 50.0, Q=Q)
        b = control_step(sc, Variant.NOMINAL, [0.05], [-0.05], est, 50.0, Q=Q)
        assert not a.cbf_active and np.array_equal(a.mu, np.zeros(1))
        assert a.v == pytest.approx(b.v, rel=1e-12)
        assert a.phi == pytest.approx(b.phi, rel=1e-12)
