import numpy as np
import pytest

from iccbf.core import (
    CbfMode,
    DisturbanceKind,
    InvalidScenarioError,
    ScenarioNotFoundError,
    Variant,
    builtin_scenario,
    load_scenario,
    scenario_to_config,
)


class TestBuiltins:
    def test_case2_parameters(self):
        sc = builtin_scenario("case2")
        assert sc.gains.c_x == 0.21
        assert sc.gains.c_u == 0.21
        assert sc.gains.theta_x == 0.1
        assert sc.gains.rho == 0.95
        assert sc.barrier.pi_kappa == 15.0
        assert sc.estimator.w_bar == 20.0
        assert sc.estimator.nu == 0.1
        assert sc.estimator.basis.count == 5
        assert sc.estimator.lambda_x == 1.0
        assert sc.T == 120.0
        assert sc.x0.tolist() == [5.0]
        assert sc.u0.tolist() == [0.0]
        assert sc.disturbance.kind is DisturbanceKind.PIECEWISE_RAMP

    def test_case1_constraint_value(self):
        sc = builtin_scenario("case1")
        assert float(sc.barrier.kappa([3.0], [0.0], 0.0)) == pytest.approx(3.2)
        assert sc.x0.tolist() == [3.0]
        assert sc.T == 10.0

    def test_case1_double_integrator_flavor(self):
        sc = builtin_scenario("case1_double")
        assert sc.model.dim_x == 2
        assert sc.model.f([1.0, 4.0], 0.0).tolist() == [4.0, 0.0]
        assert sc.model.g([1.0, 4.0], 0.0).tolist() == [[0.0], [1.0]]

    def test_unknown_name(self):
        with pytest.raises(ScenarioNotFoundError):
            builtin_scenario("nope")

    def test_initial_input_safety(self):
        from iccbf import eval_barrier

        sc = builtin_scenario("case2")
        kappa0 = float(sc.barrier.kappa(sc.x0, sc.u0, 0.0))
        h0 = eval_barrier(sc.barrier, sc.x0, sc.u0, 0.0).h
        assert h0 == pytest.approx(kappa0**2 - float(sc.u0 @ sc.u0))
        assert h0 > 0


class TestLoadScenario:
    def test_base_with_override(self):
        sc = load_scenario("[run]\nbase = case2\ndt = 0.0005\n")
        base = builtin_scenario("case2")
        assert sc.dt == 0.0005
        assert sc.T == base.T
        assert sc.gains.c_x == base.gains.c_x
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, t = [rng.uniform(-3, 3)], rng.uniform(0, 50)
            assert float(sc.barrier.kappa(x, [0.0], t)) == float(
                base.barrier.kappa(x, [0.0], t))

    def test_expression_value(self):
        sc = load_scenario(
            "[run]\nbase = case2\n[barrier]\n"
            "kappa = sqrt(-0.1*sin(x1) - 1/(t+10) + 0.25)\n"
        )
        assert float(sc.barrier.kappa([5.0], [0.0], 0.0)) == pytest.approx(
            0.4959, abs=1e-4)

    def test_unsafe_initial_input_rejected(self):
        with pytest.raises(InvalidScenarioError, match="h\\(x0, u0, 0\\)"):
            load_scenario("[run]\nbase = case2\nu0 = 1.0\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidScenarioError, match="unknown key"):
            load_scenario("[run]\nbase = case2\nbogus_key = 1\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(InvalidScenarioError, match="unknown section"):
            load_scenario("[run]\nbase = case2\n[wat]\nx = 1\n")

    def test_parse_error_carries_location(self):
        with pytest.raises(InvalidScenarioError, match="line"):
            load_scenario("[run]\nbase = case2\nthis is not a kv pair\n")

    def test_dt_must_not_exceed_horizon(self):
        with pytest.raises(InvalidScenarioError, match="dt"):
            load_scenario("[run]\nbase = case2\nT = 0.0005\n")

    def test_variant_and_mode_parsing(self):
        sc = load_scenario(
            "[run]\nbase = case2\nvariant = clf-only\ncbf_mode = worst_case\n"
        )
        assert sc.variant is Variant.CLF_ONLY
        assert sc.cbf_mode is CbfMode.WORST_CASE

    def test_zero_g_rejected(self):
        text = (
            "[run]\nname = t\nT = 1\ndt = 0.01\nx0 = 0\nu0 = 0\n"
            "[model]\ndim_x = 1\ndim_u = 1\nf1 = 0\ng11 = 0\n"
            "[barrier]\nform = norm_ball\nkappa = 1\npi_kappa = 1\n"
        )
        with pytest.raises(InvalidScenarioError, match="g"):
            load_scenario(text)


@pytest.mark.parametrize("name", ["case1", "case1_double", "case2", "example1_blf"])
def test_config_roundtrip(name):
    sc = builtin_scenario(name)
    sc2 = load_scenario(scenario_to_config(sc))
    rng = np.random.default_rng(17)
    n = sc.model.dim_x
    for _ in range(100):
        x = rng.uniform(-4, 4, size=n)
        t = rng.uniform(0, sc.T)
        f1, f2 = sc.model.f(x, t), sc2.model.f(x, t)
        g1, g2 = sc.model.g(x, t), sc2.model.g(x, t)
        k1 = float(sc.barrier.kappa(x, [0.0], t))
        k2 = float(sc2.barrier.kappa(x, [0.0], t))
        assert np.allclose(f1, f2, rtol=1e-12, atol=0)
        assert np.allclose(g1, g2, rtol=1e-12, atol=0)
        if not (np.isnan(k1) and np.isnan(k2)):
            assert k1 == pytest.approx(k2, rel=1e-12)
    assert sc2.estimator.w_bar == sc.estimator.w_bar
    assert sc2.variant is sc.variant
    assert sc2.smooth_sgn_eps == sc.smooth_sgn_eps


def test_constant_model_caching_matches_expressions():
    text = (
        "[run]\nname = t\nT = 1\ndt = 0.01\nx0 = 1, 0\nu0 = 0\n"
        "[model]\ndim_x = 2\ndim_u = 1\nf1 = x2\nf2 = -sin(x1)\ng11 = 0\ng21 = 1 + t\n"
        "[barrier]\nform = norm_ball\nkappa = 2 + 0*x1\npi_kappa = 1\n"
    )
    sc = load_scenario(text)
    x = np.array([0.3, -0.4])
    assert sc.model.f(x, 1.0) == pytest.approx([-0.4, -np.sin(0.3)])
    assert np.allclose(sc.model.jac_f(x, 1.0), [[0, 1], [-np.cos(0.3), 0]])
    assert np.allclose(sc.model.dg_dt(x, 1.0), [[0.0], [1.0]])
    assert sc.model.jac_g(x, 1.0).shape == (2, 1, 2)
