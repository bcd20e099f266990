import math

import numpy as np
import pytest

from iccbf.expr import Expr, ExprError


def ev(src, x=(), u=(), t=0.0):
    return Expr(src)(x, u, t)


def test_arithmetic_and_precedence():
    assert ev("1 + 2*3") == 7.0
    assert ev("(1 + 2)*3") == 9.0
    assert ev("2^3^2") == 512.0  # right-associative
    assert ev("-2^2") == -4.0
    assert ev("4/2/2") == 1.0
    assert ev("2**3") == 8.0


def test_variables_and_constants():
    assert ev("x1 + u1 + t", x=(2.0,), u=(3.0,), t=4.0) == 9.0
    assert ev("x2", x=(1.0, 7.0)) == 7.0
    assert ev("pi") == math.pi


def test_functions():
    assert ev("sin(0)") == 0.0
    assert ev("cos(0)") == 1.0
    assert ev("sqrt(9)") == 3.0
    assert ev("sgn(-3)") == -1.0
    assert ev("sgn(0)") == 0.0
    assert math.isnan(ev("sqrt(-1)"))


def test_case2_constraint_boundary_value():
    # frozen from direct evaluation of the scenario expression
    kappa = Expr("sqrt(-0.1*sin(x1) - 1/(t + 10) + 0.25)")
    assert kappa((5.0,), (), 0.0) == pytest.approx(0.49587541526709494, rel=1e-12)


@pytest.mark.parametrize("bad", [
    "1 +", "foo(3)", "x0", "sin 3", "2 . 5", "(1", "y1",
])
def test_parse_errors(bad):
    with pytest.raises(ExprError):
        Expr(bad)


def test_diff_matches_finite_differences():
    rng = np.random.default_rng(7)
    exprs = [
        "x1^2 + 3*x1*u1 - sin(x2)*t",
        "sqrt(x1^2 + 1) / (t + 2)",
        "cos(2*x1) * sin(u1) + x2/(x1 + 10)",
    ]
    for src in exprs:
        e = Expr(src)
        for kind, index in (("x", 0), ("x", 1), ("u", 0), ("t", 0)):
            d = e.diff(kind, index)
            for _ in range(50):
                x = rng.uniform(-2, 2, size=2)
                u = rng.uniform(-2, 2, size=1)
                t = rng.uniform(0, 5)
                eps = 1e-6
                if kind == "x":
                    xp, xm = x.copy(), x.copy()
                    xp[index] += eps
                    xm[index] -= eps
                    fd = (e(xp, u, t) - e(xm, u, t)) / (2 * eps)
                elif kind == "u":
                    fd = (e(x, u + eps, t) - e(x, u - eps, t)) / (2 * eps)
                else:
                    fd = (e(x, u, t + eps) - e(x, u, t - eps)) / (2 * eps)
                assert d(x, u, t) == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_diff_sgn_is_zero():
    d = Expr("x1^2*sgn(u1)").diff("u", 0)
    assert d((3.0,), (0.5,), 0.0) == 0.0


def test_roundtrip_through_unparse():
    e = Expr("-0.1*sin(x1) - 1/(t + 10) + 0.25")
    e2 = Expr(e.diff("x", 0).source)
    x, u, t = (1.3,), (), 2.0
    assert e2(x, u, t) == e.diff("x", 0)(x, u, t)


def test_smooth_sgn_substitution():
    e = Expr("x1^2*sgn(u1)")
    x, u = (2.0,), (0.3,)
    assert e.eval_smooth(x, u, 0.0, 1.0) == pytest.approx(4.0 * math.tanh(0.3))
    # tight smoothing approaches the hard sign away from zero
    assert e.eval_smooth(x, (1.0,), 0.0, 1e-3) == pytest.approx(4.0, abs=1e-10)
