"""Scenario model: domain types, builtin case studies, config parsing.

A Scenario fully describes one closed-loop experiment: the plant, the
input-constraint barrier, the disturbance, the estimator configuration,
controller gains and variant, initial conditions, horizon and step size.
Plant and barrier functions are expression strings in the grammar of
:mod:`iccbf.expr`, so scenarios are data and round-trip through the config
format losslessly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .adapt import EstimatorConfig
from .barrier import BarrierForm
from .basis import BasisSpec
from .expr import Expr, ExprError, Var


class ScenarioNotFoundError(KeyError):
    pass


class InvalidScenarioError(ValueError):
    """A scenario violates one of its construction invariants."""


class Variant(Enum):
    PROPOSED = "proposed"
    NOMINAL = "nominal"
    CLF_ONLY = "clf-only"


class DisturbanceKind(Enum):
    ZERO = "zero"
    PIECEWISE_RAMP = "piecewise_ramp"
    PIECEWISE_NORMALIZED = "piecewise_normalized"
    CUSTOM = "custom"


class CbfMode(Enum):
    # how the barrier row accounts for the moving constraint boundary:
    # propagate the model-based boundary rate, or charge the worst case
    ESTIMATE = "estimate"
    WORST_CASE = "worst_case"


class AdaptHold(Enum):
    # windup guard: freeze the tracking estimators while the safety row
    # overrides the nominal control
    CBF_ACTIVE = "cbf_active"
    NEVER = "never"


def _check_vars(expr: Expr, allow_x: bool, allow_u: bool, what: str):
    def walk(node):
        if isinstance(node, Var):
            if node.kind == "x" and not allow_x:
                raise InvalidScenarioError(f"{what} must not reference x")
            if node.kind == "u" and not allow_u:
                raise InvalidScenarioError(f"{what} must not reference u")
        for attr in ("left", "right", "arg"):
            child = getattr(node, attr, None)
            if child is not None:
                walk(child)

    walk(expr.ast)


def _const_or_none(exprs_nested, builder):
    """Fold a nested tuple of expressions to an ndarray when all are Num."""
    from .expr import Num

    def all_num(node):
        if isinstance(node, tuple):
            return all(all_num(e) for e in node)
        return isinstance(node.ast, Num)

    return builder() if all_num(exprs_nested) else None


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Control-affine plant xdot = f(x, t) + g(x, t) u + d_x."""

    dim_x: int
    dim_u: int
    f_exprs: tuple  # dim_x expressions over (x, t)
    g_exprs: tuple  # dim_x tuples of dim_u expressions over (x, t)
    _jf: tuple = field(init=False, repr=False)
    _ft: tuple = field(init=False, repr=False)
    _jg: tuple = field(init=False, repr=False)
    _gt: tuple = field(init=False, repr=False)
    _const: dict = field(init=False, repr=False)

    def __post_init__(self):
        for e in self.f_exprs:
            _check_vars(e, allow_x=True, allow_u=False, what="f")
        for row in self.g_exprs:
            for e in row:
                _check_vars(e, allow_x=True, allow_u=False, what="g")
        object.__setattr__(
            self, "_jf",
            tuple(tuple(e.diff("x", j) for j in range(self.dim_x)) for e in self.f_exprs),
        )
        object.__setattr__(self, "_ft", tuple(e.diff("t") for e in self.f_exprs))
        object.__setattr__(
            self, "_jg",
            tuple(
                tuple(tuple(e.diff("x", k) for k in range(self.dim_x)) for e in row)
                for row in self.g_exprs
            ),
        )
        object.__setattr__(
            self, "_gt", tuple(tuple(e.diff("t") for e in row) for row in self.g_exprs)
        )
        # constant models (the bundled case studies have f, g constant)
        # evaluate once; callers treat the returned arrays as read-only
        zero = np.zeros(self.dim_x)
        const = {
            "f": _const_or_none(self.f_exprs, lambda: self._eval_f(zero, 0.0)),
            "g": _const_or_none(self.g_exprs, lambda: self._eval_g(zero, 0.0)),
            "jf": _const_or_none(self._jf, lambda: self._eval_jf(zero, 0.0)),
            "ft": _const_or_none(self._ft, lambda: self._eval_ft(zero, 0.0)),
            "jg": _const_or_none(self._jg, lambda: self._eval_jg(zero, 0.0)),
            "gt": _const_or_none(self._gt, lambda: self._eval_gt(zero, 0.0)),
        }
        object.__setattr__(self, "_const", const)

    def _eval_f(self, x, t):
        return np.array([e(x, x, t) for e in self.f_exprs])

    def _eval_g(self, x, t):
        return np.array([[e(x, x, t) for e in row] for row in self.g_exprs])

    def _eval_jf(self, x, t):
        return np.array([[d(x, x, t) for d in row] for row in self._jf])

    def _eval_ft(self, x, t):
        return np.array([d(x, x, t) for d in self._ft])

    def _eval_jg(self, x, t):
        return np.array(
            [[[d(x, x, t) for d in cell] for cell in row] for row in self._jg]
        )

    def _eval_gt(self, x, t):
        return np.array([[d(x, x, t) for d in row] for row in self._gt])

    def f(self, x, t: float) -> np.ndarray:
        c = self._const["f"]
        return c if c is not None else self._eval_f(x, t)

    def g(self, x, t: float) -> np.ndarray:
        c = self._const["g"]
        return c if c is not None else self._eval_g(x, t)

    def jac_f(self, x, t: float) -> np.ndarray:
        c = self._const["jf"]
        return c if c is not None else self._eval_jf(x, t)

    def df_dt(self, x, t: float) -> np.ndarray:
        c = self._const["ft"]
        return c if c is not None else self._eval_ft(x, t)

    def jac_g(self, x, t: float) -> np.ndarray:
        """Rank-3 array dg[i, j, k] = d g_ij / d x_k."""
        c = self._const["jg"]
        return c if c is not None else self._eval_jg(x, t)

    def dg_dt(self, x, t: float) -> np.ndarray:
        c = self._const["gt"]
        return c if c is not None else self._eval_gt(x, t)


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """Input-constraint boundary kappa(x, t) and the barrier built on it."""

    form: BarrierForm
    kappa_expr: Expr
    pi_kappa: float
    kappa: object = field(init=False, repr=False)
    dkappa_dx: tuple = field(init=False, repr=False)
    dkappa_dt: object = field(init=False, repr=False)

    def __post_init__(self):
        _check_vars(self.kappa_expr, allow_x=True, allow_u=False, what="kappa")
        if self.pi_kappa <= 0.0:
            raise InvalidScenarioError("pi_kappa must be positive")
        object.__setattr__(self, "kappa", self.kappa_expr)
        object.__setattr__(self, "dkappa_dt", self.kappa_expr.diff("t"))
        # dimension of x is not known here; differentiate lazily up to 9
        # indices and trim when the scenario is assembled
        object.__setattr__(self, "dkappa_dx", ())

    def bind_dim(self, dim_x: int) -> "BarrierSpec":
        object.__setattr__(
            self, "dkappa_dx", tuple(self.kappa_expr.diff("x", i) for i in range(dim_x))
        )
        return self


@dataclass(frozen=True)
class DisturbanceSpec:
    kind: DisturbanceKind = DisturbanceKind.ZERO
    d_max: float = 1.0
    period: float = 120.0
    scale: float = 1.0
    expr: Expr | None = None  # custom kind: expression over t


@dataclass(frozen=True)
class Gains:
    c_x: float = 0.21
    c_u: float = 0.21
    theta_x: float = 0.1
    theta_u: float = 0.1
    rho: float = 0.95

    def __post_init__(self):
        for name in ("c_x", "c_u", "theta_x", "theta_u", "rho"):
            if getattr(self, name) <= 0.0:
                raise InvalidScenarioError(f"gain {name} must be positive")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    model: SystemModel
    barrier: BarrierSpec
    disturbance: DisturbanceSpec
    estimator: EstimatorConfig
    gains: Gains
    variant: Variant
    x0: np.ndarray
    u0: np.ndarray
    T: float
    dt: float
    phi_expr: Expr | None = None  # custom nominal control over (x, u, t)
    cbf_mode: CbfMode = CbfMode.ESTIMATE
    adapt_hold: AdaptHold = AdaptHold.CBF_ACTIVE
    zoh: bool = False
    log_every: int | None = None
    smooth_sgn_eps: float = 0.0  # > 0 replaces sgn(u) by tanh(u/eps) in phi

    @property
    def effective_log_every(self) -> int:
        if self.log_every is not None:
            return self.log_every
        return 1 if self.T <= 10.0 else 10


# ---------------------------------------------------------------------------
# Builtin scenarios
# ---------------------------------------------------------------------------

_CASE1 = """\
[run]
name = case1
T = 10
dt = 0.001
x0 = 3
u0 = 0
variant = proposed
cbf_mode = estimate
adapt_hold = cbf_active
smooth_sgn_eps = 1.0

[model]
dim_x = 1
dim_u = 1
f1 = 0
g11 = 1
phi = -x1 - x1^2*sgn(u1) - u1

[barrier]
form = affine_upper
kappa = (x1 - 1)^2 - 0.8
pi_kappa = 15

[disturbance]
kind = zero

[estimator]
basis_count = 1
basis_period = 10
w_bar = 1
nu = 0.1
lambda_x = 1
lambda_u = 1
q_scale = 1
adapt = off

[gains]
c_x = 0.21
c_u = 0.21
theta_x = 0.1
theta_u = 0.1
rho = 0.95
"""

_CASE1_DOUBLE = """\
[run]
name = case1_double
T = 10
dt = 0.001
x0 = 3, 0
u0 = 0
variant = proposed
cbf_mode = estimate
adapt_hold = cbf_active
smooth_sgn_eps = 1.0

[model]
dim_x = 2
dim_u = 1
f1 = x2
f2 = 0
g11 = 0
g21 = 1
phi = -x1 - x1^2*sgn(u1) - u1

[barrier]
form = affine_upper
kappa = (x1 - 1)^2 - 0.8
pi_kappa = 15

[disturbance]
kind = zero

[estimator]
basis_count = 1
basis_period = 10
w_bar = 1
nu = 0.1
lambda_x = 1
lambda_u = 1
q_scale = 1
adapt = off

[gains]
c_x = 0.21
c_u = 0.21
theta_x = 0.1
theta_u = 0.1
rho = 0.95
"""

_CASE2 = """\
[run]
name = case2
T = 120
dt = 0.001
x0 = 5
u0 = 0
variant = proposed
cbf_mode = estimate
adapt_hold = cbf_active

[model]
dim_x = 1
dim_u = 1
f1 = 0
g11 = 1

[barrier]
form = norm_ball
kappa = sqrt(-0.1*sin(x1) - 1/(t + 10) + 0.25)
pi_kappa = 15

[disturbance]
kind = piecewise_ramp
d_max = 1
period = 120
scale = 0.0025

[estimator]
basis_count = 5
basis_period = 120
w_bar = 20
nu = 0.1
lambda_x = 1
lambda_u = 1
q_scale = 0.25
adapt = on

[gains]
c_x = 0.21
c_u = 0.21
theta_x = 0.1
theta_u = 0.1
rho = 0.95
"""

_EXAMPLE1_BLF = """\
[run]
name = example1_blf
T = 12.566370614359172
dt = 0.001
x0 = 0, 0
u0 = 0
variant = proposed
cbf_mode = estimate
adapt_hold = cbf_active

[model]
dim_x = 2
dim_u = 1
f1 = x2
f2 = 0
g11 = 0
g21 = 1
phi = -x1 - x1^2*sgn(u1) - u1

[barrier]
form = norm_ball
kappa = sin(t) + 1
pi_kappa = 1

[disturbance]
kind = zero

[estimator]
basis_count = 1
basis_period = 12.566370614359172
w_bar = 1
nu = 0.1
lambda_x = 1
lambda_u = 1
q_scale = 1
adapt = off

[gains]
c_x = 0.21
c_u = 0.21
theta_x = 0.1
theta_u = 0.1
rho = 0.95
"""

_BUILTIN_TEXT = {
    "case1": _CASE1,
    "case1_double": _CASE1_DOUBLE,
    "case2": _CASE2,
    "example1_blf": _EXAMPLE1_BLF,
}


def builtin_scenario(name: str) -> Scenario:
    """Return one of the bundled case studies by name."""
    if name not in _BUILTIN_TEXT:
        raise ScenarioNotFoundError(
            f"unknown scenario {name!r}; available: {sorted(_BUILTIN_TEXT)}"
        )
    return load_scenario(_BUILTIN_TEXT[name])


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "run": {
        "name", "base", "T", "dt", "x0", "u0", "variant", "cbf_mode",
        "adapt_hold", "zoh", "log_every", "smooth_sgn_eps",
    },
    "model": {"dim_x", "dim_u", "phi", "order"},  # plus f<i>, g<i><j>
    "barrier": {"form", "kappa", "pi_kappa"},
    "disturbance": {"kind", "d_max", "period", "scale", "expr"},
    "estimator": {
        "basis_count", "basis_period", "w_bar", "nu", "lambda_x", "lambda_u",
        "q_scale", "adapt",
    },
    "gains": {"c_x", "c_u", "theta_x", "theta_u", "rho"},
}


def _parse_sections(text: str) -> dict:
    cp = configparser.ConfigParser(strict=True, interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidScenarioError(f"config parse error: {exc}") from exc
    out = {}
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise InvalidScenarioError(f"unknown section [{section}]")
        out[section] = dict(cp.items(section))
    return out


def _check_keys(sections: dict):
    for section, items in sections.items():
        allowed = _SECTION_KEYS[section]
        for key in items:
            if key in allowed:
                continue
            if section == "model" and len(key) >= 2 and key[0] in "fg" and key[1:].isdigit():
                continue
            raise InvalidScenarioError(f"unknown key {key!r} in section [{section}]")


def _merge(base: dict, override: dict) -> dict:
    merged = {sec: dict(items) for sec, items in base.items()}
    for sec, items in override.items():
        merged.setdefault(sec, {})
        merged[sec].update(items)
    return merged


def _get(sections, section, key, default=None):
    return sections.get(section, {}).get(key, default)


def _as_float(sections, section, key, default=None) -> float:
    raw = _get(sections, section, key)
    if raw is None:
        if default is None:
            raise InvalidScenarioError(f"missing required key {key!r} in [{section}]")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise InvalidScenarioError(f"bad number for [{section}] {key} = {raw!r}") from exc


def _as_vector(raw: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in raw.split(",")])
    except ValueError as exc:
        raise InvalidScenarioError(f"bad vector literal {raw!r}") from exc


def _expr(raw: str, what: str) -> Expr:
    try:
        return Expr(raw)
    except ExprError as exc:
        raise InvalidScenarioError(f"bad expression for {what}: {exc}") from exc


def load_scenario(text: str) -> Scenario:
    """Build a Scenario from a config document (see docs/config.md)."""
    sections = _parse_sections(text)
    _check_keys(sections)

    base_name = _get(sections, "run", "base")
    if base_name is not None:
        if base_name not in _BUILTIN_TEXT:
            raise ScenarioNotFoundError(f"unknown base scenario {base_name!r}")
        base_sections = _parse_sections(_BUILTIN_TEXT[base_name])
        sections["run"].pop("base")
        order = _get(sections, "model", "order")
        if order == "double" and base_name == "case1":
            base_sections = _parse_sections(_BUILTIN_TEXT["case1_double"])
            sections["model"].pop("order")
        sections = _merge(base_sections, sections)

    # model ------------------------------------------------------------
    dim_x = int(_as_float(sections, "model", "dim_x"))
    dim_u = int(_as_float(sections, "model", "dim_u"))
    if dim_x < 1 or dim_u < 1:
        raise InvalidScenarioError("dim_x and dim_u must be positive")
    f_exprs = tuple(
        _expr(_get(sections, "model", f"f{i + 1}", "0"), f"f{i + 1}")
        for i in range(dim_x)
    )
    g_exprs = tuple(
        tuple(
            _expr(_get(sections, "model", f"g{i + 1}{j + 1}", "0"), f"g{i + 1}{j + 1}")
            for j in range(dim_u)
        )
        for i in range(dim_x)
    )
    model = SystemModel(dim_x=dim_x, dim_u=dim_u, f_exprs=f_exprs, g_exprs=g_exprs)
    phi_raw = _get(sections, "model", "phi")
    phi_expr = _expr(phi_raw, "phi") if phi_raw is not None else None

    # barrier ------------------------------------------------------------
    form_raw = _get(sections, "barrier", "form", "norm_ball")
    try:
        form = BarrierForm(form_raw)
    except ValueError:
        raise InvalidScenarioError(f"unknown barrier form {form_raw!r}")
    kappa_raw = _get(sections, "barrier", "kappa")
    if kappa_raw is None:
        raise InvalidScenarioError("missing required key 'kappa' in [barrier]")
    barrier = BarrierSpec(
        form=form,
        kappa_expr=_expr(kappa_raw, "kappa"),
        pi_kappa=_as_float(sections, "barrier", "pi_kappa", 1.0),
    ).bind_dim(dim_x)
    if form is BarrierForm.AFFINE_UPPER and dim_u != 1:
        raise InvalidScenarioError("affine_upper barrier requires dim_u = 1")

    # disturbance ---------------------------------------------------------
    kind_raw = _get(sections, "disturbance", "kind", "zero")
    try:
        kind = DisturbanceKind(kind_raw)
    except ValueError:
        raise InvalidScenarioError(f"unknown disturbance kind {kind_raw!r}")
    dist_expr = None
    if kind is DisturbanceKind.CUSTOM:
        raw = _get(sections, "disturbance", "expr")
        if raw is None:
            raise InvalidScenarioError("custom disturbance needs key 'expr'")
        dist_expr = _expr(raw, "disturbance expr")
        _check_vars(dist_expr, allow_x=False, allow_u=False, what="disturbance expr")
    disturbance = DisturbanceSpec(
        kind=kind,
        d_max=_as_float(sections, "disturbance", "d_max", 1.0),
        period=_as_float(sections, "disturbance", "period", 120.0),
        scale=_as_float(sections, "disturbance", "scale", 1.0),
        expr=dist_expr,
    )

    # estimator ----------------------------------------------------------
    estimator = EstimatorConfig(
        basis=BasisSpec(
            count=int(_as_float(sections, "estimator", "basis_count", 5)),
            period=_as_float(sections, "estimator", "basis_period",
                             _as_float(sections, "run", "T")),
        ),
        w_bar=_as_float(sections, "estimator", "w_bar", 20.0),
        nu=_as_float(sections, "estimator", "nu", 0.1),
        lambda_x=_as_float(sections, "estimator", "lambda_x", 1.0),
        lambda_u=_as_float(sections, "estimator", "lambda_u", 1.0),
        q_scale=_as_float(sections, "estimator", "q_scale", 1.0),
        enabled=_get(sections, "estimator", "adapt", "on") == "on",
    )

    # gains / run ----------------------------------------------------------
    gains = Gains(
        c_x=_as_float(sections, "gains", "c_x", 0.21),
        c_u=_as_float(sections, "gains", "c_u", 0.21),
        theta_x=_as_float(sections, "gains", "theta_x", 0.1),
        theta_u=_as_float(sections, "gains", "theta_u", 0.1),
        rho=_as_float(sections, "gains", "rho", 0.95),
    )
    T = _as_float(sections, "run", "T")
    dt = _as_float(sections, "run", "dt", 1e-3)
    x0_raw = _get(sections, "run", "x0")
    u0_raw = _get(sections, "run", "u0")
    if x0_raw is None or u0_raw is None:
        raise InvalidScenarioError("missing required keys 'x0'/'u0' in [run]")
    x0 = _as_vector(x0_raw)
    u0 = _as_vector(u0_raw)
    variant_raw = _get(sections, "run", "variant", "proposed")
    try:
        variant = Variant(variant_raw)
    except ValueError:
        raise InvalidScenarioError(f"unknown variant {variant_raw!r}")
    try:
        cbf_mode = CbfMode(_get(sections, "run", "cbf_mode", "estimate"))
        adapt_hold = AdaptHold(_get(sections, "run", "adapt_hold", "cbf_active"))
    except ValueError as exc:
        raise InvalidScenarioError(str(exc))
    log_every_raw = _get(sections, "run", "log_every")
    zoh_raw = _get(sections, "run", "zoh", "false")

    scenario = Scenario(
        name=_get(sections, "run", "name", "custom"),
        model=model,
        barrier=barrier,
        disturbance=disturbance,
        estimator=estimator,
        gains=gains,
        variant=variant,
        x0=x0,
        u0=u0,
        T=T,
        dt=dt,
        phi_expr=phi_expr,
        cbf_mode=cbf_mode,
        adapt_hold=adapt_hold,
        zoh=zoh_raw.lower() in ("true", "1", "yes", "on"),
        log_every=int(log_every_raw) if log_every_raw is not None else None,
        smooth_sgn_eps=_as_float(sections, "run", "smooth_sgn_eps", 0.0),
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(sc: Scenario):
    """Check construction invariants; raise InvalidScenarioError naming the one that failed."""
    from .barrier import eval_barrier  # local import to avoid cycle at module load

    if sc.x0.shape != (sc.model.dim_x,):
        raise InvalidScenarioError(f"x0 has shape {sc.x0.shape}, expected ({sc.model.dim_x},)")
    if sc.u0.shape != (sc.model.dim_u,):
        raise InvalidScenarioError(f"u0 has shape {sc.u0.shape}, expected ({sc.model.dim_u},)")
    if sc.dt <= 0.0 or sc.dt > sc.T:
        raise InvalidScenarioError("invariant 'dt <= T' violated (or dt <= 0)")
    be = eval_barrier(sc.barrier, sc.x0, sc.u0, 0.0)
    if be.h < 0.0:
        raise InvalidScenarioError(
            f"invariant 'h(x0, u0, 0) >= 0' violated: h = {be.h:.6g}"
        )
    if sc.phi_expr is not None:
        _check_vars(sc.phi_expr, allow_x=True, allow_u=True, what="phi")
    # smoothness / nonzero-g spot checks near the initial state
    rng = np.random.default_rng(0)
    eps = 1e-6
    for _ in range(5):
        x = sc.x0 + rng.normal(scale=0.1, size=sc.model.dim_x)
        t = float(rng.uniform(0.0, max(sc.T, 1.0)))
        g = sc.model.g(x, t)
        jf = sc.model.jac_f(x, t)
        for j in range(sc.model.dim_x):
            dx = np.zeros(sc.model.dim_x)
            dx[j] = eps
            fd = (sc.model.f(x + dx, t) - sc.model.f(x - dx, t)) / (2 * eps)
            if not np.allclose(fd, jf[:, j], atol=1e-4, rtol=1e-3):
                raise InvalidScenarioError(
                    "invariant 'f locally smooth (finite-difference spot check)' violated"
                )
    if np.all(sc.model.g(sc.x0, 0.0) == 0.0):
        raise InvalidScenarioError("invariant 'g(x, t) != 0' violated at x0")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt_vec(v: np.ndarray) -> str:
    return ", ".join(repr(float(c)) for c in v)


def scenario_to_config(sc: Scenario) -> str:
    """Render a Scenario back to config text; load_scenario inverts this."""
    out = io.StringIO()
    w = out.write
    w("[run]\n")
    w(f"name = {sc.name}\n")
    w(f"T = {sc.T!r}\n")
    w(f"dt = {sc.dt!r}\n")
    w(f"x0 = {_fmt_vec(sc.x0)}\n")
    w(f"u0 = {_fmt_vec(sc.u0)}\n")
    w(f"variant = {sc.variant.value}\n")
    w(f"cbf_mode = {sc.cbf_mode.value}\n")
    w(f"adapt_hold = {sc.adapt_hold.value}\n")
    w(f"zoh = {str(sc.zoh).lower()}\n")
    if sc.log_every is not None:
        w(f"log_every = {sc.log_every}\n")
    if sc.smooth_sgn_eps:
        w(f"smooth_sgn_eps = {sc.smooth_sgn_eps!r}\n")
    w("\n[model]\n")
    w(f"dim_x = {sc.model.dim_x}\n")
    w(f"dim_u = {sc.model.dim_u}\n")
    for i, e in enumerate(sc.model.f_exprs):
        w(f"f{i + 1} = {e.source}\n")
    for i, row in enumerate(sc.model.g_exprs):
        for j, e in enumerate(row):
            w(f"g{i + 1}{j + 1} = {e.source}\n")
    if sc.phi_expr is not None:
        w(f"phi = {sc.phi_expr.source}\n")
    w("\n[barrier]\n")
    w(f"form = {sc.barrier.form.value}\n")
    w(f"kappa = {sc.barrier.kappa_expr.source}\n")
    w(f"pi_kappa = {sc.barrier.pi_kappa!r}\n")
    w("\n[disturbance]\n")
    w(f"kind = {sc.disturbance.kind.value}\n")
    w(f"d_max = {sc.disturbance.d_max!r}\n")
    w(f"period = {sc.disturbance.period!r}\n")
    w(f"scale = {sc.disturbance.scale!r}\n")
    if sc.disturbance.expr is not None:
        w(f"expr = {sc.disturbance.expr.source}\n")
    w("\n[estimator]\n")
    w(f"basis_count = {sc.estimator.basis.count}\n")
    w(f"basis_period = {sc.estimator.basis.period!r}\n")
    w(f"w_bar = {sc.estimator.w_bar!r}\n")
    w(f"nu = {sc.estimator.nu!r}\n")
    w(f"lambda_x = {sc.estimator.lambda_x!r}\n")
    w(f"lambda_u = {sc.estimator.lambda_u!r}\n")
    w(f"q_scale = {sc.estimator.q_scale!r}\n")
    w(f"adapt = {'on' if sc.estimator.enabled else 'off'}\n")
    w("\n[gains]\n")
    w(f"c_x = {sc.gains.c_x!r}\n")
    w(f"c_u = {sc.gains.c_u!r}\n")
    w(f"theta_x = {sc.gains.theta_x!r}\n")
    w(f"theta_u = {sc.gains.theta_u!r}\n")
    w(f"rho = {sc.gains.rho!r}\n")
    return out.getvalue()


def with_variant(sc: Scenario, variant: Variant) -> Scenario:
    return replace(sc, variant=variant)
