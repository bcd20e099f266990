"""Exact minimum-norm solver for small dense inequality-constrained QPs.

The controller needs  min ||mu||^2  subject to a handful of linear rows:
stability rows (kind CLF) are soft, safety rows (kind CBF) are hard.
Problems here have at most 8 rows and at most 4 variables, so both solvers
work in closed form:

  solve_min_norm   dual active-set iteration (Goldfarb-Idnani flavored)
  kkt_enumerate    brute-force enumeration of candidate active sets,
                   kept as an independent testing oracle

Both run two phases.  Phase A treats every row as hard; if it is feasible
its minimizer is returned exactly with zero slack.  Otherwise phase B adds
a shared slack delta >= 0 to the CLF rows and minimizes
||mu||^2 + slack_penalty * delta^2.  Infeasibility can then only come from
the hard rows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

FEAS_TOL = 1e-9
_DIRECTION_TOL = 1e-11
MAX_ROWS = 8


class Sense(Enum):
    LE = "le"
    GE = "ge"


class RowKind(Enum):
    CLF = "clf"
    CBF = "cbf"


class QPStatus(Enum):
    OK = "ok"
    SLACK_ACTIVE = "slack"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class Row:
    a: np.ndarray
    b: float
    sense: Sense
    kind: RowKind


@dataclass(frozen=True)
class QPProblem:
    rows: tuple
    dim: int

    def __post_init__(self):
        if len(self.rows) > MAX_ROWS:
            raise ValueError(f"at most {MAX_ROWS} rows supported, got {len(self.rows)}")
        for r in self.rows:
            if np.asarray(r.a).shape != (self.dim,):
                raise ValueError("row coefficient dimension mismatch")


@dataclass(frozen=True)
class QPSolution:
    mu: np.ndarray
    clf_slack: float
    status: QPStatus
    active_set: tuple = field(default=())


def _canonical(problem: QPProblem, with_slack: bool):
    """Rows as c.z >= d over z = mu (phase A) or z = (mu, delta) (phase B)."""
    m = problem.dim
    nz = m + 1 if with_slack else m
    C, d, origin = [], [], []
    for i, row in enumerate(problem.rows):
        a = np.asarray(row.a, dtype=float)
        c = np.zeros(nz)
        if row.sense is Sense.GE:
            c[:m] = a
            rhs = row.b
        else:
            c[:m] = -a
            rhs = -row.b
        if with_slack and row.kind is RowKind.CLF:
            c[m] = 1.0
        C.append(c)
        d.append(rhs)
        origin.append(i)
    if with_slack:
        c = np.zeros(nz)
        c[m] = 1.0
        C.append(c)
        d.append(0.0)
        origin.append(-1)  # the delta >= 0 row has no source row
    return np.array(C), np.array(d), origin


class _DegenerateState(Exception):
    """GI lost its active-set equalities (pathologically conditioned rows)."""


def _gi_solve(C: np.ndarray, d: np.ndarray, g_diag: np.ndarray):
    """Dual active-set iteration for min 1/2 z.G.z s.t. C z >= d, G diagonal.

    Starts from the unconstrained optimum z = 0 and adds the most violated
    row each outer pass, dropping rows whose multiplier would go negative.
    Returns (z, active, lambdas) or None when the rows are inconsistent.
    Raises _DegenerateState when near-dependent rows corrupt the iteration;
    the caller then falls back to exhaustive enumeration.
    """
    n_rows, nz = C.shape
    g_inv = 1.0 / g_diag
    z = np.zeros(nz)
    active: list[int] = []
    lam: list[float] = []

    for _ in range(50 * (n_rows + 1)):
        slack = C @ z - d
        p = int(np.argmin(slack))
        if slack[p] >= -FEAS_TOL * (1.0 + float(np.linalg.norm(z))):
            return z, active, lam
        if p in active:
            # an "active" row is violated: equalities were destroyed by
            # catastrophic cancellation along a near-dependent direction
            raise _DegenerateState
        n_p = C[p]
        lam_p = 0.0  # multiplier of the entering row, accumulated over partial steps
        # inner loop: step toward satisfying row p, dropping blockers
        for _ in range(2 * n_rows + 4):
            if active:
                N = C[active].T  # (nz, k)
                B = N.T @ (g_inv[:, None] * N)
                try:
                    r = np.linalg.solve(B, N.T @ (g_inv * n_p))
                except np.linalg.LinAlgError:
                    return None
                d_z = g_inv * (n_p - N @ r)
            else:
                r = np.zeros(0)
                d_z = g_inv * n_p
            cpd = float(n_p @ d_z)
            s_p = float(n_p @ z - d[p])
            t1 = -s_p / cpd if cpd > _DIRECTION_TOL else np.inf
            t2 = np.inf
            blocker = -1
            for idx, j in enumerate(active):
                if r[idx] > _DIRECTION_TOL:
                    step = lam[idx] / r[idx]
                    if step < t2:
                        t2 = step
                        blocker = idx
            t = min(t1, t2)
            if not np.isfinite(t):
                return None  # no primal progress and no dual blocker: infeasible
            z = z + t * d_z
            for idx in range(len(active)):
                lam[idx] -= t * r[idx]
            lam_p += t
            if t2 < t1:
                del active[blocker]
                del lam[blocker]
                continue
            active.append(p)
            lam.append(lam_p)
            break
        else:
            return None
    raise RuntimeError("active-set iteration did not converge")


def _enumerate_solve(C: np.ndarray, d: np.ndarray, g_diag: np.ndarray):
    """Try every candidate active subset; keep the feasible KKT point.

    For the unique optimum of a strictly convex QP some subset of rows is
    active with nonnegative multipliers, so exhaustive search either finds
    it or proves infeasibility.
    """
    n_rows, nz = C.shape
    g_inv = 1.0 / g_diag
    best = None
    best_obj = np.inf
    for k in range(0, min(n_rows, nz) + 1):
        for subset in itertools.combinations(range(n_rows), k):
            if k == 0:
                z = np.zeros(nz)
                lam = np.zeros(0)
            else:
                N = C[list(subset)].T
                B = N.T @ (g_inv[:, None] * N)
                try:
                    lam = np.linalg.solve(B, d[list(subset)])
                except np.linalg.LinAlgError:
                    continue
                z = g_inv * (N @ lam)
            scale = 1.0 + float(np.linalg.norm(z))
            if lam.size and np.min(lam) < -FEAS_TOL * scale:
                continue
            if np.min(C @ z - d) < -FEAS_TOL * scale:
                continue
            obj = float(z @ (g_diag * z))
            if obj < best_obj - 1e-15:
                best_obj = obj
                best = (z, list(subset), list(lam))
    return best


def _finish(problem, result, with_slack, origin):
    z, active, _ = result
    m = problem.dim
    mu = z[:m].copy()
    delta = float(z[m]) if with_slack else 0.0
    active_rows = tuple(sorted(origin[i] for i in active if origin[i] >= 0))
    if with_slack and delta > FEAS_TOL:
        return QPSolution(mu, delta, QPStatus.SLACK_ACTIVE, active_rows)
    return QPSolution(mu, 0.0, QPStatus.OK, active_rows)


def _solve(problem: QPProblem, slack_penalty: float, engine) -> QPSolution:
    if slack_penalty <= 0.0:
        raise ValueError("slack_penalty must be positive")
    if not problem.rows:
        return QPSolution(np.zeros(problem.dim), 0.0, QPStatus.OK, ())

    # Phase A: everything hard.  An exact minimizer here has zero slack.
    C, d, origin = _canonical(problem, with_slack=False)
    g = np.full(problem.dim, 2.0)
    try:
        result = engine(C, d, g)
    except _DegenerateState:
        result = _enumerate_solve(C, d, g)
    if result is not None:
        return _finish(problem, result, False, origin)

    # Phase B: relax CLF rows with a shared penalized slack.
    C, d, origin = _canonical(problem, with_slack=True)
    g = np.concatenate([np.full(problem.dim, 2.0), [2.0 * slack_penalty]])
    try:
        result = engine(C, d, g)
    except _DegenerateState:
        result = _enumerate_solve(C, d, g)
    if result is not None:
        return _finish(problem, result, True, origin)
    return QPSolution(np.zeros(problem.dim), 0.0, QPStatus.INFEASIBLE, ())


def solve_min_norm(problem: QPProblem, slack_penalty: float = 1e3) -> QPSolution:
    """Minimum-norm correction satisfying the rows; see module docstring."""
    return _solve(problem, slack_penalty, _gi_solve)


def kkt_enumerate(problem: QPProblem, slack_penalty: float = 1e3) -> QPSolution:
    """Independent oracle: same contract as solve_min_norm, by enumeration."""
    if problem.dim > 4:
        raise ValueError("enumeration oracle supports dim <= 4")
    return _solve(problem, slack_penalty, _enumerate_solve)


def solve_controller_rows(row_clf: Row, row_cbf: Row,
                          slack_penalty: float = 1e3) -> QPSolution:
    """Closed-form hot path for the controller's (soft LE, hard GE) pair.

    Scalar decision variables admit an interval solution; anything outside
    that shape (vector mu with both rows binding, negative CLF bound)
    falls back to the general solver.  Agrees with solve_min_norm on the
    shared domain; a property test pins that.
    """
    m = row_clf.a.shape[0]
    a = row_clf.a
    b_c = row_clf.b
    c = row_cbf.a
    b_h = row_cbf.b

    # common case: mu = 0 satisfies both rows
    if b_c >= 0.0 and b_h <= FEAS_TOL:
        active = (1,) if abs(b_h) <= FEAS_TOL and np.any(c) else ()
        return QPSolution(np.zeros(m), 0.0, QPStatus.OK, active)

    if m != 1 or b_c < 0.0:
        problem = QPProblem(rows=(row_clf, row_cbf), dim=m)
        return _solve(problem, slack_penalty, _gi_solve)

    av = float(a[0])
    cv = float(c[0])
    if cv == 0.0:
        if b_h > FEAS_TOL:
            return QPSolution(np.zeros(1), 0.0, QPStatus.INFEASIBLE, ())
        return QPSolution(np.zeros(1), 0.0, QPStatus.OK, ())

    # hard row pins mu to a ray; soft row clips it to an interval
    lo, hi = (b_h / cv, np.inf) if cv > 0.0 else (-np.inf, b_h / cv)
    if av > 0.0:
        hi = min(hi, b_c / av)
    elif av < 0.0:
        lo = max(lo, b_c / av)
    if lo <= hi + FEAS_TOL:
        mu = min(max(0.0, lo), hi)
        active = []
        if mu != 0.0 and (mu == lo if cv > 0.0 else mu == hi):
            active.append(1)
        if av != 0.0 and mu == (b_c / av) and mu != 0.0:
            active.append(0)
        return QPSolution(np.array([mu]), 0.0, QPStatus.OK, tuple(sorted(active)))

    # phase B: hard row fixed, smallest penalized slack on the soft row
    mu = b_h / cv
    delta = max(0.0, av * mu - b_c)
    status = QPStatus.SLACK_ACTIVE if delta > FEAS_TOL else QPStatus.OK
    return QPSolution(np.array([mu]), delta, status, (0, 1))
