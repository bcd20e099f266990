"""Input-constrained safety-critical control toolkit.

Turns a magnitude bound ||u|| <= kappa(x, t) into an output constraint by
integrator augmentation, estimates disturbances with adaptive weighted
basis functions, and filters the nominal control through a minimum-norm
CLF-CBF quadratic program.  Ships the bundled case studies, a closed-loop
RK4 simulator and a CSV-emitting CLI.
"""

from .adapt import (
    EstimatorConfig,
    EstimatorState,
    InitialUnsafeError,
    proj,
    select_Q,
    update_w_h,
    update_w_u,
    update_w_x,
)
from .barrier import (
    BarrierEval,
    BarrierForm,
    DegenerateBoundError,
    DomainError,
    EvalError,
    blf_log,
    eval_barrier,
)
from .basis import BasisSpec, eval_basis, eval_basis_dot
from .controller import (
    ControllerContext,
    SingularInputError,
    cbf_row,
    clf_row,
    control_step,
    nominal_phi,
    safe_input,
    sliding_surfaces,
)
from .core import (
    BarrierSpec,
    CbfMode,
    DisturbanceKind,
    DisturbanceSpec,
    Gains,
    InvalidScenarioError,
    Scenario,
    ScenarioNotFoundError,
    SystemModel,
    Variant,
    builtin_scenario,
    load_scenario,
    scenario_to_config,
    with_variant,
)
from .qp import (
    QPProblem,
    QPSolution,
    QPStatus,
    Row,
    RowKind,
    Sense,
    kkt_enumerate,
    solve_min_norm,
)
from .sim import (
    NumericalBlowupError,
    SimState,
    Trace,
    disturbance,
    initial_state,
    run,
    step,
)

__version__ = "0.1.0"
