"""Optimal reinsurance under distortion risk measures and distortion premiums."""

from .contracts import CededContract, contract_eval
from .distortion import (
    DistortionFunction,
    DistortionKind,
    RiskValue,
    distortion_premium,
    distortion_risk,
    distortion_risk_quantile_form,
    identity,
    make_distortion,
    proportional_hazard,
    tail_risk,
    tvar,
    var_step,
)
from .dual import ConstraintSet, DualSolution, check_feasibility, primal_objective, solve_constrained
from .errors import (
    DivergentIntegral,
    GridTooLarge,
    Infeasible,
    InvalidParameter,
    NonMonotoneTable,
    NumericalFailure,
    ProfileIndeterminate,
    ReinsuranceError,
    UnsupportedShape,
)
from .losses import LossDistribution, empirical, exponential, lognormal, pareto, sample_losses
from .objective import (
    ProblemSpec,
    ceded_risk,
    insurer_total_risk,
    lagrangian_value,
    objective_direct,
    objective_layered,
    objective_lemma31,
    premium,
    reinsurer_total_risk,
    retained_risk,
)
from .oracle import OracleResult, Verdict, brute_force_min, cross_validate, monte_carlo_risk
from .solver import (
    CaseLabel,
    KProfile,
    LagrangianConstants,
    SolutionReport,
    beta_for_threshold,
    case_f_lp,
    constants,
    h_sign,
    k_profile,
    k_ratio,
    solve,
)

__version__ = "0.1.0"
