"""Semi-uniform Feller diagnostics for finite-support stochastic kernels, and nonlinear filters."""

from .continuity import (
    ConditionId,
    ConditionReport,
    GapReport,
    SuiteReport,
    Verdict,
    WitnessPlan,
    check_assumption_h,
    check_assumption_kern,
    check_assumption_m,
    condition_gap,
    equivalence_suite,
    judge,
    preservation_check,
)
from .filter import (
    MDPIIModel,
    Variant,
    filter_update,
    mdpci_equivalence_check,
    q_hat,
    q_kernel,
    r_kernel,
    run_filter,
)
from .instances import brute_force_gap, example1, generate_instance, remark_model
from .kernel import (
    BeliefPoint,
    JointKernel,
    Kernel,
    ParamSequence,
    belief_kernel_phi,
    compose_pomdp2,
    disintegrate,
    integrate_kernel,
    marginal,
    product_pomdp1,
)
from .measure import (
    DomainError,
    FunctionFamily,
    Measure,
    Point,
    RealLine,
    Space,
    dirac,
    pushforward,
    signed_sup_gap,
    tv_distance,
    weak_metric,
)

__all__ = [
    "BeliefPoint",
    "ConditionId",
    "ConditionReport",
    "DomainError",
    "FunctionFamily",
    "GapReport",
    "JointKernel",
    "Kernel",
    "MDPIIModel",
    "Measure",
    "ParamSequence",
    "Point",
    "RealLine",
    "Space",
    "SuiteReport",
    "Variant",
    "Verdict",
    "WitnessPlan",
    "belief_kernel_phi",
    "brute_force_gap",
    "check_assumption_h",
    "check_assumption_kern",
    "check_assumption_m",
    "compose_pomdp2",
    "condition_gap",
    "dirac",
    "disintegrate",
    "equivalence_suite",
    "example1",
    "filter_update",
    "generate_instance",
    "integrate_kernel",
    "judge",
    "marginal",
    "mdpci_equivalence_check",
    "preservation_check",
    "product_pomdp1",
    "pushforward",
    "q_hat",
    "q_kernel",
    "r_kernel",
    "remark_model",
    "run_filter",
    "signed_sup_gap",
    "tv_distance",
    "weak_metric",
]

__version__ = "0.1.0"
