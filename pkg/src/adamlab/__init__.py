"""adamlab: a desk-scale verification lab for Adam-style optimizers.

Implements the exact uncorrected Adam update with bounded stochastic
oracles, decides hyperparameter sufficient conditions analytically,
evaluates the explicit convergence bounds with their closed-form
constants, brute-forces the supporting inequalities, and drives seeded,
byte-reproducible Monte-Carlo experiments from JSON configs.
"""

__version__ = "0.1.0"

from .schedules import (  # noqa: F401
    ConstantBeta,
    ConstantTheta,
    HyperParams,
    PLStep,
    PowerEta,
    PowerTheta,
    ScheduleVerdict,
    Tabulated,
    check_sc_adam,
    check_sc_zou,
    eval_schedule,
    implication_property,
    schedule_values,
)
from .problems import (  # noqa: F401
    CertificationError,
    NoiseModel,
    Problem,
    builtin,
    certify_constants,
    finite_diff_check,
    grad_oracle,
)
from .optimizer import (  # noqa: F401
    AdamState,
    DivisionHazardError,
    StepRecord,
    Trajectory,
    adam_step,
    init_state,
    run,
)
from .ergodic import (  # noqa: F401
    IndexSelector,
    MinimumSelector,
    PowerWeight,
    StepWeighted,
    Uniform,
    ergodic_average,
    last_iterate,
    prop1_audit,
    weights,
)
from .bounds import (  # noqa: F401
    GradBoundConstants,
    PLBoundConstants,
    RateFit,
    audit_trajectory,
    fit_rate,
    gamma_products,
    geom_double_sum_check,
    min_output_bound,
    min_output_constants,
    pl_constants,
    pl_gap_bound,
    recursion_unroll_check,
    uniform_output_bound,
    uniform_output_constants,
)
