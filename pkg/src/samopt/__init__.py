"""samopt: sharpness-aware stochastic optimization on finite sums.

Blended SAM/USAM updates under arbitrary sampling, expected-residual
constants, theory-derived step sizes, and a reproducible experiment harness.
"""

from .core import (
    MetadataMissingError,
    NumericOverflowError,
    Problem,
    ProblemStats,
    SamplingVector,
    eval_loss,
    grad_full,
    grad_stoch,
    stream,
)
from .problems import (
    LogisticSpec,
    RidgeSpec,
    gen_logistic,
    gen_ridge,
    load_problem,
    logistic_from_data,
    problem_from_json,
    problem_to_json,
    ridge_from_data,
    save_problem,
    sigma_one,
    sigma_star,
)
from .sampling import (
    ERConstants,
    ERReport,
    SamplingScheme,
    draw,
    er_constants,
    er_preset,
    full_batch,
    importance_probs,
    single_element,
    tau_nice,
    uniform_single_element,
    verify_er,
)
from .schedules import (
    PLRates,
    PLRequiredError,
    StepPlan,
    lambda_schedule,
    nonconvex_min_iters,
    nonconvex_steps,
    pl_constant_steps,
    pl_decreasing_steps,
)
from .optimizer import (
    HAVE_COMPILED,
    DivergenceError,
    OptimizerConfig,
    RunRecord,
    run,
    unified_sam_step,
    unified_vasso_step,
)

__version__ = "0.1.0"
