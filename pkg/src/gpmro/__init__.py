"""Robust Bayesian optimization of unknown objectives with mixed strategies.

Learns a reward f(x, theta) from noisy point queries and returns a probability
distribution over decisions x that maximizes the worst-case expected reward
over a finite set of adversarial parameter values theta.
"""

__version__ = "0.1.0"

from .domain import (
    DecisionGrid,
    DomainError,
    MaximinResult,
    MixedStrategy,
    NumericError,
    ObjectiveOracle,
    ParamSet,
    PriorQ,
    maximin_value,
    performance,
    tradeoff_value,
)
from .kernels import KernelSpec, Linear, Matern, Product, SquaredExponential, Sum, gram
from .gp import (
    BetaSchedule,
    ConstantBeta,
    GpState,
    TheoreticalBeta,
    beta,
    conf_bounds,
    empty_state,
    fit_state,
    info_gain_greedy,
    info_gain_observed,
    log_marginal_likelihood,
    posterior,
    posterior_batch,
    update,
)
from .algorithms import (
    AlgorithmConfig,
    MwuState,
    RunTrace,
    best_response,
    best_response_tradeoff,
    mwu_update,
    run_clss,
    run_gp_mro,
    run_gp_ucb,
    run_randmaxmin,
    run_stableopt,
    select_theta,
)
from .benchmarks import (
    Benchmark,
    build_perturbed_objective,
    evaluate_run,
    g_poly,
    sample_gp_function,
    sample_unit_ball,
    synth_poly,
    synth_random_gp,
)
