"""Mixed-strategy robust optimization of an unknown reward, plus baselines.

``run_gp_mro`` simulates a zero-sum game between a multiplicative-weights
adversary over the finite parameter set and a learner that best-responds
through optimistic GP confidence bounds, querying the unknown reward once per
round.  The returned strategy is the uniform distribution over the selected
decisions.  Baselines: a deterministic max-min search (``run_stableopt``),
plain joint UCB maximization (``run_gp_ucb``), a coin-flip interleaving of the
two (``run_randmaxmin``), and full-information self-play on the exact table
(``run_clss``) as the oracle-access reference.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .domain import (
    DecisionGrid,
    DomainError,
    MixedStrategy,
    NumericError,
    ObjectiveOracle,
    ParamSet,
    PriorQ,
)
from .gp import (
    BetaSchedule,
    GpState,
    beta,
    empty_state,
    info_gain_observed,
    posterior_batch,
    truncated_bounds,
    update,
)
from .kernels import KernelSpec

_LOSS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Multiplicative weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MwuState:
    """Adversary state: weights proportional to exp(-eta * cumulative losses)."""

    weights: np.ndarray
    eta: float
    cumulative_losses: np.ndarray

    @classmethod
    def init(cls, m: int, eta: float) -> "MwuState":
        if m < 1:
            raise DomainError("need at least one parameter value")
        if eta <= 0:
            raise DomainError("learning rate eta must be positive")
        return cls(np.full(m, 1.0 / m), float(eta), np.zeros(m))


def mwu_update(state: MwuState, losses) -> MwuState:
    """Exponentially down-weight entries with high observed loss.

    Weights are recomputed as a stabilized softmax of the cumulative losses
    (shifting by the minimum before exponentiation), which is exactly the
    renormalized multiplicative update.
    """
    losses = np.asarray(losses, dtype=float).ravel()
    if losses.shape != state.cumulative_losses.shape:
        raise DomainError("loss vector length mismatch")
    if np.any(losses < -_LOSS_TOL) or np.any(losses > 1.0 + _LOSS_TOL):
        raise DomainError("losses must lie in [0, 1]; truncate upstream")
    cum = state.cumulative_losses + losses
    shifted = -state.eta * (cum - cum.min())
    w = np.exp(shifted)
    w /= w.sum()
    return MwuState(w, state.eta, cum)


def default_eta(m: int, horizon: int) -> float:
    return math.sqrt(8.0 * math.log(m) / horizon)


# ---------------------------------------------------------------------------
# Configuration and trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgorithmConfig:
    """Shared knobs for all runners; GP-specific fields are ignored by the
    oracle-access baseline."""

    horizon: int
    kernel: KernelSpec
    beta_schedule: BetaSchedule
    lam: float = 1.0
    eta_override: Optional[float] = None
    chi: float = 1.0
    prior_q: Optional[PriorQ] = None
    seed: int = 0
    variance_gate: Optional[float] = None
    epsilon: Optional[float] = None  # target accuracy, recorded only
    # Constant GP prior mean.  Objectives are normalized into [0, 1], which a
    # zero-mean prior cannot express for kernels without a constant component
    # (a linear kernel would force f(x, .) = -f(-x, .)); modeling the residual
    # around the payoff midpoint removes that bias.
    prior_mean: float = 0.5

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError("horizon must be a positive integer")
        if self.lam <= 0:
            raise DomainError("lam must be positive")
        if not (0.0 <= self.chi <= 1.0):
            raise DomainError("chi must lie in [0, 1]")
        if self.chi < 1.0 and self.prior_q is None:
            raise DomainError("chi < 1 requires a prior over parameters")
        if self.variance_gate is not None and self.variance_gate < 0:
            raise DomainError("variance gate must be nonnegative")

    def eta(self, m: int) -> float:
        return self.eta_override if self.eta_override is not None else default_eta(m, self.horizon)


@dataclass
class RunTrace:
    """Per-round record of one run, plus the final strategy and diagnostics.

    ``report_kind`` says how to reconstruct the strategy the algorithm would
    report at any intermediate round: "uniform_prefix" (uniform over the
    selections so far), "dirac_last", "dirac_report" (per-round reported
    index), or "pair_mix" (50/50 over the two per-round reported indices).
    """

    algorithm: str
    seed: int
    weights: np.ndarray  # (T, m); nan rows for algorithms without an adversary
    x_index: np.ndarray  # (T,)
    theta_index: np.ndarray  # (T,)
    y: np.ndarray  # (T,); nan when the round did not query
    beta: np.ndarray  # (T,)
    sigma: np.ndarray  # (T,) posterior sd at the selected pair before querying
    queried: np.ndarray  # (T,) bool
    info_gain: np.ndarray  # (T,) realized information gain after each round
    reported: np.ndarray  # (T,) or (T, 2) per-round reported decision indices
    report_kind: str
    final_strategy: MixedStrategy
    wall_clock: float
    final_gp: Optional[GpState] = None

    @property
    def horizon(self) -> int:
        return self.x_index.shape[0]

    def n_queries(self) -> int:
        return int(self.queried.sum())


def joint_embedding(grid: DecisionGrid, params: ParamSet) -> np.ndarray:
    """GP inputs for every (decision, parameter) pair: shape (n, m, d_x + d_theta)."""
    n, m = len(grid), len(params)
    x = np.repeat(grid.points[:, None, :], m, axis=1)
    th = np.repeat(params.values[None, :, :], n, axis=0)
    return np.concatenate([x, th], axis=2)


def _grid_posterior(state: GpState, flat: np.ndarray, shape) -> tuple[np.ndarray, np.ndarray]:
    mu, var = posterior_batch(state, flat)
    return mu.reshape(shape), var.reshape(shape)


class _GridPosterior:
    """Posterior over a fixed probe set, extended one row per observation.

    Appending an observation only costs one kernel row plus an O(t n) solve
    step; a dense rebuild happens only when the underlying factor was
    refactorized from scratch (detected by comparing the Cholesky prefix).
    """

    def __init__(self, state: GpState, flat: np.ndarray, shape: tuple[int, int]):
        self.flat = flat
        self.shape = shape
        self.prior = state.kernel.diag(flat)
        self._rebuild(state)

    def _alloc_v(self, t: int, cap: int):
        n = self.flat.shape[0]
        buf = np.empty((max(cap, 8), n))
        return buf

    def _rebuild(self, state: GpState) -> None:
        self.state = state
        n = self.flat.shape[0]
        t = state.t
        self._vbuf = self._alloc_v(t, 2 * t)
        if t == 0:
            self._mu = np.zeros(n)
            self._ssq = np.zeros(n)
        else:
            from scipy.linalg import solve_triangular

            K_star = state.kernel.cross(state.inputs, self.flat)
            self._vbuf[:t] = solve_triangular(state.chol, K_star, lower=True)
            self._mu = self._vbuf[:t].T @ state._c
            self._ssq = np.einsum("ij,ij->j", self._vbuf[:t], self._vbuf[:t])
        self._refresh_views()

    def advance(self, new_state: GpState) -> None:
        t_old = self.state.t
        if new_state.t != t_old + 1 or not np.array_equal(
            new_state.chol[:t_old, :t_old], self.state.chol
        ):
            self._rebuild(new_state)
            return
        if self._vbuf.shape[0] < t_old + 1:
            grown = self._alloc_v(t_old + 1, 2 * (t_old + 1))
            grown[:t_old] = self._vbuf[:t_old]
            self._vbuf = grown
        row_k = new_state.kernel.cross(new_state.inputs[-1:], self.flat)[0]
        ell = new_state.chol[t_old, :t_old]
        piv = new_state.chol[t_old, t_old]
        v = (row_k - ell @ self._vbuf[:t_old]) / piv
        self._vbuf[t_old] = v
        self._mu = self._mu + new_state._c[-1] * v
        self._ssq = self._ssq + v * v
        self.state = new_state
        self._refresh_views()

    def _refresh_views(self) -> None:
        var = self.prior - self._ssq
        if np.any(var < -1e-6):
            raise NumericError(f"posterior variance underflow: {float(var.min())}")
        self.mu = self._mu.reshape(self.shape)
        self.var = np.clip(var, 0.0, self.prior).reshape(self.shape)


# ---------------------------------------------------------------------------
# Selection rules (standalone forms used in tests and by the driving policy)
# ---------------------------------------------------------------------------


def best_response(
    state: GpState,
    weights: np.ndarray,
    grid: DecisionGrid,
    params: ParamSet,
    beta_next: float,
    embedding: Optional[np.ndarray] = None,
    prior_mean: float = 0.0,
) -> int:
    """argmax over decisions of the weight-averaged optimistic bound."""
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    n, m = emb.shape[0], emb.shape[1]
    mu, var = _grid_posterior(state, emb.reshape(n * m, -1), (n, m))
    oucb, _ = truncated_bounds(mu + prior_mean, var, beta_next)
    return int(np.argmax(oucb @ np.asarray(weights)))


def best_response_tradeoff(
    state: GpState,
    weights: np.ndarray,
    grid: DecisionGrid,
    params: ParamSet,
    q: PriorQ,
    chi: float,
    beta_next: float,
    embedding: Optional[np.ndarray] = None,
    prior_mean: float = 0.0,
) -> int:
    """argmax of (1-chi) E_q[oucb] + chi * sum_i w_i oucb; chi=1 reduces to
    ``best_response`` exactly."""
    if not (0.0 <= chi <= 1.0):
        raise DomainError("chi must lie in [0, 1]")
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    n, m = emb.shape[0], emb.shape[1]
    mu, var = _grid_posterior(state, emb.reshape(n * m, -1), (n, m))
    oucb, _ = truncated_bounds(mu + prior_mean, var, beta_next)
    scores = (1.0 - chi) * (oucb @ q.weights) + chi * (oucb @ np.asarray(weights))
    return int(np.argmax(scores))


def select_theta(
    state: GpState,
    x_index: int,
    grid: DecisionGrid,
    params: ParamSet,
    embedding: Optional[np.ndarray] = None,
) -> int:
    """Parameter with the highest posterior uncertainty at the chosen decision."""
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    _, var = posterior_batch(state, emb[x_index])
    return int(np.argmax(var))


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

RoundCallback = Callable[[dict], None]


def _new_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def _alloc(T: int, m: int):
    return {
        "weights": np.full((T, m), np.nan),
        "x_index": np.zeros(T, dtype=np.int64),
        "theta_index": np.zeros(T, dtype=np.int64),
        "y": np.full(T, np.nan),
        "beta": np.full(T, np.nan),
        "sigma": np.full(T, np.nan),
        "queried": np.zeros(T, dtype=bool),
        "info_gain": np.zeros(T),
    }


def run_gp_mro(
    oracle: ObjectiveOracle,
    grid: DecisionGrid,
    params: ParamSet,
    config: AlgorithmConfig,
    *,
    embedding: Optional[np.ndarray] = None,
    initial_gp: Optional[GpState] = None,
    on_round: Optional[RoundCallback] = None,
) -> tuple[MixedStrategy, RunTrace]:
    """Adversary-vs-learner loop with bandit queries; returns the uniform
    distribution over the T selected decisions.

    ``embedding`` overrides the GP input for each (decision, parameter) pair,
    which the driving case study uses to run the GP on trajectory features;
    ``initial_gp`` lets several runs share one posterior.  When the variance
    gate is set, rounds whose selected pair is already certain skip the query
    but still advance the adversary and still count toward the output support.
    """
    t0 = time.perf_counter()
    n, m = oracle.n_decisions, oracle.n_params
    if len(grid) != n or len(params) != m:
        raise DomainError("oracle table shape does not match grid and parameter set")
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    flat = emb.reshape(n * m, emb.shape[2])
    state = initial_gp if initial_gp is not None else empty_state(config.kernel, config.lam)
    rng = _new_rng(config.seed)
    T = config.horizon
    mwu = MwuState.init(m, config.eta(m))
    use_tradeoff = config.chi < 1.0
    rec = _alloc(T, m)
    post = _GridPosterior(state, flat, (n, m))
    gamma = info_gain_observed(state)
    for t in range(1, T + 1):
        beta_t = beta(config.beta_schedule, t, gamma, config.lam)
        sig = np.sqrt(post.var)
        oucb, olcb = truncated_bounds(post.mu + config.prior_mean, post.var, beta_t)
        w = mwu.weights
        if use_tradeoff:
            scores = (1.0 - config.chi) * (oucb @ config.prior_q.weights) + config.chi * (oucb @ w)
        else:
            scores = oucb @ w
        ix = int(np.argmax(scores))
        ith = int(np.argmax(sig[ix]))
        sigma_sel = float(sig[ix, ith])
        queried = config.variance_gate is None or sigma_sel > config.variance_gate
        if queried:
            y = oracle.eval_noisy(ix, ith, rng)
            state = update(state, emb[ix, ith], y - config.prior_mean)
            post.advance(state)
            gamma = info_gain_observed(state)
            rec["y"][t - 1] = y
        i = t - 1
        rec["weights"][i] = w
        rec["x_index"][i] = ix
        rec["theta_index"][i] = ith
        rec["beta"][i] = beta_t
        rec["sigma"][i] = sigma_sel
        rec["queried"][i] = queried
        rec["info_gain"][i] = gamma
        mwu = mwu_update(mwu, oucb[ix, :])
        if on_round is not None:
            on_round({"t": t, "oucb": oucb, "olcb": olcb, "x": ix, "theta": ith})
    strategy = MixedStrategy.from_sequence(rec["x_index"])
    trace = RunTrace(
        algorithm="gp-mro",
        seed=config.seed,
        reported=rec["x_index"].copy(),
        report_kind="uniform_prefix",
        final_strategy=strategy,
        wall_clock=time.perf_counter() - t0,
        final_gp=state,
        **rec,
    )
    return strategy, trace


def run_gp_ucb(
    oracle: ObjectiveOracle,
    grid: DecisionGrid,
    params: ParamSet,
    config: AlgorithmConfig,
    *,
    embedding: Optional[np.ndarray] = None,
    on_round: Optional[RoundCallback] = None,
) -> tuple[MixedStrategy, RunTrace]:
    """Non-robust baseline: query the joint optimistic maximum every round and
    report a point strategy at the last selected decision."""
    t0 = time.perf_counter()
    n, m = oracle.n_decisions, oracle.n_params
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    flat = emb.reshape(n * m, emb.shape[2])
    state = empty_state(config.kernel, config.lam)
    rng = _new_rng(config.seed)
    T = config.horizon
    rec = _alloc(T, m)
    post = _GridPosterior(state, flat, (n, m))
    gamma = info_gain_observed(state)
    for t in range(1, T + 1):
        beta_t = beta(config.beta_schedule, t, gamma, config.lam)
        sig = np.sqrt(post.var)
        oucb, olcb = truncated_bounds(post.mu + config.prior_mean, post.var, beta_t)
        j = int(np.argmax(oucb))  # row-major: ties resolve to lowest (x, theta)
        ix, ith = divmod(j, m)
        y = oracle.eval_noisy(ix, ith, rng)
        state = update(state, emb[ix, ith], y - config.prior_mean)
        i = t - 1
        rec["x_index"][i] = ix
        rec["theta_index"][i] = ith
        rec["y"][i] = y
        rec["beta"][i] = beta_t
        rec["sigma"][i] = float(sig[ix, ith])
        rec["queried"][i] = True
        post.advance(state)
        gamma = info_gain_observed(state)
        rec["info_gain"][i] = gamma
        if on_round is not None:
            on_round({"t": t, "oucb": oucb, "olcb": olcb, "x": ix, "theta": ith})
    strategy = MixedStrategy.dirac(int(rec["x_index"][-1]))
    trace = RunTrace(
        algorithm="gp-ucb",
        seed=config.seed,
        reported=rec["x_index"].copy(),
        report_kind="dirac_last",
        final_strategy=strategy,
        wall_clock=time.perf_counter() - t0,
        final_gp=state,
        **rec,
    )
    return strategy, trace


def _stable_selection(oucb: np.ndarray, olcb: np.ndarray) -> tuple[int, int, int]:
    """Max-min selection: optimistic over decisions, pessimistic over parameters."""
    x = int(np.argmax(oucb.min(axis=1)))
    th = int(np.argmin(olcb[x, :]))
    report = int(np.argmax(olcb.min(axis=1)))
    return x, th, report


def run_stableopt(
    oracle: ObjectiveOracle,
    grid: DecisionGrid,
    params: ParamSet,
    config: AlgorithmConfig,
    *,
    embedding: Optional[np.ndarray] = None,
    on_round: Optional[RoundCallback] = None,
) -> tuple[MixedStrategy, RunTrace]:
    """Deterministic max-min baseline; reports the pessimistic max-min point."""
    t0 = time.perf_counter()
    n, m = oracle.n_decisions, oracle.n_params
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    flat = emb.reshape(n * m, emb.shape[2])
    state = empty_state(config.kernel, config.lam)
    rng = _new_rng(config.seed)
    T = config.horizon
    rec = _alloc(T, m)
    reported = np.zeros(T, dtype=np.int64)
    post = _GridPosterior(state, flat, (n, m))
    gamma = info_gain_observed(state)
    for t in range(1, T + 1):
        beta_t = beta(config.beta_schedule, t, gamma, config.lam)
        sig = np.sqrt(post.var)
        oucb, olcb = truncated_bounds(post.mu + config.prior_mean, post.var, beta_t)
        ix, ith, rep = _stable_selection(oucb, olcb)
        y = oracle.eval_noisy(ix, ith, rng)
        state = update(state, emb[ix, ith], y - config.prior_mean)
        i = t - 1
        rec["x_index"][i] = ix
        rec["theta_index"][i] = ith
        rec["y"][i] = y
        rec["beta"][i] = beta_t
        rec["sigma"][i] = float(sig[ix, ith])
        rec["queried"][i] = True
        reported[i] = rep
        post.advance(state)
        gamma = info_gain_observed(state)
        rec["info_gain"][i] = gamma
        if on_round is not None:
            on_round({"t": t, "oucb": oucb, "olcb": olcb, "x": ix, "theta": ith})
    strategy = MixedStrategy.dirac(int(reported[-1]))
    trace = RunTrace(
        algorithm="stableopt",
        seed=config.seed,
        reported=reported,
        report_kind="dirac_report",
        final_strategy=strategy,
        wall_clock=time.perf_counter() - t0,
        final_gp=state,
        **rec,
    )
    return strategy, trace


def run_randmaxmin(
    oracle: ObjectiveOracle,
    grid: DecisionGrid,
    params: ParamSet,
    config: AlgorithmConfig,
    *,
    embedding: Optional[np.ndarray] = None,
) -> tuple[MixedStrategy, RunTrace]:
    """Coin-flip interleaving of the max-min and joint-UCB selection rules on a
    single shared posterior; returns the 50/50 mixture over both reports."""
    t0 = time.perf_counter()
    n, m = oracle.n_decisions, oracle.n_params
    emb = embedding if embedding is not None else joint_embedding(grid, params)
    flat = emb.reshape(n * m, emb.shape[2])
    state = empty_state(config.kernel, config.lam)
    rng = _new_rng(config.seed)
    coin = _new_rng(config.seed, stream=1)
    T = config.horizon
    rec = _alloc(T, m)
    reported = np.zeros((T, 2), dtype=np.int64)
    post = _GridPosterior(state, flat, (n, m))
    gamma = info_gain_observed(state)
    for t in range(1, T + 1):
        beta_t = beta(config.beta_schedule, t, gamma, config.lam)
        sig = np.sqrt(post.var)
        oucb, olcb = truncated_bounds(post.mu + config.prior_mean, post.var, beta_t)
        sx, sth, srep = _stable_selection(oucb, olcb)
        j = int(np.argmax(oucb))
        ux, uth = divmod(j, m)
        use_ucb = bool(coin.integers(0, 2))
        ix, ith = (ux, uth) if use_ucb else (sx, sth)
        y = oracle.eval_noisy(ix, ith, rng)
        state = update(state, emb[ix, ith], y - config.prior_mean)
        i = t - 1
        rec["x_index"][i] = ix
        rec["theta_index"][i] = ith
        rec["y"][i] = y
        rec["beta"][i] = beta_t
        rec["sigma"][i] = float(sig[ix, ith])
        rec["queried"][i] = True
        reported[i, 0] = srep
        reported[i, 1] = ux
        post.advance(state)
        gamma = info_gain_observed(state)
        rec["info_gain"][i] = gamma
    strategy = MixedStrategy(reported[-1], np.array([0.5, 0.5]))
    trace = RunTrace(
        algorithm="randmaxmin",
        seed=config.seed,
        reported=reported,
        report_kind="pair_mix",
        final_strategy=strategy,
        wall_clock=time.perf_counter() - t0,
        final_gp=state,
        **rec,
    )
    return strategy, trace


def run_clss(
    table: np.ndarray,
    horizon: int,
    eta: Optional[float] = None,
    seed: int = 0,
) -> tuple[MixedStrategy, RunTrace]:
    """Full-information self-play on the exact payoff table: the adversary runs
    multiplicative weights on the true losses and the learner best-responds
    exactly.  Upper-bounds what any bandit-feedback method can achieve."""
    t0 = time.perf_counter()
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.size == 0:
        raise DomainError("payoff table must be a nonempty 2-d array")
    if np.any(t < -_LOSS_TOL) or np.any(t > 1.0 + _LOSS_TOL):
        raise DomainError("payoff table entries must lie in [0, 1]")
    n, m = t.shape
    if horizon < 1:
        raise DomainError("horizon must be a positive integer")
    mwu = MwuState.init(m, eta if eta is not None else default_eta(m, horizon))
    rec = _alloc(horizon, m)
    for i in range(horizon):
        w = mwu.weights
        ix = int(np.argmax(t @ w))
        rec["weights"][i] = w
        rec["x_index"][i] = ix
        mwu = mwu_update(mwu, t[ix, :])
    strategy = MixedStrategy.from_sequence(rec["x_index"])
    trace = RunTrace(
        algorithm="clss",
        seed=seed,
        reported=rec["x_index"].copy(),
        report_kind="uniform_prefix",
        final_strategy=strategy,
        wall_clock=time.perf_counter() - t0,
        final_gp=None,
        **rec,
    )
    return strategy, trace


# ---------------------------------------------------------------------------
# Trace export
# ---------------------------------------------------------------------------


def write_trace_csv(path, trace: RunTrace) -> None:
    """Schema: t,w_1..w_m,x_index,theta_index,y,beta,sigma,queried."""
    import csv

    m = trace.weights.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t"]
            + [f"w_{i + 1}" for i in range(m)]
            + ["x_index", "theta_index", "y", "beta", "sigma", "queried"]
        )
        for i in range(trace.horizon):
            writer.writerow(
                [i + 1]
                + [repr(float(v)) for v in trace.weights[i]]
                + [
                    int(trace.x_index[i]),
                    int(trace.theta_index[i]),
                    repr(float(trace.y[i])),
                    repr(float(trace.beta[i])),
                    repr(float(trace.sigma[i])),
                    int(trace.queried[i]),
                ]
            )
