import math

import numpy as np
import pytest

from gpmro.algorithms import (
    AlgorithmConfig,
    MwuState,
    best_response,
    best_response_tradeoff,
    default_eta,
    joint_embedding,
    mwu_update,
    run_clss,
    run_gp_mro,
    run_gp_ucb,
    run_randmaxmin,
    run_stableopt,
    select_theta,
    write_trace_csv,
)
from gpmro.domain import (
    DecisionGrid,
    DomainError,
    MixedStrategy,
    ObjectiveOracle,
    ParamSet,
    PriorQ,
    maximin_value,
    performance,
)
from gpmro.gp import ConstantBeta, empty_state, fit_state, posterior_batch, truncated_bounds
from gpmro.kernels import SquaredExponential


def small_problem(table, noise=0.0):
    table = np.asarray(table, dtype=float)
    n, m = table.shape
    grid = DecisionGrid(np.linspace(0.0, 1.0, n)[:, None])
    params = ParamSet(np.linspace(0.0, 1.0, m)[:, None])
    oracle = ObjectiveOracle(table, noise)
    return grid, params, oracle


def config(T, seed=0, **kw):
    kw.setdefault("kernel", SquaredExponential(0.05))
    kw.setdefault("beta_schedule", ConstantBeta(2.0))
    return AlgorithmConfig(horizon=T, seed=seed, **kw)


# ---------------------------------------------------------------------------
# multiplicative weights
# ---------------------------------------------------------------------------


def test_mwu_initial_uniform():
    s = MwuState.init(4, 0.5)
    assert np.allclose(s.weights, 0.25)


def test_mwu_known_update():
    s = MwuState.init(2, math.log(2.0))
    s = mwu_update(s, [1.0, 0.0])
    assert np.allclose(s.weights, [1.0 / 3.0, 2.0 / 3.0])


def test_mwu_equal_losses_noop():
    s = MwuState.init(5, 0.3)
    s2 = mwu_update(s, np.full(5, 0.7))
    assert np.abs(s2.weights - s.weights).max() < 1e-12


def test_mwu_rejects_out_of_range():
    s = MwuState.init(3, 0.5)
    with pytest.raises(DomainError):
        mwu_update(s, [0.5, 1.2, 0.0])
    with pytest.raises(DomainError):
        mwu_update(s, [-0.1, 0.2, 0.0])


def test_mwu_stable_under_long_horizons():
    # cumulative losses grow linearly; the stabilized softmax must not overflow
    s = MwuState.init(3, 0.8)
    for _ in range(5000):
        s = mwu_update(s, [1.0, 0.9, 0.0])
    assert np.isfinite(s.weights).all()
    assert s.weights[2] > 0.999


def mwu_avg_regret(losses, eta):
    """Empirical average regret of the weights sequence on a loss matrix (T, m)."""
    T, m = losses.shape
    s = MwuState.init(m, eta)
    incurred = 0.0
    for t in range(T):
        incurred += float(s.weights @ losses[t])
        s = mwu_update(s, losses[t])
    return incurred / T - losses.mean(axis=0).min()


def test_mwu_regret_bound_random_sequences():
    rng = np.random.default_rng(0)
    for m, T in [(5, 100), (30, 100), (5, 1000)]:
        losses = rng.random((T, m))
        assert mwu_avg_regret(losses, default_eta(m, T)) <= math.sqrt(math.log(m) / (2 * T))


# ---------------------------------------------------------------------------
# selection rules
# ---------------------------------------------------------------------------


def test_best_response_single_param_is_ucb_rule():
    grid, params, _ = small_problem(np.zeros((12, 1)))
    st = fit_state(SquaredExponential(0.2), 1.0, [[0.3, 0.0]], [1.0])
    emb = joint_embedding(grid, params)
    ix = best_response(st, np.array([1.0]), grid, params, 2.0)
    mu, var = posterior_batch(st, emb.reshape(-1, 2))
    oucb, _ = truncated_bounds(mu, var, 2.0)
    assert ix == int(np.argmax(oucb))


def test_best_response_dirac_weights():
    grid, params, _ = small_problem(np.zeros((10, 4)))
    rng = np.random.default_rng(1)
    st = fit_state(
        SquaredExponential(0.3), 1.0, rng.random((6, 2)), rng.standard_normal(6)
    )
    w = np.zeros(4)
    w[2] = 1.0
    emb = joint_embedding(grid, params)
    mu, var = posterior_batch(st, emb.reshape(-1, 2))
    oucb, _ = truncated_bounds(mu, var, 2.0)
    expected = int(np.argmax(oucb.reshape(10, 4)[:, 2]))
    assert best_response(st, w, grid, params, 2.0) == expected


def test_best_response_matches_double_loop():
    grid, params, _ = small_problem(np.zeros((100, 30)))
    rng = np.random.default_rng(2)
    st = fit_state(
        SquaredExponential(0.4), 1.0, rng.random((25, 2)), rng.standard_normal(25)
    )
    w = rng.random(30)
    w /= w.sum()
    got = best_response(st, w, grid, params, 2.0)
    emb = joint_embedding(grid, params)
    best_val, best_ix = -np.inf, None
    for i in range(100):
        total = 0.0
        for j in range(30):
            mu, var = posterior_batch(st, emb[i, j][None, :])
            ucb = mu[0] + 2.0 * math.sqrt(var[0])
            total += w[j] * min(max(ucb, 0.0), 1.0)
        if total > best_val:
            best_val, best_ix = total, i
    assert got == best_ix


def test_tradeoff_reduces_to_best_response_at_chi_one():
    grid, params, _ = small_problem(np.zeros((20, 5)))
    rng = np.random.default_rng(3)
    q = PriorQ.uniform(5)
    for trial in range(5):
        st = fit_state(
            SquaredExponential(0.3), 1.0, rng.random((8, 2)), rng.standard_normal(8)
        )
        w = rng.random(5)
        w /= w.sum()
        assert best_response_tradeoff(st, w, grid, params, q, 1.0, 2.0) == best_response(
            st, w, grid, params, 2.0
        )


def test_tradeoff_chi_zero_maximizes_prior_average():
    grid, params, _ = small_problem(np.zeros((15, 4)))
    rng = np.random.default_rng(4)
    st = fit_state(
        SquaredExponential(0.3), 1.0, rng.random((10, 2)), rng.standard_normal(10)
    )
    q = PriorQ(np.array([0.1, 0.2, 0.3, 0.4]))
    w = rng.random(4)
    w /= w.sum()
    emb = joint_embedding(grid, params)
    mu, var = posterior_batch(st, emb.reshape(-1, 2))
    oucb, _ = truncated_bounds(mu, var, 2.0)
    expected = int(np.argmax(oucb.reshape(15, 4) @ q.weights))
    assert best_response_tradeoff(st, w, grid, params, q, 0.0, 2.0) == expected


def test_tradeoff_hand_expanded_dirac_prior():
    grid, params, _ = small_problem(np.zeros((6, 3)))
    rng = np.random.default_rng(5)
    st = fit_state(
        SquaredExponential(0.25), 1.0, rng.random((5, 2)), rng.standard_normal(5)
    )
    q = PriorQ.dirac(1, 3)
    w = np.array([0.6, 0.3, 0.1])
    emb = joint_embedding(grid, params)
    mu, var = posterior_batch(st, emb.reshape(-1, 2))
    oucb, _ = truncated_bounds(mu, var, 2.0)
    oucb = oucb.reshape(6, 3)
    scores = 0.2 * oucb[:, 1] + 0.8 * (oucb @ w)
    assert best_response_tradeoff(st, w, grid, params, q, 0.8, 2.0) == int(np.argmax(scores))


def test_argmax_invariant_to_constant_shift():
    rng = np.random.default_rng(6)
    oucb = rng.random((40, 7))
    w = rng.random(7)
    w /= w.sum()
    assert np.argmax(oucb @ w) == np.argmax((oucb + 0.37) @ w)


def test_select_theta_tie_break_and_shrink():
    grid, params, _ = small_problem(np.zeros((5, 3)))
    st = empty_state(SquaredExponential(0.05), 1.0)
    assert select_theta(st, 2, grid, params) == 0  # all equal -> lowest index
    emb = joint_embedding(grid, params)
    for _ in range(5):
        st = fit_state(
            SquaredExponential(0.05), 1.0, np.tile(emb[2, 0], (5, 1)), np.zeros(5)
        )
    assert select_theta(st, 2, grid, params) != 0
    single = ParamSet(np.array([[0.5]]))
    single_grid = DecisionGrid(np.array([[0.0]]))
    assert select_theta(st, 0, single_grid, single) == 0


# ---------------------------------------------------------------------------
# robust solver runs
# ---------------------------------------------------------------------------


def test_gp_mro_output_is_uniform_over_selections():
    grid, params, oracle = small_problem(np.array([[1.0, 0.0], [0.0, 1.0]]))
    strat, trace = run_gp_mro(oracle, grid, params, config(20, lam=1.0))
    assert set(strat.indices) <= set(trace.x_index)
    scaled = strat.probs * 20
    assert np.allclose(scaled, np.round(scaled), atol=1e-9)
    assert abs(strat.probs.sum() - 1.0) <= 1e-12


def test_gp_mro_matching_pennies():
    grid, params, oracle = small_problem(np.array([[1.0, 0.0], [0.0, 1.0]]))
    strat, _ = run_gp_mro(oracle, grid, params, config(500, lam=1.0))
    assert performance(strat, oracle) >= 0.45


def test_gp_mro_chi_one_trace_identical_to_base():
    rng = np.random.default_rng(7)
    grid, params, oracle = small_problem(rng.random((8, 3)), noise=0.2)
    base_cfg = config(30, seed=5, lam=0.5)
    chi_cfg = config(30, seed=5, lam=0.5, chi=1.0, prior_q=PriorQ.uniform(3))
    _, t0 = run_gp_mro(oracle, grid, params, base_cfg)
    _, t1 = run_gp_mro(oracle, grid, params, chi_cfg)
    assert np.array_equal(t0.x_index, t1.x_index)
    assert np.array_equal(t0.theta_index, t1.theta_index)
    assert np.array_equal(t0.y, t1.y, equal_nan=True)
    assert np.array_equal(t0.weights, t1.weights)


def test_gp_mro_deterministic():
    rng = np.random.default_rng(8)
    grid, params, oracle = small_problem(rng.random((6, 4)), noise=0.3)
    cfg = config(25, seed=11, lam=0.5)
    _, t0 = run_gp_mro(oracle, grid, params, cfg)
    _, t1 = run_gp_mro(oracle, grid, params, cfg)
    assert np.array_equal(t0.y, t1.y, equal_nan=True)
    assert np.array_equal(t0.x_index, t1.x_index)
    assert np.array_equal(t0.sigma, t1.sigma)


def test_gp_mro_variance_gate():
    rng = np.random.default_rng(9)
    grid, params, oracle = small_problem(rng.random((5, 3)))
    cfg = config(60, lam=1e-5, variance_gate=0.01)
    strat, trace = run_gp_mro(oracle, grid, params, cfg)
    skipped = ~trace.queried
    assert skipped.any()  # noiseless + tiny lam collapses variance quickly
    assert np.all(trace.sigma[skipped] <= 0.01)
    assert np.isnan(trace.y[skipped]).all()
    # non-queried selections still enter the support
    assert set(trace.x_index[skipped]) <= set(strat.indices)


def test_gp_mro_requires_prior_for_tradeoff():
    with pytest.raises(DomainError):
        config(10, chi=0.5)


def test_gp_ucb_first_round_tie_break_and_dirac():
    grid, params, oracle = small_problem(np.full((4, 3), 0.5))
    strat, trace = run_gp_ucb(oracle, grid, params, config(1, lam=1.0))
    assert trace.x_index[0] == 0 and trace.theta_index[0] == 0
    assert strat.indices.size == 1


def test_gp_ucb_finds_global_max():
    rng = np.random.default_rng(10)
    table = rng.random((12, 4)) * 0.5
    table[7, 2] = 1.0
    grid, params, oracle = small_problem(table)
    strat, _ = run_gp_ucb(oracle, grid, params, config(50, lam=0.01))
    assert strat.indices.tolist() == [7]


def test_stableopt_first_round_and_pennies():
    grid, params, oracle = small_problem(np.array([[1.0, 0.0], [0.0, 1.0]]))
    _, trace = run_stableopt(oracle, grid, params, config(1, lam=1.0))
    assert trace.x_index[0] == 0 and trace.theta_index[0] == 0
    strat, _ = run_stableopt(oracle, grid, params, config(100, lam=1.0))
    assert performance(strat, oracle) == 0.0  # any point strategy has worst case 0
    mro, _ = run_gp_mro(oracle, grid, params, config(100, lam=1.0))
    assert performance(mro, oracle) > performance(strat, oracle)


def test_stableopt_finds_strict_maxmin_row():
    rng = np.random.default_rng(11)
    table = rng.random((10, 4)) * 0.4
    table[6, :] = 0.8  # strictly dominant worst case
    grid, params, oracle = small_problem(table)
    strat, _ = run_stableopt(oracle, grid, params, config(100, lam=0.01))
    assert strat.indices.tolist() == [6]


def test_randmaxmin_mixture_structure():
    rng = np.random.default_rng(12)
    table = rng.random((8, 3))
    grid, params, oracle = small_problem(table)
    strat, trace = run_randmaxmin(oracle, grid, params, config(40, lam=0.5))
    assert trace.report_kind == "pair_mix"
    if strat.indices.size == 2:
        assert np.allclose(strat.probs, 0.5)
    else:
        assert strat.indices.size == 1 and strat.probs[0] == 1.0


def test_randmaxmin_matching_pennies_value_rule():
    grid, params, oracle = small_problem(np.array([[1.0, 0.0], [0.0, 1.0]]))
    strat, _ = run_randmaxmin(oracle, grid, params, config(60, lam=1.0))
    perf = performance(strat, oracle)
    if strat.indices.size == 2:
        assert perf == pytest.approx(0.5)
    else:
        assert perf == 0.0


def test_clss_matching_pennies_regret_bound():
    table = np.array([[1.0, 0.0], [0.0, 1.0]])
    strat, _ = run_clss(table, 1000)
    oracle = ObjectiveOracle(table, 0.0)
    assert performance(strat, oracle) >= 0.5 - math.sqrt(math.log(2.0) / 2000.0)


def test_clss_constant_table():
    strat, _ = run_clss(np.full((5, 4), 0.6), 50)
    assert performance(strat, ObjectiveOracle(np.full((5, 4), 0.6), 0.0)) == pytest.approx(0.6)


def test_clss_rejects_out_of_range_table():
    with pytest.raises(DomainError):
        run_clss(np.array([[1.5, 0.0]]), 10)


def test_clss_upper_bounds_gp_mro():
    rng = np.random.default_rng(13)
    gaps = []
    for seed in range(10):
        table = rng.random((10, 4))
        grid, params, oracle = small_problem(table, noise=0.1)
        cfg = config(500, seed=seed, lam=0.01)
        mro, _ = run_gp_mro(oracle, grid, params, cfg)
        clss, _ = run_clss(table, 500)
        exact = ObjectiveOracle(table, 0.0)
        gaps.append(performance(clss, exact) - performance(mro, exact))
    assert np.median(gaps) >= -0.05


def test_trace_csv_schema(tmp_path):
    grid, params, oracle = small_problem(np.array([[1.0, 0.0], [0.0, 1.0]]))
    _, trace = run_gp_mro(oracle, grid, params, config(5, lam=1.0))
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,w_1,w_2,x_index,theta_index,y,beta,sigma,queried"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[0] == "1" and first[-1] == "1"
