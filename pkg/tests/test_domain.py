import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy.optimize import linprog

from gpmro.domain import (
    DecisionGrid,
    DomainError,
    MixedStrategy,
    ObjectiveOracle,
    ParamSet,
    PriorQ,
    maximin_value,
    performance,
    read_strategy_csv,
    read_table_csv,
    tradeoff_value,
    write_strategy_csv,
    write_table_csv,
)


def table_oracle(table, noise=0.0):
    return ObjectiveOracle(np.asarray(table, dtype=float), noise)


# ---------------------------------------------------------------------------
# Mixed strategies
# ---------------------------------------------------------------------------


def test_strategy_merges_duplicates():
    s = MixedStrategy([3, 1, 3], [0.25, 0.5, 0.25])
    assert s.indices.tolist() == [1, 3]
    assert np.allclose(s.probs, [0.5, 0.5])


def test_strategy_rejects_bad_mass():
    with pytest.raises(DomainError):
        MixedStrategy([0, 1], [0.6, 0.6])
    with pytest.raises(DomainError):
        MixedStrategy([0, 1], [1.5, -0.5])
    with pytest.raises(DomainError):
        MixedStrategy([], [])


def test_from_sequence_masses_are_multiples():
    s = MixedStrategy.from_sequence([0, 2, 2, 5])
    assert s.indices.tolist() == [0, 2, 5]
    assert np.allclose(s.probs, [0.25, 0.5, 0.25])


@settings(max_examples=50, deadline=None)
@given(hs.lists(hs.integers(min_value=0, max_value=20), min_size=1, max_size=40))
def test_from_sequence_normalized(seq):
    s = MixedStrategy.from_sequence(seq)
    assert abs(s.probs.sum() - 1.0) <= 1e-12
    assert np.all(s.probs >= 0)
    assert np.all(np.diff(s.indices) > 0)


def test_prior_q_constructors():
    q = PriorQ.uniform(4)
    assert np.allclose(q.weights, 0.25)
    d = PriorQ.dirac(2, 5)
    assert d.weights[2] == 1.0
    with pytest.raises(DomainError):
        PriorQ([0.5, 0.6])


# ---------------------------------------------------------------------------
# performance
# ---------------------------------------------------------------------------


def test_performance_dirac_is_row_min():
    oracle = table_oracle([[0.7, 0.2], [0.4, 0.9]])
    assert performance(MixedStrategy.dirac(0), oracle) == pytest.approx(0.2)


def test_performance_uniform_symmetric():
    oracle = table_oracle([[1.0, 0.0], [0.0, 1.0]])
    s = MixedStrategy([0, 1], [0.5, 0.5])
    assert performance(s, oracle) == pytest.approx(0.5)


def test_performance_matches_bruteforce():
    rng = np.random.default_rng(42)
    table = rng.random((10, 4))
    oracle = table_oracle(table)
    probs = rng.random(10)
    probs /= probs.sum()
    s = MixedStrategy(np.arange(10), probs)
    # brute force: expected value per parameter, then the minimum
    expected = min(sum(probs[i] * table[i, j] for i in range(10)) for j in range(4))
    assert performance(s, oracle) == pytest.approx(expected, abs=1e-12)


def test_performance_invalid_index():
    oracle = table_oracle([[0.5, 0.5]])
    with pytest.raises(DomainError):
        performance(MixedStrategy.dirac(3), oracle)


def test_performance_monotone_in_table():
    rng = np.random.default_rng(7)
    table = rng.random((8, 3))
    bumped = np.clip(table + rng.random((8, 3)) * 0.2, 0, 1)
    s = MixedStrategy.from_sequence(rng.integers(0, 8, 20))
    assert performance(s, table_oracle(bumped)) >= performance(s, table_oracle(table))


# ---------------------------------------------------------------------------
# trade-off objective
# ---------------------------------------------------------------------------


def test_tradeoff_chi_one_equals_performance():
    rng = np.random.default_rng(3)
    table = rng.random((6, 4))
    oracle = table_oracle(table)
    s = MixedStrategy.from_sequence(rng.integers(0, 6, 15))
    q = PriorQ.uniform(4)
    assert tradeoff_value(s, oracle, q, 1.0) == performance(s, oracle)


def test_tradeoff_chi_zero_is_average():
    oracle = table_oracle([[0.7, 0.2], [0.4, 0.9]])
    q = PriorQ.uniform(2)
    assert tradeoff_value(MixedStrategy.dirac(0), oracle, q, 0.0) == pytest.approx(0.45)


def test_tradeoff_hand_expanded():
    table = np.array([[0.7, 0.2], [0.4, 0.9]])
    oracle = table_oracle(table)
    q = PriorQ.dirac(0, 2)
    s = MixedStrategy([0, 1], [0.25, 0.75])
    row = 0.25 * table[0] + 0.75 * table[1]
    expected = 0.2 * (row @ q.weights) + 0.8 * row.min()
    assert tradeoff_value(s, oracle, q, 0.8) == pytest.approx(expected, abs=1e-15)


def test_tradeoff_chi_out_of_range():
    oracle = table_oracle([[0.5, 0.5]])
    q = PriorQ.uniform(2)
    with pytest.raises(DomainError):
        tradeoff_value(MixedStrategy.dirac(0), oracle, q, 1.2)


# ---------------------------------------------------------------------------
# maximin oracle
# ---------------------------------------------------------------------------


def lp_maximin(table):
    """Independent oracle: the maximin value as a linear program."""
    n, m = table.shape
    # maximize t subject to table^T p >= t, sum p = 1, p >= 0
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-table.T, np.ones((m, 1))])
    b_ub = np.zeros(m)
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)], method="highs",
    )
    assert res.success
    return -res.fun


def test_maximin_matching_pennies():
    res = maximin_value(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert res.value == pytest.approx(0.5, abs=1e-3)
    assert res.strategy.indices.tolist() == [0, 1]
    assert np.allclose(res.strategy.probs, [0.5, 0.5], atol=1e-3)


def test_maximin_constant_table():
    res = maximin_value(np.full((4, 3), 0.37))
    assert res.value == pytest.approx(0.37, abs=1e-12)


def test_maximin_against_lp():
    rng = np.random.default_rng(11)
    for _ in range(4):
        table = rng.random((10, 4))
        res = maximin_value(table)
        assert res.value == pytest.approx(lp_maximin(table), abs=1e-3)


def test_maximin_against_simplex_grid():
    # tiny instance where a literal simplex grid is feasible
    rng = np.random.default_rng(5)
    table = rng.random((3, 3))
    step = 0.02
    best = -1.0
    ticks = int(round(1 / step))
    for i in range(ticks + 1):
        for j in range(ticks + 1 - i):
            p = np.array([i, j, ticks - i - j]) * step
            best = max(best, float((p @ table).min()))
    res = maximin_value(table)
    assert res.value == pytest.approx(best, abs=2e-3)


def test_maximin_upper_bounds_any_strategy():
    rng = np.random.default_rng(19)
    table = rng.random((10, 4))
    res = maximin_value(table)
    oracle = table_oracle(table)
    for _ in range(25):
        probs = rng.random(10)
        probs /= probs.sum()
        s = MixedStrategy(np.arange(10), probs)
        assert performance(s, oracle) <= res.value + 1e-3


def test_maximin_rejects_bad_tables():
    with pytest.raises(DomainError):
        maximin_value(np.zeros((0, 3)))
    with pytest.raises(DomainError):
        maximin_value(np.array([[2.0, 0.0]]))


# ---------------------------------------------------------------------------
# domain containers and CSV round trips
# ---------------------------------------------------------------------------


def test_grid_and_params_validation():
    with pytest.raises(DomainError):
        DecisionGrid(np.zeros((0, 2)))
    with pytest.raises(DomainError):
        ParamSet(np.array([[1.0], [1.0]]))
    g = DecisionGrid(np.array([[0.0], [1.0]]))
    assert len(g) == 2 and g.dim == 1


def test_oracle_noise_and_exactness():
    oracle = table_oracle([[0.25, 0.75]], noise=0.5)
    rng = np.random.default_rng(0)
    ys = [oracle.eval_noisy(0, 1, rng) for _ in range(2000)]
    assert oracle.eval_exact(0, 1) == 0.75
    assert np.mean(ys) == pytest.approx(0.75, abs=0.05)
    assert np.std(ys) == pytest.approx(0.5, abs=0.05)


def test_table_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    table = rng.random((5, 3))
    path = tmp_path / "table.csv"
    write_table_csv(path, table)
    assert np.array_equal(read_table_csv(path), table)
    header = path.read_text().splitlines()[0]
    assert header == "theta_1,theta_2,theta_3"


def test_strategy_csv_roundtrip(tmp_path):
    s = MixedStrategy([4, 7], [0.3, 0.7])
    path = tmp_path / "strategy.csv"
    write_strategy_csv(path, s)
    s2 = read_strategy_csv(path)
    assert np.array_equal(s.indices, s2.indices)
    assert np.array_equal(s.probs, s2.probs)
