"""Core domain types: decision grids, parameter sets, payoff oracles, mixed strategies.

Everything downstream (solvers, benchmarks, the driving case study) speaks in
terms of these types.  Decisions always live on a finite grid and are referred
to by index; parameters form a finite ordered set.  A mixed strategy is a
finite-support probability distribution over grid indices.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericError(ArithmeticError):
    """Raised when a linear-algebra step fails beyond recoverable jitter."""


PROB_TOL = 1e-12


@dataclass(frozen=True)
class DecisionGrid:
    """Finite, ordered set of decision points; indices are canonical ids."""

    points: np.ndarray  # shape (n, d_x)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise DomainError("decision grid must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise DomainError("decision grid contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ParamSet:
    """Ordered finite set of parameter points theta_1..theta_m."""

    values: np.ndarray  # shape (m, d_theta)

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[0] < 1:
            raise DomainError("parameter set must contain at least one point")
        if not np.all(np.isfinite(vals)):
            raise DomainError("parameter set contains non-finite values")
        uniq = np.unique(vals, axis=0)
        if uniq.shape[0] != vals.shape[0]:
            raise DomainError("parameter set contains duplicate points")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def _validated_probs(probs: np.ndarray, what: str) -> np.ndarray:
    if np.any(probs < -PROB_TOL):
        raise DomainError(f"{what} has negative mass")
    total = float(probs.sum())
    if abs(total - 1.0) > PROB_TOL * max(1, probs.size):
        raise DomainError(f"{what} mass sums to {total!r}, expected 1")
    return np.clip(probs, 0.0, None)


@dataclass(frozen=True)
class MixedStrategy:
    """Finite-support distribution over decision-grid indices.

    Duplicate indices are merged with summed mass; the support is kept sorted
    by index so equal strategies compare equal.
    """

    indices: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if idx.size == 0:
            raise DomainError("mixed strategy has empty support")
        if idx.size != p.size:
            raise DomainError("support indices and probabilities differ in length")
        if np.any(idx < 0):
            raise DomainError("negative support index")
        # merge duplicates
        order = np.argsort(idx, kind="stable")
        idx, p = idx[order], p[order]
        uniq, inverse = np.unique(idx, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, p)
        merged = _validated_probs(merged, "mixed strategy")
        object.__setattr__(self, "indices", uniq)
        object.__setattr__(self, "probs", merged)

    @classmethod
    def dirac(cls, index: int) -> "MixedStrategy":
        return cls(np.array([index]), np.array([1.0]))

    @classmethod
    def from_sequence(cls, selected: Sequence[int]) -> "MixedStrategy":
        """Uniform distribution over a selection sequence (duplicates merged)."""
        sel = np.asarray(selected, dtype=np.int64)
        if sel.size == 0:
            raise DomainError("cannot build a strategy from an empty sequence")
        return cls(sel, np.full(sel.size, 1.0 / sel.size))

    def as_vector(self, n: int) -> np.ndarray:
        """Dense probability vector over a grid of size n."""
        if self.indices.max() >= n:
            raise DomainError(f"support index {self.indices.max()} out of range for grid of {n}")
        v = np.zeros(n)
        v[self.indices] = self.probs
        return v

    def expected_row(self, table: np.ndarray) -> np.ndarray:
        """E_{x~P}[table[x, :]] for an (n, m) payoff table."""
        if self.indices.max() >= table.shape[0]:
            raise DomainError("strategy support exceeds table rows")
        return self.probs @ table[self.indices, :]


@dataclass(frozen=True)
class PriorQ:
    """Fixed distribution over parameter indices, used by the trade-off objective."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise DomainError("prior over parameters is empty")
        w = _validated_probs(w, "parameter prior")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, m: int) -> "PriorQ":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def dirac(cls, index: int, m: int) -> "PriorQ":
        w = np.zeros(m)
        w[index] = 1.0
        return cls(w)


@dataclass(frozen=True)
class ObjectiveOracle:
    """Point-query access to a reward table over (grid index, parameter index).

    ``eval_exact`` is reserved for metrics and tests; algorithms only ever see
    ``eval_noisy``.  ``norm`` records the affine constants (lo, hi) used to map
    the raw objective into [0, 1], when applicable.
    """

    table: np.ndarray  # shape (n_x, m), exact values in [0, 1]
    noise_sigma: float
    norm: tuple[float, float] | None = None

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise DomainError("oracle table must be a nonempty 2-d array")
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be nonnegative")
        object.__setattr__(self, "table", t)

    @property
    def n_decisions(self) -> int:
        return self.table.shape[0]

    @property
    def n_params(self) -> int:
        return self.table.shape[1]

    def _check(self, ix: int, itheta: int):
        if not (0 <= ix < self.table.shape[0] and 0 <= itheta < self.table.shape[1]):
            raise DomainError(f"index ({ix}, {itheta}) outside table of shape {self.table.shape}")

    def eval_exact(self, ix: int, itheta: int) -> float:
        self._check(ix, itheta)
        return float(self.table[ix, itheta])

    def eval_noisy(self, ix: int, itheta: int, rng: np.random.Generator) -> float:
        f = self.eval_exact(ix, itheta)
        if self.noise_sigma == 0.0:
            return f
        return f + self.noise_sigma * float(rng.standard_normal())


def performance(strategy: MixedStrategy, oracle: ObjectiveOracle) -> float:
    """Worst-case expected reward of a mixed strategy: min over parameters of
    the expected exact payoff.  Deterministic decisions are Dirac strategies."""
    row = strategy.expected_row(oracle.table)
    return float(row.min())


def tradeoff_value(
    strategy: MixedStrategy,
    oracle: ObjectiveOracle,
    q: PriorQ,
    chi: float,
) -> float:
    """Convex combination of average-case (under q) and worst-case expected reward.

    chi = 1 recovers the pure worst-case objective; chi = 0 is the stochastic
    (average-case only) objective.
    """
    if not (0.0 <= chi <= 1.0):
        raise DomainError(f"chi must lie in [0, 1], got {chi}")
    if q.weights.size != oracle.n_params:
        raise DomainError("prior length does not match parameter count")
    row = strategy.expected_row(oracle.table)
    avg = float(row @ q.weights)
    worst = float(row.min())
    return (1.0 - chi) * avg + chi * worst


# ---------------------------------------------------------------------------
# Maximin oracle: multiplicative-weights self-play on a known payoff table
# ---------------------------------------------------------------------------

_EPS_ORACLE_DEFAULT = 1e-3

_jit_selfplay = None


def _selfplay_counts_numpy(table: np.ndarray, eta: float, rounds: int) -> np.ndarray:
    n, m = table.shape
    cum = np.zeros(m)
    counts = np.zeros(n, dtype=np.int64)
    for _ in range(rounds):
        shifted = -eta * (cum - cum.min())
        w = np.exp(shifted)
        w /= w.sum()
        x = int(np.argmax(table @ w))
        counts[x] += 1
        cum += table[x]
    return counts


def _get_selfplay():
    """JIT-compiled self-play loop; the oracle runs ~1e6 sequential rounds."""
    global _jit_selfplay
    if _jit_selfplay is not None:
        return _jit_selfplay
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _jit_selfplay = _selfplay_counts_numpy
        return _jit_selfplay

    @njit(cache=True)
    def _selfplay_counts(table, eta, rounds):  # pragma: no cover - compiled
        n, m = table.shape
        cum = np.zeros(m)
        w = np.empty(m)
        counts = np.zeros(n, dtype=np.int64)
        for _ in range(rounds):
            cmin = cum[0]
            for i in range(1, m):
                if cum[i] < cmin:
                    cmin = cum[i]
            total = 0.0
            for i in range(m):
                w[i] = math.exp(-eta * (cum[i] - cmin))
                total += w[i]
            best = -1.0
            x = 0
            for j in range(n):
                s = 0.0
                for i in range(m):
                    s += table[j, i] * w[i]
                if s > best:
                    best = s
                    x = j
            counts[x] += 1
            for i in range(m):
                cum[i] += table[x, i]
        return counts

    _jit_selfplay = _selfplay_counts
    return _jit_selfplay


@dataclass(frozen=True)
class MaximinResult:
    value: float
    strategy: MixedStrategy
    rounds: int


def maximin_value(table: np.ndarray, eps: float = _EPS_ORACLE_DEFAULT) -> MaximinResult:
    """Best worst-case expected payoff over mixed strategies, to accuracy eps.

    Runs multiplicative-weights self-play with an exact best response on the
    known table for ceil(log(m) / (2 eps^2)) rounds; the averaged play is an
    eps-optimal mixed strategy and its worst-case value is within eps of the
    true maximin value.
    """
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.size == 0:
        raise DomainError("payoff table must be a nonempty 2-d array")
    if np.any(t < -PROB_TOL) or np.any(t > 1 + PROB_TOL):
        raise DomainError("payoff table entries must lie in [0, 1]")
    n, m = t.shape
    if m == 1:
        # single parameter: the best pure decision is optimal
        x = int(np.argmax(t[:, 0]))
        return MaximinResult(float(t[x, 0]), MixedStrategy.dirac(x), 0)
    rounds = int(math.ceil(math.log(m) / (2.0 * eps * eps)))
    eta = math.sqrt(8.0 * math.log(m) / rounds)
    counts = _get_selfplay()(np.ascontiguousarray(t), eta, rounds)
    support = np.flatnonzero(counts)
    strategy = MixedStrategy(support, counts[support] / rounds)
    value = float((strategy.probs @ t[strategy.indices, :]).min())
    return MaximinResult(value, strategy, rounds)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def write_table_csv(path, table: np.ndarray) -> None:
    """Payoff table CSV: header theta_1..theta_m, one row per grid point."""
    t = np.asarray(table, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"theta_{i + 1}" for i in range(t.shape[1])])
        for row in t:
            writer.writerow([repr(float(v)) for v in row])


def read_table_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    table = np.asarray(rows, dtype=float)
    if table.ndim != 2 or table.shape[1] != len(header):
        raise DomainError(f"malformed payoff table in {path}")
    return table


def write_strategy_csv(path, strategy: MixedStrategy) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "probability"])
        for i, p in zip(strategy.indices, strategy.probs):
            writer.writerow([int(i), repr(float(p))])


def read_strategy_csv(path) -> MixedStrategy:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        idx, probs = [], []
        for row in reader:
            idx.append(int(row[0]))
            probs.append(float(row[1]))
    return MixedStrategy(np.asarray(idx), np.asarray(probs))
