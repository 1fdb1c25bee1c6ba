"""Gaussian-process posterior over the joint space, confidence bounds, and
information-gain diagnostics.

The posterior is maintained through a Cholesky factor of (K + lam*I) that is
extended by one row per observation; a full refactorization is the fallback
when the appended pivot degenerates.  States are immutable: ``update`` returns
a new state and never mutates the old one, so posterior queries on a fixed
state are safe to run concurrently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .domain import DomainError, NumericError
from .kernels import JITTER, KernelSpec

# Pivot floor below which the incremental Cholesky append is abandoned in
# favour of refactorizing from scratch.
_PIVOT_FLOOR = 1e-10
_VAR_UNDERFLOW = -1e-6


@dataclass(frozen=True)
class GpState:
    """Posterior state after ``t`` observations.

    ``chol`` is the lower Cholesky factor of (K_t + jitter*I + lam*I) and
    ``alpha`` solves (K_t + jitter*I + lam*I) alpha = y.
    """

    kernel: KernelSpec
    lam: float
    inputs: np.ndarray  # (t, d)
    targets: np.ndarray  # (t,)
    chol: np.ndarray  # (t, t) lower triangular
    alpha: np.ndarray  # (t,)
    _c: np.ndarray  # (t,) solves L c = y

    @property
    def t(self) -> int:
        return self.targets.shape[0]


def empty_state(kernel: KernelSpec, lam: float) -> GpState:
    if lam <= 0:
        raise DomainError("likelihood noise lam must be positive")
    z = np.zeros((0, 0))
    v = np.zeros(0)
    return GpState(kernel, float(lam), z, v, np.zeros((0, 0)), v, v)


def fit_state(kernel: KernelSpec, lam: float, inputs, targets) -> GpState:
    """Batch construction from scratch; also the refactorization fallback."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DomainError("inputs and targets differ in length")
    if X.shape[0] == 0:
        return empty_state(kernel, lam)
    from .kernels import gram

    K = gram(kernel, X)
    K[np.diag_indices_from(K)] += JITTER + lam
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Cholesky factorization failed at t={X.shape[0]}") from exc
    c = solve_triangular(L, y, lower=True)
    alpha = solve_triangular(L.T, c, lower=False)
    return GpState(kernel, float(lam), X, y, L, alpha, c)


def update(state: GpState, z, y: float) -> GpState:
    """Append one observation; the extended factor matches a batch refit."""
    z = np.asarray(z, dtype=float).ravel()
    if state.t == 0:
        return fit_state(state.kernel, state.lam, z[None, :], [y])
    if z.size != state.inputs.shape[1]:
        raise DomainError(
            f"observation dimension {z.size} != state dimension {state.inputs.shape[1]}"
        )
    t = state.t
    k_vec = state.kernel.cross(state.inputs, z[None, :])[:, 0]
    kzz = float(state.kernel.diag(z[None, :])[0])
    ell = solve_triangular(state.chol, k_vec, lower=True)
    piv2 = kzz + JITTER + state.lam - float(ell @ ell)
    if piv2 < _PIVOT_FLOOR:
        return fit_state(
            state.kernel,
            state.lam,
            np.vstack([state.inputs, z[None, :]]),
            np.append(state.targets, y),
        )
    piv = math.sqrt(piv2)
    L = np.zeros((t + 1, t + 1))
    L[:t, :t] = state.chol
    L[t, :t] = ell
    L[t, t] = piv
    c = np.append(state._c, (y - float(ell @ state._c)) / piv)
    alpha = solve_triangular(L.T, c, lower=False)
    return GpState(
        state.kernel,
        state.lam,
        np.vstack([state.inputs, z[None, :]]),
        np.append(state.targets, y),
        L,
        alpha,
        c,
    )


def _clamp_var(var: np.ndarray, prior: np.ndarray) -> np.ndarray:
    if np.any(var < _VAR_UNDERFLOW):
        worst = float(var.min())
        raise NumericError(f"posterior variance underflow: {worst}")
    return np.clip(var, 0.0, prior)


def posterior_batch(state: GpState, Z) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at each row of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    prior = state.kernel.diag(Z)
    if state.t == 0:
        return np.zeros(Z.shape[0]), prior.copy()
    K_star = state.kernel.cross(state.inputs, Z)  # (t, n)
    mu = K_star.T @ state.alpha
    V = solve_triangular(state.chol, K_star, lower=True)
    var = prior - np.einsum("ij,ij->j", V, V)
    return mu, _clamp_var(var, prior)


def posterior(state: GpState, z) -> tuple[float, float]:
    """Posterior mean and variance at a single joint point."""
    mu, var = posterior_batch(state, np.asarray(z, dtype=float)[None, :])
    return float(mu[0]), float(var[0])


# ---------------------------------------------------------------------------
# Confidence parameter schedules and truncated bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoreticalBeta:
    """Schedule B + noise_sigma * lam^(-1/2) * sqrt(2 (gamma_prev + ln(1/delta)))."""

    B: float
    noise_sigma: float
    delta: float = 0.05

    def __post_init__(self):
        if self.B <= 0:
            raise DomainError("RKHS norm bound B must be positive")
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be nonnegative")
        if not (0.0 < self.delta < 1.0):
            raise DomainError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class ConstantBeta:
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise DomainError("constant beta must be positive")


BetaSchedule = Union[TheoreticalBeta, ConstantBeta]


def beta(schedule: BetaSchedule, t: int, gamma_prev: float, lam: float) -> float:
    """Confidence multiplier for round t given the realized information gain."""
    if t < 1:
        raise DomainError("round index t must be >= 1")
    if isinstance(schedule, ConstantBeta):
        return schedule.beta
    if gamma_prev < 0:
        raise DomainError("gamma_prev must be nonnegative")
    return schedule.B + schedule.noise_sigma / math.sqrt(lam) * math.sqrt(
        2.0 * (gamma_prev + math.log(1.0 / schedule.delta))
    )


def truncated_bounds(
    mu: np.ndarray, var: np.ndarray, beta_next: float
) -> tuple[np.ndarray, np.ndarray]:
    """Optimistic/pessimistic envelopes clipped into [0, 1].

    Clipping both sides (rather than one-sided min/max truncation) keeps the
    ordering 1 >= oucb >= olcb >= 0 even when noise pushes mu +- beta*sigma
    entirely below 0 or above 1; for objectives in [0, 1] the clipped values
    remain valid upper/lower bounds.
    """
    half = beta_next * np.sqrt(var)
    oucb = np.clip(mu + half, 0.0, 1.0)
    olcb = np.clip(mu - half, 0.0, 1.0)
    return oucb, olcb


def conf_bounds(state: GpState, z, beta_next: float) -> tuple[float, float, float, float]:
    """(ucb, lcb, oucb, olcb) at a single point."""
    if beta_next <= 0:
        raise DomainError("beta must be positive")
    mu, var = posterior(state, z)
    half = beta_next * math.sqrt(var)
    ucb, lcb = mu + half, mu - half
    return ucb, lcb, min(max(ucb, 0.0), 1.0), min(max(lcb, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Information gain
# ---------------------------------------------------------------------------


def info_gain_observed(state: GpState) -> float:
    """(1/2) log det(I + lam^-1 K_t) for the realized observation sequence."""
    if state.t == 0:
        return 0.0
    logdiag = np.log(np.diag(state.chol))
    return float(logdiag.sum() - 0.5 * state.t * math.log(state.lam))


def info_gain_greedy(kernel: KernelSpec, lam: float, candidates, t: int) -> float:
    """Greedy max-variance proxy for the maximum information gain at horizon t."""
    Z = np.atleast_2d(np.asarray(candidates, dtype=float))
    if t > Z.shape[0]:
        raise DomainError("horizon exceeds number of candidates")
    if t == 0:
        return 0.0
    chosen: list[int] = []
    prior = kernel.diag(Z)
    var = prior.copy()
    L = np.zeros((t, t))
    V = np.zeros((t, Z.shape[0]))  # rows: solved cross-covariance to candidates
    for step in range(t):
        j = int(np.argmax(var))
        chosen.append(j)
        k_vec = kernel.cross(Z[chosen[:step], :], Z[j : j + 1, :])[:, 0] if step else np.zeros(0)
        ell = solve_triangular(L[:step, :step], k_vec, lower=True) if step else np.zeros(0)
        piv2 = prior[j] + JITTER + lam - float(ell @ ell)
        piv = math.sqrt(max(piv2, _PIVOT_FLOOR))
        L[step, :step] = ell
        L[step, step] = piv
        row = kernel.cross(Z[j : j + 1, :], Z)[0, :]
        V[step, :] = (row - ell @ V[:step, :]) / piv
        var = np.maximum(prior - np.einsum("ij,ij->j", V[: step + 1, :], V[: step + 1, :]), 0.0)
    logdiag = np.log(np.diag(L[:t, :t]))
    return float(logdiag.sum() - 0.5 * t * math.log(lam))


def log_marginal_likelihood(state: GpState) -> float:
    """Gaussian log marginal likelihood of the targets under (K_t + lam*I)."""
    if state.t == 0:
        raise DomainError("log marginal likelihood requires at least one observation")
    quad = float(state.targets @ state.alpha)
    logdet_half = float(np.log(np.diag(state.chol)).sum())
    return -0.5 * quad - logdet_half - 0.5 * state.t * math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Portable checkpoints: observations as CSV, factor rebuilt on load
# ---------------------------------------------------------------------------


def save_observations_csv(path, state: GpState) -> None:
    d = state.inputs.shape[1] if state.t else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z_{i}" for i in range(d)] + ["y"])
        for row, y in zip(state.inputs, state.targets):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def load_observations_csv(path, kernel: KernelSpec, lam: float) -> GpState:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        return empty_state(kernel, lam)
    data = np.asarray(rows)
    return fit_state(kernel, lam, data[:, :-1], data[:, -1])
