"""Synthetic objective generators and run evaluation.

Two benchmark families: reward tables drawn from a GP prior on a joint grid,
and a fixed degree-6 bivariate polynomial maximized under adversarial input
perturbations drawn from the unit ball.  Raw objectives are affinely mapped to
[0, 1] over the evaluation grid and the constants are recorded, so performance
numbers share a scale across algorithms.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.polynomial import polyval2d

from .algorithms import RunTrace, joint_embedding
from .domain import (
    DecisionGrid,
    DomainError,
    MixedStrategy,
    NumericError,
    ObjectiveOracle,
    ParamSet,
    performance,
)
from .gp import fit_state, log_marginal_likelihood
from .kernels import JITTER, KernelSpec, Linear, Matern, Product, SquaredExponential, gram

# Guards the pinned polynomial coefficients against accidental edits.
_POLY_SHA256 = "7129cf616e1378b4c13b6f01077a286498dda022b58a0a2123a03137ce8d2411"

_poly_coef_matrix: Optional[np.ndarray] = None
_poly_box: Optional[tuple[tuple[float, float], tuple[float, float]]] = None


def _load_poly():
    global _poly_coef_matrix, _poly_box
    if _poly_coef_matrix is not None:
        return
    raw = resources.files("gpmro.data").joinpath("poly_coefficients.json").read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != _POLY_SHA256:
        raise NumericError("polynomial coefficient file failed its checksum")
    doc = json.loads(raw)
    deg = max(max(i, j) for i, j, _ in doc["terms"])
    C = np.zeros((deg + 1, deg + 1))
    for i, j, c in doc["terms"]:
        C[i, j] = c
    _poly_coef_matrix = C
    _poly_box = (tuple(doc["box"]["x1"]), tuple(doc["box"]["x2"]))


def g_poly(x) -> np.ndarray | float:
    """Maximization objective: the negated benchmark polynomial at x = (x1, x2).

    Accepts a single 2-vector or an (..., 2) array.
    """
    _load_poly()
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise DomainError("g_poly expects 2-d inputs")
    val = -polyval2d(x[..., 0], x[..., 1], _poly_coef_matrix)
    return float(val) if val.ndim == 0 else val


def poly_box() -> tuple[tuple[float, float], tuple[float, float]]:
    _load_poly()
    return _poly_box


def normalize_to_unit(values: np.ndarray) -> tuple[np.ndarray, tuple[float, float]]:
    """Affine map onto [0, 1] over the given values; returns (mapped, (lo, hi))."""
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        return np.full_like(values, 0.5), (lo, lo + 1.0)
    return (values - lo) / (hi - lo), (lo, hi)


# ---------------------------------------------------------------------------
# GP-sampled reward tables
# ---------------------------------------------------------------------------


def sample_gp_values(kernel: KernelSpec, points, seed: int) -> np.ndarray:
    """One zero-mean multivariate-normal draw with covariance Gram + jitter.

    Points are ordered canonically (lexicographically) before the Cholesky
    draw, so relabeling the input grid permutes the returned values instead of
    producing an unrelated sample.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    order = np.lexsort(pts.T[::-1])
    G = gram(kernel, pts[order])
    G[np.diag_indices_from(G)] += JITTER
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance factorization failed while sampling") from exc
    u = np.random.default_rng(seed).standard_normal(pts.shape[0])
    out = np.empty(pts.shape[0])
    out[order] = L @ u
    return out


def sample_gp_function(
    kernel: KernelSpec, grid: DecisionGrid, params: ParamSet, seed: int
) -> tuple[np.ndarray, tuple[float, float]]:
    """Payoff table sampled from the GP prior on the joint grid, mapped to [0, 1]."""
    emb = joint_embedding(grid, params)
    raw = sample_gp_values(kernel, emb.reshape(len(grid) * len(params), -1), seed)
    table, norm = normalize_to_unit(raw.reshape(len(grid), len(params)))
    return table, norm


def sample_unit_ball(n: int, dim: int, seed: int) -> np.ndarray:
    """n i.i.d. points uniform in the unit ball of the given dimension."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.random(n) ** (1.0 / dim)
    return dirs * radii[:, None]


# ---------------------------------------------------------------------------
# Benchmark bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Benchmark:
    name: str
    grid: DecisionGrid
    params: ParamSet
    oracle: ObjectiveOracle
    kernel: KernelSpec
    meta: dict = field(default_factory=dict)


def synth_random_gp(
    grid_x: int = 100,
    grid_theta: int = 30,
    sample_seed: int = 7,
    lengthscale: float = 0.2,
    noise_sigma: float = 1.0,
) -> Benchmark:
    """1-d decisions and parameters on [-1, 1]; reward drawn from a GP prior
    with a linear times squared-exponential product kernel on the joint input,
    which the algorithms also use as their model."""
    grid = DecisionGrid(np.linspace(-1.0, 1.0, grid_x)[:, None])
    params = ParamSet(np.linspace(-1.0, 1.0, grid_theta)[:, None])
    # both factors read the full joint input; the linear factor is scaled so
    # k(z, z) <= 1 over the [-1, 1]^2 square
    kernel = Product(
        Linear(scale=math.sqrt(2.0)),
        SquaredExponential(lengthscale=lengthscale),
    )
    table, norm = sample_gp_function(kernel, grid, params, sample_seed)
    oracle = ObjectiveOracle(table, noise_sigma, norm)
    return Benchmark(
        name="synth-1d",
        grid=grid,
        params=params,
        oracle=oracle,
        kernel=kernel,
        meta={
            "sample_seed": sample_seed,
            "lengthscale": lengthscale,
            "norm_lo": norm[0],
            "norm_hi": norm[1],
        },
    )


def poly_decision_grid(points_per_axis: int) -> DecisionGrid:
    (x1_lo, x1_hi), (x2_lo, x2_hi) = poly_box()
    a = np.linspace(x1_lo, x1_hi, points_per_axis)
    b = np.linspace(x2_lo, x2_hi, points_per_axis)
    X1, X2 = np.meshgrid(a, b, indexing="ij")
    return DecisionGrid(np.column_stack([X1.ravel(), X2.ravel()]))


def build_perturbed_objective(
    grid: DecisionGrid, theta_set: ParamSet, noise_sigma: float = 1.0
) -> ObjectiveOracle:
    """Oracle for the perturbed polynomial: f(x, theta) = g_poly(x - theta),
    normalized to [0, 1] over the full grid x parameter product."""
    if grid.dim != 2 or theta_set.dim != 2:
        raise DomainError("perturbed polynomial benchmark is 2-dimensional")
    diff = grid.points[:, None, :] - theta_set.values[None, :, :]
    raw = g_poly(diff)
    table, norm = normalize_to_unit(raw)
    return ObjectiveOracle(table, noise_sigma, norm)


def synth_poly(
    points_per_axis: int = 20,
    num_theta: int = 20,
    ball_seed: int = 11,
    noise_sigma: float = 1.0,
    matern_nu: float = 2.5,
    lengthscale: Optional[float] = None,
) -> Benchmark:
    """Polynomial maximization under unit-ball perturbations of the input."""
    grid = poly_decision_grid(points_per_axis)
    params = ParamSet(sample_unit_ball(num_theta, 2, ball_seed))
    oracle = build_perturbed_objective(grid, params, noise_sigma)
    kernel = Matern(nu=matern_nu, lengthscale=lengthscale if lengthscale else 1.0)
    return Benchmark(
        name="synth-poly",
        grid=grid,
        params=params,
        oracle=oracle,
        kernel=kernel,
        meta={
            "ball_seed": ball_seed,
            "norm_lo": oracle.norm[0],
            "norm_hi": oracle.norm[1],
            "matern_nu": matern_nu,
        },
    )


def ml_lengthscale(
    bench: Benchmark,
    lam: float,
    candidates: Sequence[float],
    n_obs: int = 50,
    seed: int = 123,
    nu: float = 2.5,
) -> float:
    """Pick the Matern lengthscale maximizing the log marginal likelihood of a
    seeded batch of noisy observations of the benchmark objective."""
    rng = np.random.default_rng(seed)
    emb = joint_embedding(bench.grid, bench.params)
    n, m = len(bench.grid), len(bench.params)
    ix = rng.integers(0, n, n_obs)
    ith = rng.integers(0, m, n_obs)
    Z = emb[ix, ith]
    y = np.array([bench.oracle.eval_noisy(int(a), int(b), rng) for a, b in zip(ix, ith)])
    best_l, best_ll = None, -math.inf
    for l in candidates:
        state = fit_state(Matern(nu=nu, lengthscale=float(l)), lam, Z, y)
        ll = log_marginal_likelihood(state)
        if ll > best_ll:
            best_l, best_ll = float(l), ll
    return best_l


# ---------------------------------------------------------------------------
# Run evaluation
# ---------------------------------------------------------------------------


def strategy_at(trace: RunTrace, t: int) -> MixedStrategy:
    """Strategy the algorithm would have reported after round t."""
    if not (1 <= t <= trace.horizon):
        raise DomainError(f"checkpoint {t} outside 1..{trace.horizon}")
    i = t - 1
    if trace.report_kind == "uniform_prefix":
        return MixedStrategy.from_sequence(trace.x_index[: i + 1])
    if trace.report_kind == "dirac_last":
        return MixedStrategy.dirac(int(trace.x_index[i]))
    if trace.report_kind == "dirac_report":
        return MixedStrategy.dirac(int(trace.reported[i]))
    if trace.report_kind == "pair_mix":
        return MixedStrategy(trace.reported[i], np.array([0.5, 0.5]))
    raise DomainError(f"unknown report kind {trace.report_kind!r}")


def evaluate_run(
    trace: RunTrace, oracle: ObjectiveOracle, checkpoints: Sequence[int]
) -> np.ndarray:
    """Worst-case expected reward of the reported strategy at each checkpoint."""
    return np.array([performance(strategy_at(trace, t), oracle) for t in checkpoints])
