"""Trajectory-planning case study: an autonomous vehicle (AV) overtaking a
human-driven vehicle (HV) with uncertain steering intentions.

Decisions are constant (steering, acceleration) pairs held for an 8 s horizon;
the uncertain parameter is the HV steering angle.  A scoring model over
trajectory features plays the role of the unknown reward.  Policies map
scenarios (relative positions and speeds) to mixed strategies precomputed with
the robust solver, and are evaluated closed-loop against a Boltzmann HV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .algorithms import AlgorithmConfig, RunTrace, run_gp_mro
from .domain import DecisionGrid, DomainError, MixedStrategy, ObjectiveOracle, ParamSet
from .gp import ConstantBeta, GpState, empty_state
from .kernels import KernelSpec, Matern, Sum


# ---------------------------------------------------------------------------
# Vehicle model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VehicleState:
    pos_x: float
    pos_y: float
    heading: float
    speed: float

    def __post_init__(self):
        if self.speed < 0:
            raise DomainError("speed must be nonnegative")


@dataclass(frozen=True)
class AvAction:
    steering: float  # rad, held constant over the plan horizon
    accel: float  # m/s^2

    STEER_MAX = math.pi / 60
    ACCEL_RANGE = (-10.0, 1.0)

    def __post_init__(self):
        if abs(self.steering) > self.STEER_MAX + 1e-12:
            raise DomainError("AV steering outside [-pi/60, pi/60]")
        if not (self.ACCEL_RANGE[0] - 1e-12 <= self.accel <= self.ACCEL_RANGE[1] + 1e-12):
            raise DomainError("AV acceleration outside [-10, 1]")


@dataclass(frozen=True)
class HvAction:
    steering: float  # rad; HV speed is constant

    STEER_MAX = math.pi / 30

    def __post_init__(self):
        if abs(self.steering) > self.STEER_MAX + 1e-12:
            raise DomainError("HV steering outside [-pi/30, pi/30]")


@dataclass(frozen=True)
class DrivingGeometry:
    """Vehicle and road constants; all config-exposed."""

    wheelbase: float = 2.7
    dt: float = 0.04
    plan_horizon: float = 8.0
    road_halfwidth: float = 3.5
    lane_center: float = 1.75
    av_steer_points: int = 11
    av_accel_points: int = 11
    hv_steer_points: int = 11

    @property
    def steps(self) -> int:
        return int(round(self.plan_horizon / self.dt))

    def av_actions(self) -> np.ndarray:
        """(steer, accel) pairs, steering-major; shape (n_steer*n_accel, 2)."""
        steer = np.linspace(-AvAction.STEER_MAX, AvAction.STEER_MAX, self.av_steer_points)
        accel = np.linspace(*AvAction.ACCEL_RANGE, self.av_accel_points)
        S, A = np.meshgrid(steer, accel, indexing="ij")
        return np.column_stack([S.ravel(), A.ravel()])

    def hv_actions(self) -> np.ndarray:
        return np.linspace(-HvAction.STEER_MAX, HvAction.STEER_MAX, self.hv_steer_points)

    def decision_grid(self) -> DecisionGrid:
        return DecisionGrid(self.av_actions())

    def param_set(self) -> ParamSet:
        return ParamSet(self.hv_actions()[:, None])


def bicycle_step(
    state: VehicleState, steering: float, accel: float, dt: float, wheelbase: float = 2.7
) -> VehicleState:
    """One kinematic-bicycle step (midpoint rule, second order in dt).

    Speed integrates exactly for constant acceleration and clamps at zero;
    the position update uses the half-step heading and average speed, which
    keeps constant-steer arcs on circles instead of phase-drifting polygons.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    v_next = max(state.speed + accel * dt, 0.0)
    v_mid = 0.5 * (state.speed + v_next)
    omega = v_mid * math.tan(steering) / wheelbase
    psi_mid = state.heading + 0.5 * omega * dt
    return VehicleState(
        state.pos_x + v_mid * math.cos(psi_mid) * dt,
        state.pos_y + v_mid * math.sin(psi_mid) * dt,
        state.heading + omega * dt,
        v_next,
    )


def _rollout(
    x0, y0, psi0, v0, steering, accel, steps: int, dt: float, wheelbase: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized rollout over k parallel vehicles; returns (steps+1, k) arrays."""
    k = np.broadcast(x0, steering).size
    xs = np.empty((steps + 1, k))
    ys = np.empty((steps + 1, k))
    psis = np.empty((steps + 1, k))
    vs = np.empty((steps + 1, k))
    xs[0], ys[0], psis[0], vs[0] = x0, y0, psi0, v0
    tan_over_l = np.tan(np.broadcast_to(steering, (k,)).astype(float)) / wheelbase
    acc = np.broadcast_to(accel, (k,)).astype(float)
    for i in range(steps):
        v_next = np.maximum(vs[i] + acc * dt, 0.0)
        v_mid = 0.5 * (vs[i] + v_next)
        omega = v_mid * tan_over_l
        psi_mid = psis[i] + 0.5 * omega * dt
        xs[i + 1] = xs[i] + v_mid * np.cos(psi_mid) * dt
        ys[i + 1] = ys[i] + v_mid * np.sin(psi_mid) * dt
        psis[i + 1] = psis[i] + omega * dt
        vs[i + 1] = v_next
    return xs, ys, psis, vs


# ---------------------------------------------------------------------------
# Scenarios, trajectories, features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Initial relative configuration of the two cars.

    gap is the HV longitudinal lead over the AV (m); lateral positions are
    absolute road coordinates (road centered at y = 0); both headings start
    aligned with the road.
    """

    gap: float
    av_lat: float
    hv_lat: float
    av_speed: float
    hv_speed: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.gap, self.av_lat, self.hv_lat, self.av_speed, self.hv_speed])

    @classmethod
    def from_vector(cls, v) -> "Scenario":
        v = np.asarray(v, dtype=float).ravel()
        if v.size != 5:
            raise DomainError("scenario vectors live in R^5")
        return cls(*map(float, v))


CANONICAL_SCENARIO = Scenario(gap=25.0, av_lat=-1.75, hv_lat=-1.75, av_speed=20.0, hv_speed=10.0)


def simulate_pair(
    scenario: Scenario, av: AvAction, hv: HvAction, geom: DrivingGeometry = DrivingGeometry()
) -> tuple[np.ndarray, np.ndarray]:
    """Plan-horizon rollouts of both cars; each trajectory is (steps+1, 4)
    rows of (x, y, heading, speed)."""
    xa, ya, pa, va = _rollout(
        0.0, scenario.av_lat, 0.0, scenario.av_speed, av.steering, av.accel,
        geom.steps, geom.dt, geom.wheelbase,
    )
    xh, yh, ph, vh = _rollout(
        scenario.gap, scenario.hv_lat, 0.0, scenario.hv_speed, hv.steering, 0.0,
        geom.steps, geom.dt, geom.wheelbase,
    )
    av_traj = np.column_stack([xa[:, 0], ya[:, 0], pa[:, 0], va[:, 0]])
    hv_traj = np.column_stack([xh[:, 0], yh[:, 0], ph[:, 0], vh[:, 0]])
    return av_traj, hv_traj


def extract_features(av_traj: np.ndarray, hv_traj: np.ndarray) -> np.ndarray:
    """(z1, z2, z3): AV longitudinal progress, AV max absolute lateral position,
    and minimum AV-HV distance over time-aligned states."""
    z1 = max(av_traj[-1, 0] - av_traj[0, 0], 0.0)
    z2 = float(np.abs(av_traj[:, 1]).max())
    d = np.hypot(av_traj[:, 0] - hv_traj[:, 0], av_traj[:, 1] - hv_traj[:, 1])
    return np.array([z1, z2, float(d.min())])


def _feature_tables(
    scenario: Scenario, geom: DrivingGeometry
) -> tuple[np.ndarray, np.ndarray]:
    """Feature arrays for every (AV action, HV action) pair.

    Returns (av_features, hv_features), each of shape (n_av, n_hv, 3); the HV
    features mirror the AV ones with the roles swapped (its own progress and
    lateral excursion, shared minimum distance).
    """
    acts = geom.av_actions()
    xa, ya, _, _ = _rollout(
        0.0, scenario.av_lat, 0.0, scenario.av_speed, acts[:, 0], acts[:, 1],
        geom.steps, geom.dt, geom.wheelbase,
    )
    hv = geom.hv_actions()
    xh, yh, _, _ = _rollout(
        scenario.gap, scenario.hv_lat, 0.0, scenario.hv_speed, hv, 0.0,
        geom.steps, geom.dt, geom.wheelbase,
    )
    n_av, n_hv = acts.shape[0], hv.shape[0]
    dx = xa[:, :, None] - xh[:, None, :]
    dy = ya[:, :, None] - yh[:, None, :]
    z3 = np.sqrt(dx * dx + dy * dy).min(axis=0)  # (n_av, n_hv)
    z1_av = np.maximum(xa[-1] - xa[0], 0.0)
    z2_av = np.abs(ya).max(axis=0)
    fa = np.empty((n_av, n_hv, 3))
    fa[:, :, 0] = z1_av[:, None]
    fa[:, :, 1] = z2_av[:, None]
    fa[:, :, 2] = z3
    z1_hv = np.maximum(xh[-1] - xh[0], 0.0)
    z2_hv = np.abs(yh).max(axis=0)
    fh = np.empty((n_av, n_hv, 3))
    fh[:, :, 0] = z1_hv[None, :]
    fh[:, :, 1] = z2_hv[None, :]
    fh[:, :, 2] = z3
    return fa, fh


# ---------------------------------------------------------------------------
# Scoring model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreModel:
    """Additive trajectory score: progress reward, road-limit penalty, and a
    braking-proximity penalty, shifted and clamped into [0, 1].

    The progress reward ramps from ``progress_start`` to ``progress_full``
    metres, so creeping forward earns nothing but a committed pass earns the
    full reward; the road penalty saturates once the lateral excursion passes
    the limit by one band; the proximity penalty grows linearly as the minimum
    separation falls below ``brake_distance``.
    """

    progress_gain: float = 0.55
    progress_start: float = 130.0
    progress_full: float = 160.0
    road_penalty: float = 0.1
    road_limit: float = 2.8
    road_band: float = 0.7
    brake_penalty: float = 0.9
    brake_distance: float = 4.0
    offset: float = 0.45
    clamp: bool = True

    def score_array(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2]
        progress = self.progress_gain * np.clip(
            (z1 - self.progress_start) / (self.progress_full - self.progress_start), 0.0, 1.0
        )
        road = -self.road_penalty * np.clip((z2 - self.road_limit) / self.road_band, 0.0, 1.0)
        proximity = -self.brake_penalty * np.clip(
            (self.brake_distance - z3) / self.brake_distance, 0.0, 1.0
        )
        total = progress + road + proximity + self.offset

        return np.clip(total, 0.0, 1.0) if self.clamp else total


# HV preferences: same component shapes on the HV's own features, at a scale
# matching its 10 m/s constant speed.  Used only as a choice utility inside
# the softmax driver model, so it is unclamped and spread wide enough that
# pathological actions (tight loops that exit the road) stay improbable.
HV_SCORE_MODEL = ScoreModel(
    progress_gain=3.0,
    progress_start=40.0,
    progress_full=80.0,
    road_penalty=2.0,
    brake_penalty=3.0,
    offset=0.0,
    clamp=False,
)


def score(features, model: ScoreModel) -> float:
    """Score of a single feature vector (z1, z2, z3)."""
    z = np.asarray(features, dtype=float).ravel()
    if z.size != 3:
        raise DomainError("feature vectors have exactly three components")
    if z[0] < 0 or z[1] < 0 or z[2] < 0:
        raise DomainError("features must be nonnegative")
    return float(model.score_array(z))


def driving_kernel(
    lengthscales: tuple[float, float, float] = (15.0, 5.0, 2.0), nu: float = 2.5
) -> KernelSpec:
    """Additive Matern kernel, one summand per feature coordinate (normalized
    so the composite stays unit-bounded)."""
    k1 = Matern(nu=nu, lengthscale=lengthscales[0], input_slice=(0, 1))
    k2 = Matern(nu=nu, lengthscale=lengthscales[1], input_slice=(1, 2))
    k3 = Matern(nu=nu, lengthscale=lengthscales[2], input_slice=(2, 3))
    return Sum(Sum(k1, k2), k3)


# ---------------------------------------------------------------------------
# Scenario sets and per-scenario tables
# ---------------------------------------------------------------------------

DEFAULT_SCENARIO_BOX = {
    "gap": (-40.0, 80.0),
    "av_lat": (-12.0, 12.0),
    "hv_lat": (-12.0, 12.0),
    "av_speed": (0.0, 30.0),
    "hv_speed": (10.0, 10.0),
}


class ScenarioSet:
    """Ordered scenario collection with nearest-neighbour lookup and cached
    per-scenario feature/score tables."""

    def __init__(self, vectors: np.ndarray, geom: DrivingGeometry = DrivingGeometry()):
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        if v.shape[1] != 5:
            raise DomainError("scenario vectors live in R^5")
        self.vectors = v
        self.geom = geom
        self._tree: Optional[cKDTree] = None
        self._features: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def scenario(self, i: int) -> Scenario:
        return Scenario.from_vector(self.vectors[i])

    def nearest(self, vector) -> int:
        if self._tree is None:
            self._tree = cKDTree(self.vectors)
        return int(self._tree.query(np.asarray(vector, dtype=float))[1])

    def nearest_linear(self, vector) -> int:
        d = np.linalg.norm(self.vectors - np.asarray(vector, dtype=float)[None, :], axis=1)
        return int(np.argmin(d))

    def features(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        if i not in self._features:
            self._features[i] = _feature_tables(self.scenario(i), self.geom)
        return self._features[i]

    def av_score_table(self, i: int, model: ScoreModel) -> np.ndarray:
        return model.score_array(self.features(i)[0])

    def hv_score_table(self, i: int, model: ScoreModel) -> np.ndarray:
        return model.score_array(self.features(i)[1])


def sample_scenarios(
    n: int,
    seed: int,
    box: dict = DEFAULT_SCENARIO_BOX,
    geom: DrivingGeometry = DrivingGeometry(),
    include_canonical: bool = True,
) -> ScenarioSet:
    """n scenarios uniform over the box, sorted lexicographically so the
    precomputation order is reproducible and independent of sampling order."""
    rng = np.random.default_rng(seed)
    lo = np.array([box[k][0] for k in ("gap", "av_lat", "hv_lat", "av_speed", "hv_speed")])
    hi = np.array([box[k][1] for k in ("gap", "av_lat", "hv_lat", "av_speed", "hv_speed")])
    pts = lo + (hi - lo) * rng.random((n, 5))
    if include_canonical:
        pts = np.vstack([CANONICAL_SCENARIO.as_vector(), pts])
    order = np.lexsort(pts.T[::-1])
    return ScenarioSet(pts[order], geom)


# ---------------------------------------------------------------------------
# Policy precomputation
# ---------------------------------------------------------------------------

DRIVING_LAM = 1e-5


def default_driving_config(seed: int = 0, kernel: Optional[KernelSpec] = None) -> AlgorithmConfig:
    return AlgorithmConfig(
        horizon=100,
        kernel=kernel if kernel is not None else driving_kernel(),
        beta_schedule=ConstantBeta(0.5),
        lam=DRIVING_LAM,
        eta_override=0.5,
        seed=seed,
        variance_gate=0.005,
    )


@dataclass
class DrivingPolicy:
    """Scenario-indexed mixed strategies over the AV action grid."""

    scenario_set: ScenarioSet
    strategies: list[MixedStrategy]
    total_queries: int = 0
    rounds: int = 0

    def plan(self, scenario_index: int) -> MixedStrategy:
        return self.strategies[scenario_index]


def precompute_policy(
    scenarios: ScenarioSet,
    model: ScoreModel,
    config: Optional[AlgorithmConfig] = None,
) -> DrivingPolicy:
    """One robust-solver run per scenario on a single shared GP over feature
    space; the variance gate suppresses queries whose outcome is already
    certain, so learning amortizes across scenarios."""
    if config is None:
        config = default_driving_config()
    grid = scenarios.geom.decision_grid()
    params = scenarios.geom.param_set()
    shared: GpState = empty_state(config.kernel, config.lam)
    strategies: list[MixedStrategy] = []
    total_queries = 0
    rounds = 0
    for i in range(len(scenarios)):
        table = scenarios.av_score_table(i, model)
        oracle = ObjectiveOracle(table, noise_sigma=0.0)
        emb = scenarios.features(i)[0]
        seed_i = int(np.random.SeedSequence([config.seed, i]).generate_state(1)[0])
        cfg_i = replace(config, seed=seed_i)
        strategy, trace = run_gp_mro(
            oracle, grid, params, cfg_i, embedding=emb, initial_gp=shared
        )
        shared = trace.final_gp
        strategies.append(strategy)
        total_queries += trace.n_queries()
        rounds += trace.horizon
    return DrivingPolicy(scenarios, strategies, total_queries, rounds)


def maxmin_planner(
    scenarios: ScenarioSet, model: ScoreModel
) -> Callable[[int], MixedStrategy]:
    """Deterministic comparator: the pure max-min action of the true score table."""
    cache: dict[int, MixedStrategy] = {}

    def plan(i: int) -> MixedStrategy:
        if i not in cache:
            table = scenarios.av_score_table(i, model)
            cache[i] = MixedStrategy.dirac(int(np.argmax(table.min(axis=1))))
        return cache[i]

    return plan


# ---------------------------------------------------------------------------
# Closed-loop evaluation
# ---------------------------------------------------------------------------


def hv_boltzmann_probs(
    strategy: MixedStrategy, hv_table: np.ndarray
) -> np.ndarray:
    """Softmax over HV actions of the expected HV score against the AV strategy."""
    utilities = strategy.probs @ hv_table[strategy.indices, :]
    e = np.exp(utilities - utilities.max())
    return e / e.sum()


def hv_boltzmann_sample(
    strategy: MixedStrategy,
    scenario_index: int,
    scenarios: ScenarioSet,
    hv_model: ScoreModel,
    rng: np.random.Generator,
) -> int:
    """Sample the HV steering index from the noisy-rational choice model."""
    probs = hv_boltzmann_probs(strategy, scenarios.hv_score_table(scenario_index, hv_model))
    return int(rng.choice(probs.size, p=probs))


@dataclass(frozen=True)
class EpisodeStats:
    overtake: bool
    av_final_x: float
    hv_final_x: float
    min_separation: float


def closed_loop(
    planner: Callable[[int], MixedStrategy],
    scenarios: ScenarioSet,
    hv_model: ScoreModel,
    seed: int,
    initial: Scenario = CANONICAL_SCENARIO,
    duration: float = 10.0,
    replan_every: float = 2.0,
    use_kdtree: bool = True,
    return_paths: bool = False,
):
    """Receding-horizon episode: every ``replan_every`` seconds the current
    relative state maps to the nearest stored scenario, the AV samples an
    action from the planner's strategy, and the HV samples its steering from
    the Boltzmann model; both actions are held until the next planning event.
    The overtake flag records whether the AV ends ahead of the HV."""
    geom = scenarios.geom
    rng = np.random.default_rng(seed)
    av = VehicleState(0.0, initial.av_lat, 0.0, initial.av_speed)
    hv = VehicleState(initial.gap, initial.hv_lat, 0.0, initial.hv_speed)
    acts = geom.av_actions()
    hv_steers = geom.hv_actions()
    steps_per_plan = int(round(replan_every / geom.dt))
    n_plans = int(round(duration / replan_every))
    min_sep = math.hypot(av.pos_x - hv.pos_x, av.pos_y - hv.pos_y)
    av_path = [(av.pos_x, av.pos_y)]
    hv_path = [(hv.pos_x, hv.pos_y)]
    for _ in range(n_plans):
        state_vec = np.array(
            [hv.pos_x - av.pos_x, av.pos_y, hv.pos_y, av.speed, hv.speed]
        )
        si = scenarios.nearest(state_vec) if use_kdtree else scenarios.nearest_linear(state_vec)
        strategy = planner(si)
        a_idx = int(rng.choice(strategy.indices, p=strategy.probs))
        steer, accel = acts[a_idx]
        h_idx = hv_boltzmann_sample(strategy, si, scenarios, hv_model, rng)
        hv_steer = hv_steers[h_idx]
        for _ in range(steps_per_plan):
            av = bicycle_step(av, steer, accel, geom.dt, geom.wheelbase)
            hv = bicycle_step(hv, hv_steer, 0.0, geom.dt, geom.wheelbase)
            min_sep = min(min_sep, math.hypot(av.pos_x - hv.pos_x, av.pos_y - hv.pos_y))
            if return_paths:
                av_path.append((av.pos_x, av.pos_y))
                hv_path.append((hv.pos_x, hv.pos_y))
    stats = EpisodeStats(
        overtake=av.pos_x > hv.pos_x,
        av_final_x=av.pos_x,
        hv_final_x=hv.pos_x,
        min_separation=min_sep,
    )
    if return_paths:
        return stats, np.asarray(av_path), np.asarray(hv_path)
    return stats


def run_episodes(
    planner: Callable[[int], MixedStrategy],
    scenarios: ScenarioSet,
    hv_model: ScoreModel,
    n_episodes: int,
    base_seed: int = 0,
    initial: Scenario = CANONICAL_SCENARIO,
) -> list[EpisodeStats]:
    seeds = np.random.SeedSequence([base_seed, 777]).generate_state(n_episodes)
    return [
        closed_loop(planner, scenarios, hv_model, int(s), initial=initial) for s in seeds
    ]


def aggregate_stats(episodes: list[EpisodeStats]) -> dict:
    return {
        "episodes": len(episodes),
        "overtakes": int(sum(bool(e.overtake) for e in episodes)),
        "avg_av_final": float(np.mean([e.av_final_x for e in episodes])),
        "avg_hv_final": float(np.mean([e.hv_final_x for e in episodes])),
        "min_separation": float(min(e.min_separation for e in episodes)),
    }


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_scenarios_csv(path, scenarios: ScenarioSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "gap", "av_lat", "hv_lat", "av_speed", "hv_speed"])
        for i, row in enumerate(scenarios.vectors):
            writer.writerow([i] + [repr(float(v)) for v in row])


def read_scenarios_csv(path, geom: DrivingGeometry = DrivingGeometry()) -> ScenarioSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row[1:]] for row in reader]
    return ScenarioSet(np.asarray(rows), geom)


def write_policy_csv(path, policy: DrivingPolicy) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "point_index", "probability"])
        for i, strat in enumerate(policy.strategies):
            for idx, p in zip(strat.indices, strat.probs):
                writer.writerow([i, int(idx), repr(float(p))])


def read_policy_csv(path, scenarios: ScenarioSet) -> DrivingPolicy:
    rows: dict[int, tuple[list[int], list[float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for sid, idx, p in reader:
            entry = rows.setdefault(int(sid), ([], []))
            entry[0].append(int(idx))
            entry[1].append(float(p))
    strategies = []
    for i in range(len(scenarios)):
        if i not in rows:
            raise DomainError(f"policy file misses scenario {i}")
        idx, probs = rows[i]
        strategies.append(MixedStrategy(np.asarray(idx), np.asarray(probs)))
    return DrivingPolicy(scenarios, strategies)


def write_episodes_csv(path, episodes: list[EpisodeStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "overtake", "av_final_x", "hv_final_x", "min_separation"])
        for i, e in enumerate(episodes):
            writer.writerow(
                [i, int(e.overtake), repr(float(e.av_final_x)), repr(float(e.hv_final_x)), repr(float(e.min_separation))]
            )


def write_aggregate_csv(path, stats: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        keys = ["episodes", "overtakes", "avg_av_final", "avg_hv_final", "min_separation"]
        writer.writerow(keys)
        writer.writerow(
            [stats["episodes"], stats["overtakes"]]
            + [repr(float(stats[k])) for k in keys[2:]]
        )
