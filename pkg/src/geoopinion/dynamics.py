"""Bounded-confidence opinion dynamics on a resampled spatial influence graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .network import (
    Adjacency,
    ConnectionParams,
    EdgeSampler,
    clustering_coefficients,
    mean_in_degree,
    sample_weights,
)
from .seeding import Stream, stream
from .spatial import PLACEMENTS, ConfigurationError, Domain, sample_population

LEFT_OPINION = -1.0
RIGHT_OPINION = 1.0
# a run may not stop before this many updates have happened
MIN_STOP_STEP = 2

CONVERGED = "converged"
MAX_STEPS_REACHED = "max_steps_reached"


@dataclass(frozen=True)
class BeliefInit:
    centers: tuple[float, ...] = (-1.0, 1.0)
    probs: tuple[float, ...] = (0.5, 0.5)
    sigma: float = 0.5

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        probs = tuple(float(p) for p in self.probs)
        if not centers or len(centers) != len(probs):
            raise ConfigurationError("belief centers and probs must be non-empty and equal length")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigurationError("belief probs must be >= 0 and sum to 1")
        if not self.sigma >= 0:
            raise ConfigurationError("belief sigma must be >= 0")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class MegaConfig:
    p_left: float = 0.0
    p_right: float = 0.0
    epsilon: float = 1.5

    def __post_init__(self):
        for name in ("p_left", "p_right"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be > 0")


@dataclass(frozen=True)
class ModelParams:
    """Everything a single run needs apart from the seed.

    ``lam`` is the absolute reference length; callers that think in
    fractions of the domain diameter resolve it first (see ``config``).
    ``n=None`` places agents by the domain's Poisson rates instead.
    """

    domain: Domain
    n: int | None = 1000
    lam: float = 0.1
    gamma: float = 1.5
    delta: float = 8.0
    alpha: float = 2.0
    b: float = 1.5
    beliefs: BeliefInit = field(default_factory=BeliefInit)
    mega: MegaConfig | None = field(default_factory=MegaConfig)
    mega_switching: bool = False
    abs_inside_window: bool = False
    unit_weights: bool = False
    placement: str = "triangle"
    max_steps: int = 200
    stop_threshold: float = 0.01
    window: int = 5

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ConfigurationError(f"placement must be one of {PLACEMENTS}")
        if self.n is not None and self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be > 0")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if self.window < 1:
            raise ConfigurationError("window must be >= 1")
        if not self.stop_threshold > 0:
            raise ConfigurationError("stop_threshold must be > 0")
        self.connection  # validates lambda/delta/alpha/b

    @property
    def connection(self) -> ConnectionParams:
        return ConnectionParams(lam=self.lam, delta=self.delta, alpha=self.alpha, b=self.b)

    def with_updates(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def init_beliefs(n: int, init: BeliefInit, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    which = rng.choice(len(init.centers), size=n, p=np.asarray(init.probs))
    noise = rng.standard_normal(n)
    beliefs = np.asarray(init.centers)[which] + init.sigma * noise
    return np.clip(beliefs, -1.0, 1.0)


def subset_size(p: float, pool: int) -> int:
    # Python's round() is round-half-to-even
    return int(round(p * pool))


def assign_mega_susceptibility(
    beliefs: np.ndarray, mc: MegaConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Static left/right susceptibility flags, drawn once at initialisation.

    A uniformly random ``round(p * |pool|)`` of the agents within epsilon of
    each influencer are flagged.  An agent picked for both sides keeps only
    the left flag.
    """
    h = np.asarray(beliefs, dtype=float)
    left = np.zeros(len(h), dtype=bool)
    right = np.zeros(len(h), dtype=bool)
    left_pool = np.flatnonzero(np.abs(h - LEFT_OPINION) < mc.epsilon)
    right_pool = np.flatnonzero(np.abs(h - RIGHT_OPINION) < mc.epsilon)
    left[rng.choice(left_pool, subset_size(mc.p_left, len(left_pool)), replace=False)] = True
    right[rng.choice(right_pool, subset_size(mc.p_right, len(right_pool)), replace=False)] = True
    right &= ~left
    return left, right


@dataclass(frozen=True)
class SimState:
    step: int
    beliefs: np.ndarray
    left_flag: np.ndarray
    right_flag: np.ndarray
    adjacency: Adjacency


def switch_sides(
    beliefs: np.ndarray,
    left_flag: np.ndarray,
    right_flag: np.ndarray,
    mc: MegaConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Optional re-subscription rule: an agent that has drifted out of its
    influencer's range moves to the other one with that side's reach
    probability.  Each agent moves at most once per step."""
    u = rng.random(len(beliefs))
    out_left = left_flag & ~(beliefs - LEFT_OPINION < mc.epsilon)
    out_right = right_flag & ~(RIGHT_OPINION - beliefs < mc.epsilon)
    to_right = out_left & (u < mc.p_right)
    to_left = out_right & (u < mc.p_left)
    left = (left_flag & ~to_right) | to_left
    right = (right_flag & ~to_left) | to_right
    return left, right


def hk_update(
    beliefs: np.ndarray,
    adjacency: Adjacency,
    left_flag: np.ndarray | None = None,
    right_flag: np.ndarray | None = None,
    epsilon: float = 0.0,
) -> np.ndarray:
    """One synchronous averaging round.

    Each agent takes the plain mean of its own opinion, its in-neighbours'
    opinions and, while within ``epsilon`` of one, the opinion of each
    influencer it is flagged for.
    """
    h = np.asarray(beliefs, dtype=float)
    total = adjacency.in_matrix() @ h + h
    count = adjacency.in_degrees().astype(float) + 1.0
    if left_flag is not None:
        active = left_flag & (h - LEFT_OPINION < epsilon)
        total = total + LEFT_OPINION * active
        count = count + active
    if right_flag is not None:
        active = right_flag & (RIGHT_OPINION - h < epsilon)
        total = total + RIGHT_OPINION * active
        count = count + active
    return total / count


def hk_step(
    state: SimState,
    sampler: EdgeSampler,
    mega: MegaConfig | None,
    switch_rng: np.random.Generator | None = None,
) -> SimState:
    left, right = state.left_flag, state.right_flag
    if mega is not None and switch_rng is not None:
        left, right = switch_sides(state.beliefs, left, right, mega, switch_rng)
    eps = mega.epsilon if mega is not None else 0.0
    new = hk_update(state.beliefs, state.adjacency, left, right, eps)
    step = state.step + 1
    return SimState(step, new, left, right, sampler.sample(new, step))


def stopping_metric(
    history: Sequence[np.ndarray], window: int = 5, abs_inside_window: bool = False
) -> float:
    """Population mean of each agent's rolling-average belief change.

    The rolling window covers the last ``min(window, t)`` changes.  By default
    the signed changes are averaged and the absolute value taken afterwards,
    so an agent oscillating around a fixed point contributes little.
    """
    if len(history) < 2:
        raise ValueError("stopping metric needs at least two snapshots")
    w = min(window, len(history) - 1)
    recent = np.asarray(history[-(w + 1) :], dtype=float)
    changes = np.diff(recent, axis=0)
    if abs_inside_window:
        per_agent = np.abs(changes).mean(axis=0)
    else:
        per_agent = np.abs(changes.mean(axis=0))
    return float(per_agent.mean())


@dataclass
class Trajectory:
    beliefs: np.ndarray  # (stop_step + 1, n)
    mean_in_degree: np.ndarray
    mean_clustering: np.ndarray
    stopping_metric: np.ndarray  # NaN at step 0
    status: str
    positions: np.ndarray
    weights: np.ndarray
    left_flag: np.ndarray
    right_flag: np.ndarray
    graphs: dict[int, Adjacency] = field(default_factory=dict)

    @property
    def stop_step(self) -> int:
        return len(self.beliefs) - 1

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def n(self) -> int:
        return self.beliefs.shape[1]

    @property
    def initial(self) -> np.ndarray:
        return self.beliefs[0]

    @property
    def final(self) -> np.ndarray:
        return self.beliefs[-1]


@dataclass
class Population:
    positions: np.ndarray
    weights: np.ndarray
    beliefs: np.ndarray
    left_flag: np.ndarray
    right_flag: np.ndarray


def populate(params: ModelParams, seed: int) -> Population:
    """Positions, weights, initial beliefs and influencer flags for ``seed``."""
    positions = sample_population(
        params.domain, stream(seed, Stream.PLACEMENT), params.n, params.placement
    )
    n = len(positions)
    if n == 0:
        raise ConfigurationError("the domain produced no agents")
    if params.unit_weights:
        weights = np.ones(n)
    else:
        weights = sample_weights(n, params.gamma, stream(seed, Stream.WEIGHTS))
    beliefs = init_beliefs(n, params.beliefs, stream(seed, Stream.BELIEFS))
    if params.mega is None:
        left = right = np.zeros(n, dtype=bool)
    else:
        left, right = assign_mega_susceptibility(beliefs, params.mega, stream(seed, Stream.FLAGS))
    return Population(positions, weights, beliefs, left, right)


def run_simulation(
    params: ModelParams,
    seed: int,
    threads: int = 1,
    keep_graphs: Iterable[int] = (),
) -> Trajectory:
    """Run until the stopping metric drops below the threshold or the step cap.

    ``keep_graphs`` lists the steps whose sampled graph should be retained on
    the trajectory (for export).
    """
    pop = populate(params, seed)
    sampler = EdgeSampler(pop.positions, pop.weights, params.connection, seed, threads)
    keep = set(int(s) for s in keep_graphs)

    state = SimState(0, pop.beliefs, pop.left_flag, pop.right_flag, sampler.sample(pop.beliefs, 0))
    history = [state.beliefs]
    degree = [mean_in_degree(state.adjacency)]
    clust = [float(clustering_coefficients(state.adjacency).mean())]
    metric = [math.nan]
    graphs = {0: state.adjacency} if 0 in keep else {}

    status = MAX_STEPS_REACHED
    while state.step < params.max_steps:
        switch_rng = (
            stream(seed, Stream.SWITCHING, state.step)
            if params.mega_switching and params.mega is not None
            else None
        )
        state = hk_step(state, sampler, params.mega, switch_rng)
        history.append(state.beliefs)
        degree.append(mean_in_degree(state.adjacency))
        clust.append(float(clustering_coefficients(state.adjacency).mean()))
        metric.append(stopping_metric(history, params.window, params.abs_inside_window))
        if state.step in keep:
            graphs[state.step] = state.adjacency
        if state.step >= MIN_STOP_STEP and metric[-1] < params.stop_threshold:
            status = CONVERGED
            break

    return Trajectory(
        beliefs=np.array(history),
        mean_in_degree=np.array(degree),
        mean_clustering=np.array(clust),
        stopping_metric=np.array(metric),
        status=status,
        positions=pop.positions,
        weights=pop.weights,
        left_flag=pop.left_flag,
        right_flag=pop.right_flag,
        graphs=graphs,
    )
