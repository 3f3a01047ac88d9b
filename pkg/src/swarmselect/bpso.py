"""Binary particle swarm engine.

Two velocity rules are supported: the constriction form (version I) and the
inertia-weight form (version II). Velocities are real vectors; positions are
resampled bitwise through a sigmoid transfer against a per-coordinate random
threshold. All randomness flows through per-particle substreams split from
one master seed, which is what makes sequential and distributed execution
consume identical draws.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from swarmselect.core import (
    BinaryPosition,
    FitnessReport,
    Particle,
    SwarmState,
    VelocityVector,
)

if TYPE_CHECKING:
    from swarmselect.fitness import FitnessEvaluator


class Variant(enum.Enum):
    """Which velocity-update rule the engine runs."""

    VERSION_I = "VersionI"
    VERSION_II = "VersionII"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        for v in cls:
            if text.lower() in (v.value.lower(), v.name.lower()):
                return v
        raise ValueError(f"unknown variant: {text!r}")


@dataclass(frozen=True)
class EngineConfig:
    variant: Variant = Variant.VERSION_II
    L: int = 10
    I_max: int = 100
    c1: float = 1.0
    c2: float = 1.0
    C1: float = 2.05
    C2: float = 2.05
    w_max: float = 0.9
    w_min: float = 0.4
    r_accel_range: tuple[float, float] = (0.1, 0.5)
    r_threshold_range: tuple[float, float] = (0.1, 0.5)
    target_fitness: float = 95.0
    init_ones_fraction_range: tuple[float, float] = (0.85, 1.0)
    velocity_clamp: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.I_max <= 0:
            raise ValueError("I_max must be positive")
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")
        for name in ("r_accel_range", "r_threshold_range", "init_ones_fraction_range"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"{name} must be an ordered interval within [0, 1]")
        if self.velocity_clamp is not None:
            lo, hi = self.velocity_clamp
            if lo > hi:
                raise ValueError("velocity_clamp bounds must be ordered")


class RngStreams:
    """Deterministic random streams: one per particle plus one master.

    The same (seed, particle count) always reproduces bit-identical draws.
    Seeds may be a single integer or a tuple of integers (used to derive
    independent per-swarm, per-repetition streams from one base seed).
    """

    def __init__(self, seed: int | Sequence[int], n_particles: int):
        entropy = [seed] if isinstance(seed, int) else list(seed)
        root = np.random.SeedSequence(entropy)
        children = root.spawn(n_particles + 1)
        self._particle = [np.random.Generator(np.random.PCG64(c)) for c in children[:-1]]
        self.master = np.random.Generator(np.random.PCG64(children[-1]))

    def particle(self, i: int) -> np.random.Generator:
        return self._particle[i]

    @property
    def n_particles(self) -> int:
        return len(self._particle)


def sigmoid(v: float) -> float:
    """Logistic transfer 1 / (1 + e^-v), always in (0, 1)."""
    if not math.isfinite(v):
        raise ValueError("sigmoid input must be finite")
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def inertia_weight(cfg: EngineConfig, iteration: int) -> float:
    """Linearly decaying weight on the previous velocity."""
    if iteration < 0 or iteration > cfg.I_max:
        raise ValueError(f"iteration {iteration} outside [0, {cfg.I_max}]")
    return cfg.w_max - ((cfg.w_max - cfg.w_min) / cfg.I_max) * iteration


def constriction(C1: float, C2: float, k: float) -> float:
    """Clerc damping factor 2k / |2 - C - sqrt(C (C - 4))| with C = C1 + C2."""
    C = C1 + C2
    if C < 4.0:
        raise ValueError(f"C1 + C2 must be >= 4, got {C}")
    if not (0.0 <= k <= 1.0):
        raise ValueError(f"k must lie in [0, 1], got {k}")
    return 2.0 * k / abs(2.0 - C - math.sqrt(C * (C - 4.0)))


def _clamped(values: np.ndarray, cfg: EngineConfig) -> np.ndarray:
    if cfg.velocity_clamp is None:
        return values
    lo, hi = cfg.velocity_clamp
    return np.clip(values, lo, hi)


def velocity_update_v2(
    p: Particle,
    g_best: BinaryPosition,
    w: float,
    rng: np.random.Generator,
    cfg: EngineConfig,
) -> VelocityVector:
    """Inertia-form update: w V + c1 r1 (Pbest - X) + c2 r2 (Gbest - X).

    r1 and r2 are drawn once per call and shared across coordinates.
    """
    lo, hi = cfg.r_accel_range
    r1 = rng.uniform(lo, hi)
    r2 = rng.uniform(lo, hi)
    x = p.position.bits.astype(np.float64)
    pb = p.personal_best_position.bits.astype(np.float64)
    gb = g_best.bits.astype(np.float64)
    v = w * p.velocity.values + cfg.c1 * r1 * (pb - x) + cfg.c2 * r2 * (gb - x)
    return VelocityVector(_clamped(v, cfg))


def velocity_update_v1(
    p: Particle,
    g_best: BinaryPosition,
    rng: np.random.Generator,
    cfg: EngineConfig,
) -> VelocityVector:
    """Constriction-form update: x [V + C1 (Pbest - X) + C2 (Gbest - X)].

    The damping factor is recomputed from a fresh k in [0, 1] on every call.
    """
    k = rng.uniform(0.0, 1.0)
    x_factor = constriction(cfg.C1, cfg.C2, k)
    x = p.position.bits.astype(np.float64)
    pb = p.personal_best_position.bits.astype(np.float64)
    gb = g_best.bits.astype(np.float64)
    v = x_factor * (p.velocity.values + cfg.C1 * (pb - x) + cfg.C2 * (gb - x))
    return VelocityVector(_clamped(v, cfg))


def position_update(
    v: VelocityVector, rng: np.random.Generator, cfg: EngineConfig
) -> BinaryPosition:
    """Resample bits: coordinate j becomes 1 iff r_ij <= sigmoid(V_j)."""
    lo, hi = cfg.r_threshold_range
    r = rng.uniform(lo, hi, size=len(v))
    sig = 1.0 / (1.0 + np.exp(-v.values))
    return BinaryPosition((r <= sig).astype(np.uint8))


def initialize_swarm(instance_size: int, cfg: EngineConfig, rng: RngStreams) -> SwarmState:
    """Seed L particles on high-ones words; evaluation is still pending.

    Each particle picks a ones-fraction uniformly from the configured range
    and sets ceil(fraction * N) uniformly chosen coordinates to 1.
    """
    if instance_size < 1:
        raise ValueError("instance size must be >= 1")
    particles = []
    for i in range(cfg.L):
        g = rng.particle(i)
        lo, hi = cfg.init_ones_fraction_range
        fraction = g.uniform(lo, hi)
        count = min(instance_size, math.ceil(fraction * instance_size))
        bits = np.zeros(instance_size, dtype=np.uint8)
        bits[g.choice(instance_size, size=count, replace=False)] = 1
        position = BinaryPosition(bits)
        velocity = VelocityVector(g.uniform(0.0, 1.0, size=instance_size))
        particles.append(
            Particle(
                id=i,
                position=position,
                velocity=velocity,
                personal_best_position=position,
                personal_best_report=None,
            )
        )
    return SwarmState(
        particles=tuple(particles),
        global_best_position=None,
        global_best_report=None,
        iteration=0,
    )


def apply_initial_reports(state: SwarmState, reports: Sequence[FitnessReport]) -> SwarmState:
    """Attach the first evaluation round to a freshly initialized swarm."""
    if len(reports) != state.size:
        raise ValueError("one report per particle required")
    particles = tuple(
        replace(p, personal_best_report=r) for p, r in zip(state.particles, reports)
    )
    best = max(particles, key=lambda p: p.personal_best_report.fitness)
    # max() keeps the earliest particle on ties, matching incumbent-wins.
    return SwarmState(
        particles=particles,
        global_best_position=best.personal_best_position,
        global_best_report=best.personal_best_report,
        iteration=state.iteration,
    )


def move(
    state: SwarmState, cfg: EngineConfig, rng: RngStreams
) -> tuple[list[VelocityVector], list[BinaryPosition]]:
    """Draw the next velocities and positions for every particle.

    Consumes per-particle randomness in particle-id order; the caller is
    responsible for evaluating the returned positions.
    """
    if not state.evaluated:
        raise ValueError("swarm must be evaluated before stepping")
    g_best = state.global_best_position
    assert g_best is not None
    velocities: list[VelocityVector] = []
    positions: list[BinaryPosition] = []
    w = inertia_weight(cfg, state.iteration) if cfg.variant is Variant.VERSION_II else 0.0
    for p in state.particles:
        g = rng.particle(p.id)
        if cfg.variant is Variant.VERSION_I:
            v = velocity_update_v1(p, g_best, g, cfg)
        else:
            v = velocity_update_v2(p, g_best, w, g, cfg)
        velocities.append(v)
        positions.append(position_update(v, g, cfg))
    return velocities, positions


def absorb(
    state: SwarmState,
    velocities: Sequence[VelocityVector],
    positions: Sequence[BinaryPosition],
    reports: Sequence[FitnessReport],
    cfg: EngineConfig,
) -> SwarmState:
    """Build the successor state from one round of evaluated moves.

    Personal and global bests are replaced only on strict fitness
    improvement; ties keep the incumbent. The result is independent of the
    order in which evaluations completed because reports are merged in
    particle-id order.
    """
    particles = []
    for p, v, x, r in zip(state.particles, velocities, positions, reports):
        incumbent = p.personal_best_report
        if incumbent is None or r.fitness > incumbent.fitness:
            particles.append(
                Particle(p.id, x, v, personal_best_position=x, personal_best_report=r)
            )
        else:
            particles.append(
                Particle(
                    p.id,
                    x,
                    v,
                    personal_best_position=p.personal_best_position,
                    personal_best_report=incumbent,
                )
            )
    g_pos = state.global_best_position
    g_rep = state.global_best_report
    for p in particles:
        if g_rep is None or p.personal_best_report.fitness > g_rep.fitness:
            g_pos = p.personal_best_position
            g_rep = p.personal_best_report
    return SwarmState(
        particles=tuple(particles),
        global_best_position=g_pos,
        global_best_report=g_rep,
        iteration=state.iteration + 1,
    )


def step(
    state: SwarmState,
    evaluator: "FitnessEvaluator",
    cfg: EngineConfig,
    rng: RngStreams,
) -> SwarmState:
    """One full iteration: move every particle, evaluate, refresh bests."""
    velocities, positions = move(state, cfg, rng)
    reports = evaluator.evaluate_many(positions)
    return absorb(state, velocities, positions, reports, cfg)


def should_terminate(state: SwarmState, cfg: EngineConfig) -> bool:
    """Stop once the target fitness is reached or the budget is spent."""
    if state.global_best_report is None:
        raise ValueError("swarm has no evaluated global best yet")
    if state.global_best_report.fitness >= cfg.target_fitness:
        return True
    return state.iteration >= cfg.I_max


@dataclass(frozen=True)
class RunResult:
    final: SwarmState
    best_trace: tuple[float, ...]  # global best fitness after each iteration
    best_words: tuple[str, ...]  # global best word after each iteration
    evaluations: int


def run(
    cfg: EngineConfig,
    evaluator: "FitnessEvaluator",
    seed: int | Sequence[int] | None = None,
) -> RunResult:
    """Sequential driver: initialize, evaluate, iterate until termination."""
    rng = RngStreams(cfg.seed if seed is None else seed, cfg.L)
    state = initialize_swarm(evaluator.instance_size(), cfg, rng)
    reports = evaluator.evaluate_many([p.position for p in state.particles])
    state = apply_initial_reports(state, reports)
    trace = [state.global_best_report.fitness]
    words = [state.global_best_position.text]
    evaluations = state.size
    while not should_terminate(state, cfg):
        state = step(state, evaluator, cfg, rng)
        trace.append(state.global_best_report.fitness)
        words.append(state.global_best_position.text)
        evaluations += state.size
    return RunResult(
        final=state,
        best_trace=tuple(trace),
        best_words=tuple(words),
        evaluations=evaluations,
    )
