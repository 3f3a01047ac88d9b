"""Three-stage comparison pipeline: systematic, random, then a GA.

Stage 1 sweeps the full word and every single deletion (N+1 evaluations).
Stage 2 samples words with a few genes suppressed at random. Stage 3 runs
a generational genetic algorithm seeded with the incumbent. Stages share
the fitness layer with the swarm engine and short-circuit as soon as the
target fitness is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from swarmselect.core import BinaryPosition, FitnessReport
from swarmselect.fitness import FitnessEvaluator, MemoizedEvaluator


@dataclass(frozen=True)
class GAConfig:
    population: int = 30
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None means 1/N
    tournament_size: int = 3
    elitism: int = 1

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.elitism < 0 or self.elitism > self.population:
            raise ValueError("elitism must lie in [0, population]")


@dataclass(frozen=True)
class PipelineConfig:
    random_removal_range: tuple[int, int] = (2, 5)
    random_budget: int = 200
    ga: GAConfig = field(default_factory=GAConfig)
    target_fitness: float = 95.0
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.random_removal_range
        if not 2 <= lo <= hi:
            raise ValueError("random_removal_range must be ordered with low >= 2")
        if self.random_budget < 0:
            raise ValueError("random_budget must be >= 0")


@dataclass(frozen=True)
class StageOutcome:
    best_word: BinaryPosition
    best_report: FitnessReport
    evaluations: int
    words: tuple[str, ...]
    generation_best: tuple[float, ...] = ()  # GA stage only


@dataclass(frozen=True)
class PipelineResult:
    terminus: int  # 1 systematic, 2 random, 3 optimization
    best_word: BinaryPosition
    best_report: FitnessReport
    total_evaluations: int  # evaluator calls, repeats included
    unique_evaluations: int  # distinct words actually scored
    stage_evaluations: tuple[int, int, int]
    stages: tuple[StageOutcome, ...] = ()


def _better(
    cand_word: BinaryPosition,
    cand_report: FitnessReport,
    best_word: BinaryPosition | None,
    best_report: FitnessReport | None,
) -> bool:
    """Strict fitness improvement only; ties keep the incumbent."""
    if best_report is None:
        return True
    return cand_report.fitness > best_report.fitness


def systematic_stage(ev: FitnessEvaluator, n: int, cfg: PipelineConfig) -> StageOutcome:
    """Score the full word and all N single deletions; pick the best.

    Ties go to fewer deletions first, then to the lexicographically
    smaller word text.
    """
    if n < 1:
        raise ValueError("instance size must be >= 1")
    candidates = [BinaryPosition.ones(n)] + [BinaryPosition.ones(n).flipped(j) for j in range(n)]
    best_word: BinaryPosition | None = None
    best_report: FitnessReport | None = None
    for w in candidates:  # all-ones first: equal-fitness ties keep it
        r = ev.evaluate(w)
        if best_report is None or r.fitness > best_report.fitness:
            best_word, best_report = w, r
        elif r.fitness == best_report.fitness and best_word is not None:
            same_deletions = sum(best_word.bits == 0) == sum(w.bits == 0)
            if same_deletions and w.text < best_word.text:
                best_word, best_report = w, r
    return StageOutcome(
        best_word=best_word,
        best_report=best_report,
        evaluations=len(candidates),
        words=tuple(w.text for w in candidates),
    )


def random_stage(
    ev: FitnessEvaluator,
    n: int,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    incumbent: StageOutcome | None = None,
) -> StageOutcome:
    """Sample words with 2..5 (configurable) genes suppressed at random."""
    lo, hi = cfg.random_removal_range
    hi = min(hi, n - 1)
    if lo > hi:
        raise ValueError(f"removal range [{lo}, {hi}] empty for N={n}")
    best_word = incumbent.best_word if incumbent else None
    best_report = incumbent.best_report if incumbent else None
    words: list[str] = []
    evaluations = 0
    for _ in range(cfg.random_budget):
        if best_report is not None and best_report.fitness >= cfg.target_fitness:
            break
        count = int(rng.integers(lo, hi + 1))
        removed = rng.choice(n, size=count, replace=False)
        bits = np.ones(n, dtype=np.uint8)
        bits[removed] = 0
        w = BinaryPosition(bits)
        r = ev.evaluate(w)
        evaluations += 1
        words.append(w.text)
        if _better(w, r, best_word, best_report):
            best_word, best_report = w, r
    return StageOutcome(
        best_word=best_word,
        best_report=best_report,
        evaluations=evaluations,
        words=tuple(words),
    )


def ga_stage(
    ev: FitnessEvaluator,
    n: int,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    incumbent: StageOutcome | None = None,
) -> StageOutcome:
    """Generational GA: tournament selection, uniform crossover, bit flips.

    The incumbent (when given) joins the initial population, and elitism
    keeps the per-generation best from ever degrading.
    """
    ga = cfg.ga
    mutation = ga.mutation_rate if ga.mutation_rate is not None else 1.0 / n

    population = [
        BinaryPosition(rng.integers(0, 2, size=n).astype(np.uint8))
        for _ in range(ga.population)
    ]
    if incumbent is not None:
        population[0] = incumbent.best_word
    reports = [ev.evaluate(w) for w in population]
    evaluations = len(population)
    words = [w.text for w in population]

    best_word = incumbent.best_word if incumbent else None
    best_report = incumbent.best_report if incumbent else None
    for w, r in zip(population, reports):
        if _better(w, r, best_word, best_report):
            best_word, best_report = w, r
    generation_best = [max(r.fitness for r in reports)]

    def tournament() -> BinaryPosition:
        idx = rng.integers(0, len(population), size=ga.tournament_size)
        winner = max(idx, key=lambda i: reports[i].fitness)
        return population[winner]

    for _ in range(ga.generations):
        if best_report.fitness >= cfg.target_fitness:
            break
        ranked = sorted(range(len(population)), key=lambda i: -reports[i].fitness)
        next_pop: list[BinaryPosition] = [population[i] for i in ranked[: ga.elitism]]
        while len(next_pop) < ga.population:
            a, b = tournament(), tournament()
            if rng.uniform() < ga.crossover_rate:
                mask = rng.integers(0, 2, size=n).astype(bool)
                child_bits = np.where(mask, a.bits, b.bits)
            else:
                child_bits = a.bits.copy()
            flips = rng.uniform(size=n) < mutation
            child_bits = np.where(flips, 1 - child_bits, child_bits).astype(np.uint8)
            next_pop.append(BinaryPosition(child_bits))
        population = next_pop
        reports = [ev.evaluate(w) for w in population]
        evaluations += len(population)
        words.extend(w.text for w in population)
        generation_best.append(max(r.fitness for r in reports))
        for w, r in zip(population, reports):
            if _better(w, r, best_word, best_report):
                best_word, best_report = w, r

    return StageOutcome(
        best_word=best_word,
        best_report=best_report,
        evaluations=evaluations,
        words=tuple(words),
        generation_best=tuple(generation_best),
    )


def run_pipeline(
    ev: FitnessEvaluator, n: int, cfg: PipelineConfig
) -> PipelineResult:
    """Stages 1 to 3 with short-circuiting at the target fitness."""
    memo = ev if isinstance(ev, MemoizedEvaluator) else MemoizedEvaluator(ev)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))

    s1 = systematic_stage(memo, n, cfg)
    stage_evals = [s1.evaluations, 0, 0]
    stages = [s1]
    outcome, terminus = s1, 1
    if outcome.best_report.fitness < cfg.target_fitness:
        s2 = random_stage(memo, n, cfg, rng, incumbent=outcome)
        stage_evals[1] = s2.evaluations
        stages.append(s2)
        outcome, terminus = s2, 2
        if outcome.best_report.fitness < cfg.target_fitness:
            s3 = ga_stage(memo, n, cfg, rng, incumbent=outcome)
            stage_evals[2] = s3.evaluations
            stages.append(s3)
            outcome, terminus = s3, 3

    return PipelineResult(
        terminus=terminus,
        best_word=outcome.best_word,
        best_report=outcome.best_report,
        total_evaluations=memo.hits + memo.misses,
        unique_evaluations=memo.misses,
        stage_evaluations=tuple(stage_evals),
        stages=tuple(stages),
    )
