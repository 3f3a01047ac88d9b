"""Fitness evaluator contract plus synthetic oracles and memoization.

Evaluators must be pure: the same word always yields the same report, so a
stochastic evaluator has to carry its own frozen seed. That property is what
makes whole runs replayable from their ledgers.
"""

from __future__ import annotations

import hashlib
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

import numpy as np

from swarmselect.core import BinaryPosition, FitnessReport, percentage_ones


def derived_generator(seed: int, *tokens: str) -> np.random.Generator:
    """Generator seeded from a base seed and a stable token list.

    sha256 keeps the derivation identical across platforms and sessions.
    """
    digest = hashlib.sha256(("/".join(tokens)).encode("ascii")).digest()
    entropy = [seed] + [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


class FitnessEvaluator(ABC):
    """Scores a binary word. Implementations must be pure and thread-safe."""

    @abstractmethod
    def evaluate(self, w: BinaryPosition) -> FitnessReport: ...

    @abstractmethod
    def instance_size(self) -> int: ...

    def evaluate_many(self, words: Sequence[BinaryPosition]) -> list[FitnessReport]:
        return [self.evaluate(w) for w in words]


class PlantedOracle(FitnessEvaluator):
    """Synthetic landscape with a planted word.

    The support term decays linearly with Hamming distance from the planted
    word, optionally perturbed by seeded per-word noise. With zero noise and
    an all-ones planted word the planted word is the unique maximizer; with
    other planted words every superset ties with it exactly, so tests
    compare against brute-force enumeration instead.
    """

    def __init__(self, planted: BinaryPosition, noise_amplitude: float = 0.0, seed: int = 0):
        if noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")
        self.planted = planted
        self.noise_amplitude = noise_amplitude
        self.seed = seed

    def instance_size(self) -> int:
        return len(self.planted)

    @property
    def lipschitz_bound(self) -> float:
        """Bound on |fitness(w) - fitness(w')| over Hamming-1 pairs."""
        return 100.0 / len(self.planted) + self.noise_amplitude

    def _noise(self, w: BinaryPosition) -> float:
        if self.noise_amplitude == 0.0:
            return 0.0
        g = derived_generator(self.seed, "planted-noise", w.text)
        return g.uniform(-self.noise_amplitude, self.noise_amplitude)

    def evaluate(self, w: BinaryPosition) -> FitnessReport:
        n = len(self.planted)
        if len(w) != n:
            raise ValueError(f"word length {len(w)} != instance size {n}")
        b = 100.0 - (100.0 / n) * w.hamming(self.planted) + self._noise(w)
        b = min(100.0, max(0.0, b))
        p = percentage_ones(w)
        return FitnessReport(b=b, p=p, fitness=(b + p) / 2.0)


class ConstantEvaluator(FitnessEvaluator):
    """Fixed score for every word; handy for engine plumbing tests."""

    def __init__(self, n: int, b: float = 50.0):
        self._n = n
        self._b = b

    def instance_size(self) -> int:
        return self._n

    def evaluate(self, w: BinaryPosition) -> FitnessReport:
        return FitnessReport(b=self._b, p=self._b, fitness=self._b)


class MemoizedEvaluator(FitnessEvaluator):
    """Caches reports by canonical word text; repeat words cost nothing.

    The cache can be persisted as one record per line in insertion order:
    ``<word> <b> <p> <fitness> <topology-id>`` with ``-`` marking an absent
    topology. Writes are serialized internally so concurrent workers may
    share one instance.
    """

    def __init__(self, inner: FitnessEvaluator):
        self.inner = inner
        self._cache: dict[str, FitnessReport] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()
        self.misses = 0
        self.hits = 0

    def instance_size(self) -> int:
        return self.inner.instance_size()

    @property
    def evaluations(self) -> int:
        """Inner-evaluator invocations so far (cache misses)."""
        return self.misses

    @property
    def unique_words(self) -> int:
        return len(self._cache)

    def evaluate(self, w: BinaryPosition) -> FitnessReport:
        key = w.text
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self.hits += 1
                return cached
            report = self.inner.evaluate(w)
            self._cache[key] = report
            self._order.append(key)
            self.misses += 1
            return report

    def save(self, path: str | Path) -> None:
        lines = []
        with self._lock:
            for key in self._order:
                r = self._cache[key]
                topo = r.topology_id or "-"
                lines.append(f"{key} {r.b!r} {r.p!r} {r.fitness!r} {topo}\n")
        Path(path).write_text("".join(lines), encoding="ascii")

    @classmethod
    def load(cls, path: str | Path, inner: FitnessEvaluator) -> "MemoizedEvaluator":
        from swarmselect.phylo.tree import TopologySignature  # avoids an import cycle

        memo = cls(inner)
        for line in Path(path).read_text(encoding="ascii").splitlines():
            if not line.strip():
                continue
            word, b, p, fitness, topo = line.split(" ")
            signature = None if topo == "-" else TopologySignature.from_id(topo)
            report = FitnessReport(
                b=float(b), p=float(p), fitness=float(fitness), topology=signature
            )
            memo._cache[word] = report
            memo._order.append(word)
        return memo
