"""Core value types shared by the optimizers and the runtime.

Positions, velocities, particles and score reports are immutable after
construction; successor states are built rather than mutated, so they are
safe to hand to concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from swarmselect.phylo.tree import TopologySignature


class BinaryPosition:
    """A fixed-length 0/1 word encoding an item subset.

    Bit ``j`` corresponds to the j-th item in the instance's frozen
    (lexicographic) order. The canonical text form is a string of '0'/'1'
    with index 0 first; it is the key used in logs, caches and on the wire.
    """

    __slots__ = ("_bits", "_text")

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("position must be one-dimensional")
        if arr.size == 0:
            raise ValueError("position must have length >= 1")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("position entries must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        self._bits = arr
        self._text = "".join("1" if b else "0" for b in arr)

    @classmethod
    def from_text(cls, text: str) -> "BinaryPosition":
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"not a binary word: {text!r}")
        return cls([1 if c == "1" else 0 for c in text])

    @classmethod
    def zeros(cls, n: int) -> "BinaryPosition":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "BinaryPosition":
        return cls(np.ones(n, dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def text(self) -> str:
        return self._text

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, j: int) -> int:
        return int(self._bits[j])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryPosition):
            return NotImplemented
        return self._text == other._text

    def __hash__(self) -> int:
        return hash(self._text)

    def __repr__(self) -> str:
        return f"BinaryPosition({self._text})"

    def hamming(self, other: "BinaryPosition") -> int:
        if len(other) != len(self):
            raise ValueError("length mismatch")
        return int(np.count_nonzero(self._bits != other._bits))

    def flipped(self, j: int) -> "BinaryPosition":
        bits = self._bits.copy()
        bits[j] ^= 1
        return BinaryPosition(bits)


class VelocityVector:
    """Per-coordinate real velocity of one particle. All values finite."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float] | np.ndarray):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("velocity must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("velocity entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def zeros(cls, n: int) -> "VelocityVector":
        return cls(np.zeros(n, dtype=np.float64))

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VelocityVector):
            return NotImplemented
        return bool(np.array_equal(self._values, other._values))

    def __repr__(self) -> str:
        return f"VelocityVector({self._values.tolist()})"


@dataclass(frozen=True)
class FitnessReport:
    """Score bundle for one evaluated word.

    ``b`` is the lowest support of the inferred tree (percent), ``p`` the
    subset-size term (percent by default, raw count under count mode), and
    ``fitness`` their mean. ``topology`` is absent for synthetic oracles.
    """

    b: float
    p: float
    fitness: float
    topology: "TopologySignature | None" = None

    @property
    def topology_id(self) -> str:
        return self.topology.id if self.topology is not None else ""


@dataclass(frozen=True)
class Particle:
    id: int
    position: BinaryPosition
    velocity: VelocityVector
    personal_best_position: BinaryPosition
    personal_best_report: FitnessReport | None = None


@dataclass(frozen=True)
class SwarmState:
    particles: tuple[Particle, ...]
    global_best_position: BinaryPosition | None
    global_best_report: FitnessReport | None
    iteration: int

    @property
    def size(self) -> int:
        return len(self.particles)

    @property
    def evaluated(self) -> bool:
        return self.global_best_report is not None


def ones_count(w: BinaryPosition) -> int:
    """Number of coordinates equal to 1."""
    return int(np.count_nonzero(w.bits))


def percentage_ones(w: BinaryPosition) -> float:
    """Share of 1-bits as a percentage of the word length."""
    n = len(w)
    if n < 1:
        raise ValueError("word length must be >= 1")
    return 100.0 * ones_count(w) / n


def combine_fitness(b: float, p: float) -> float:
    """Mean of the support score and the subset-size score."""
    if not (0.0 <= b <= 100.0):
        raise ValueError(f"b out of range [0, 100]: {b}")
    if not (0.0 <= p <= 100.0):
        raise ValueError(f"p out of range [0, 100]: {p}")
    return (b + p) / 2.0


def word_from_selection(n: int, selected: Sequence[int]) -> BinaryPosition:
    """Word of length ``n`` with ones exactly at the given indices."""
    bits = np.zeros(n, dtype=np.uint8)
    for j in selected:
        bits[j] = 1
    return BinaryPosition(bits)
