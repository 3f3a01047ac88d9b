"""Phylogenetic fitness: bootstrap supports over neighbor-joining trees.

Given a gene matrix and a subset word, the evaluator concatenates the
selected genes, infers a reference tree, resamples alignment columns B
times and scores each reference edge by how often its bipartition recurs.
The word's support score b is the lowest such edge support. Evaluation is
pure: the bootstrap stream is derived from (evaluator seed, word), so one
word always sees the same resamples.
"""

from __future__ import annotations

import hashlib
import math
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from swarmselect.core import BinaryPosition, FitnessReport, ones_count, percentage_ones
from swarmselect.fitness import FitnessEvaluator
from swarmselect.phylo.alignment import GeneMatrix, write_fasta
from swarmselect.phylo.nj import PairwiseCounts, neighbor_joining
from swarmselect.phylo.tree import UnrootedTree, canonical_split, parse_newick


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def word_seed(seed: int, word_text: str) -> int:
    """Stable per-word bootstrap seed; frozen landscape across a run."""
    digest = hashlib.sha256(f"{seed}/{word_text}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def bootstrap_support(
    block: np.ndarray,
    taxa: tuple[str, ...],
    B: int,
    seed: int,
    gap_mode: str = "pairwise",
) -> UnrootedTree:
    """Reference NJ tree with per-edge column-resampling supports.

    Replicate r draws its resample from a substream split by replicate
    index, so supports are reproducible and replicates could be computed
    in any order (or concurrently) without changing the result.
    """
    if block.shape[1] < 1:
        raise ValueError("block must have at least one column")
    if B < 1:
        raise ValueError("replicate count must be >= 1")
    counts = PairwiseCounts(block, gap_mode)
    reference = neighbor_joining(counts.distance_matrix(), taxa)
    internal = reference.internal_nodes()
    splits = [canonical_split(n.leaf_names(), taxa) for n in internal]

    width = block.shape[1]
    occurrences = [0] * len(internal)
    for r in range(B):
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, r])))
        idx = gen.integers(0, width, size=width)
        replicate = neighbor_joining(counts.distance_matrix(idx), taxa)
        seen = {canonical_split(side, taxa) for side in replicate.bipartitions()}
        for e, split in enumerate(splits):
            if split in seen:
                occurrences[e] += 1
    for node, occ in zip(internal, occurrences):
        node.support = _round_half_up(100.0 * occ / B)
    return reference


def lowest_support(tree: UnrootedTree) -> float:
    """Minimum internal-edge support; 100 when there is no internal edge."""
    supports = tree.supports()
    if not supports:
        return 100.0
    return float(min(supports))


def subset_p(w: BinaryPosition, p_mode: str) -> float:
    if p_mode == "percent":
        return percentage_ones(w)
    if p_mode == "count":
        return float(ones_count(w))
    raise ValueError(f"unknown p mode {p_mode!r}")


def evaluate_phylo(
    m: GeneMatrix,
    w: BinaryPosition,
    B: int,
    seed: int,
    p_mode: str = "percent",
    gap_mode: str = "pairwise",
) -> FitnessReport:
    """Full word score: concat, bootstrap, lowest support, combined fitness."""
    if ones_count(w) == 0:
        return FitnessReport(b=0.0, p=0.0, fitness=0.0, topology=None)
    block = m.concat_subset(w)
    tree = bootstrap_support(block, m.taxa, B, word_seed(seed, w.text), gap_mode)
    b = lowest_support(tree)
    p = subset_p(w, p_mode)
    return FitnessReport(b=b, p=p, fitness=(b + p) / 2.0, topology=tree.signature())


class PhyloEvaluator(FitnessEvaluator):
    """FitnessEvaluator facade over evaluate_phylo with frozen parameters."""

    def __init__(
        self,
        matrix: GeneMatrix,
        B: int = 100,
        seed: int = 0,
        p_mode: str = "percent",
        gap_mode: str = "pairwise",
    ):
        subset_p(BinaryPosition.ones(1), p_mode)  # validate the mode early
        self.matrix = matrix
        self.B = B
        self.seed = seed
        self.p_mode = p_mode
        self.gap_mode = gap_mode

    def instance_size(self) -> int:
        return self.matrix.n_genes

    def evaluate(self, w: BinaryPosition) -> FitnessReport:
        return evaluate_phylo(self.matrix, w, self.B, self.seed, self.p_mode, self.gap_mode)

    def supported_tree(self, w: BinaryPosition) -> UnrootedTree:
        """Recompute the reference tree with supports for reporting."""
        block = self.matrix.concat_subset(w)
        return bootstrap_support(
            block, self.matrix.taxa, self.B, word_seed(self.seed, w.text), self.gap_mode
        )


class ExternalEvaluatorError(RuntimeError):
    pass


class ExternalTreeEvaluator(FitnessEvaluator):
    """Adapter for an external tree-inference command.

    The configured command receives the concatenated subset alignment as a
    FASTA file (``{fasta}`` placeholder) and must print a Newick tree with
    integer support labels on stdout. Determinism is the external tool's
    responsibility. Disabled unless explicitly configured.
    """

    def __init__(self, matrix: GeneMatrix, command: str, p_mode: str = "percent"):
        if "{fasta}" not in command:
            raise ValueError("external command must contain a {fasta} placeholder")
        self.matrix = matrix
        self.command = command
        self.p_mode = p_mode

    def instance_size(self) -> int:
        return self.matrix.n_genes

    def evaluate(self, w: BinaryPosition) -> FitnessReport:
        if ones_count(w) == 0:
            return FitnessReport(b=0.0, p=0.0, fitness=0.0, topology=None)
        block = self.matrix.concat_subset(w)
        with tempfile.TemporaryDirectory(prefix="swarmselect-ext-") as tmp:
            fasta = Path(tmp) / "subset.fasta"
            write_fasta(fasta, self.matrix.taxa, block)
            argv = [a.replace("{fasta}", str(fasta)) for a in shlex.split(self.command)]
            proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExternalEvaluatorError(
                f"external evaluator failed ({proc.returncode}): {proc.stderr.strip()}"
            )
        tree = parse_newick(proc.stdout.strip())
        b = lowest_support(tree)
        p = subset_p(w, self.p_mode)
        return FitnessReport(b=b, p=p, fitness=(b + p) / 2.0, topology=tree.signature())
