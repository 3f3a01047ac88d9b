"""Shared test utilities: independent oracles kept free of library internals.

The random-tree generator and its path-length distances are deliberately
implemented with plain dictionaries so that neighbor-joining results are
checked against an independent construction, not against the library's own
tree types.
"""

from __future__ import annotations

import itertools

import numpy as np

from swarmselect.core import BinaryPosition


def all_words(n: int):
    """Every word of length n, all-zeros first, in integer order."""
    for v in range(1 << n):
        yield BinaryPosition([(v >> (n - 1 - j)) & 1 for j in range(n)])


def brute_force_best(evaluator, n: int) -> tuple[float, str]:
    """Exhaustive maximum of an evaluator over all 2^n words."""
    best, best_word = float("-inf"), ""
    for w in all_words(n):
        f = evaluator.evaluate(w).fitness
        if f > best:
            best, best_word = f, w.text
    return best, best_word


def random_additive_tree(n_taxa: int, rng: np.random.Generator):
    """Random unrooted binary tree as an adjacency dict with branch lengths.

    Returns (taxa, adjacency, splits) where adjacency maps node -> list of
    (neighbor, length) and splits is the set of non-trivial bipartitions,
    each encoded as the lexicographically smaller side (sorted tuple).
    """
    taxa = [f"t{i:02d}" for i in range(n_taxa)]
    adjacency: dict[object, list[tuple[object, float]]] = {t: [] for t in taxa}
    groups: list[tuple[object, frozenset[str]]] = [(t, frozenset([t])) for t in taxa]
    counter = itertools.count()
    sides: list[frozenset[str]] = []

    def connect(a, b):
        length = float(rng.uniform(0.1, 2.0))
        adjacency.setdefault(a, []).append((b, length))
        adjacency.setdefault(b, []).append((a, length))

    while len(groups) > 3:
        i, j = sorted(rng.choice(len(groups), size=2, replace=False))
        (node_i, leaves_i) = groups[i]
        (node_j, leaves_j) = groups[j]
        new = ("internal", next(counter))
        connect(new, node_i)
        connect(new, node_j)
        merged = leaves_i | leaves_j
        sides.append(merged)
        groups[i] = (new, merged)
        groups.pop(j)
    center = ("internal", next(counter))
    for node, _ in groups:
        connect(center, node)

    all_taxa = frozenset(taxa)
    splits = set()
    for side in sides:
        other = all_taxa - side
        if len(side) >= 2 and len(other) >= 2:
            splits.add(min(tuple(sorted(side)), tuple(sorted(other))))
    return taxa, adjacency, splits


def path_distances(taxa: list[str], adjacency: dict) -> np.ndarray:
    """Leaf-to-leaf path-length matrix by breadth-first traversal."""
    n = len(taxa)
    d = np.zeros((n, n))
    for i, start in enumerate(taxa):
        dist = {start: 0.0}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for neighbor, length in adjacency[node]:
                if neighbor not in dist:
                    dist[neighbor] = dist[node] + length
                    frontier.append(neighbor)
        for j, other in enumerate(taxa):
            d[i, j] = dist[other]
    return d
