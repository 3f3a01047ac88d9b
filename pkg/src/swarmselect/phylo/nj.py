"""Distance computation and neighbor-joining tree construction."""

from __future__ import annotations

import numpy as np

from swarmselect.phylo.alignment import GAP
from swarmselect.phylo.tree import TreeNode, UnrootedTree


def p_distance(block: np.ndarray, i: int, j: int, gap_mode: str = "pairwise") -> float:
    """Mismatch share between two rows over their comparable columns.

    Pairwise deletion compares only columns where neither row has a gap;
    complete deletion restricts to columns with no gap in any row. Returns
    0 when no column is comparable.
    """
    if block.shape[1] == 0:
        raise ValueError("block must have at least one column")
    if gap_mode == "pairwise":
        usable = (block[i] != GAP) & (block[j] != GAP)
    elif gap_mode == "complete":
        usable = np.all(block != GAP, axis=0)
    else:
        raise ValueError(f"unknown gap mode {gap_mode!r}")
    n = int(np.count_nonzero(usable))
    if n == 0:
        return 0.0
    mism = int(np.count_nonzero((block[i] != block[j]) & usable))
    return mism / n


class PairwiseCounts:
    """Per-pair column indicators, reusable across bootstrap resamples.

    For every unordered row pair this holds boolean vectors marking the
    comparable columns and the mismatching comparable columns, so that a
    resampled distance matrix costs two vectorized sums per pair.
    """

    def __init__(self, block: np.ndarray, gap_mode: str = "pairwise"):
        t = block.shape[0]
        self.n_rows = t
        self.pairs = [(i, j) for i in range(t) for j in range(i + 1, t)]
        if gap_mode == "complete":
            base = np.all(block != GAP, axis=0)
            usable = [base for _ in self.pairs]
        elif gap_mode == "pairwise":
            nongap = block != GAP
            usable = [nongap[i] & nongap[j] for i, j in self.pairs]
        else:
            raise ValueError(f"unknown gap mode {gap_mode!r}")
        self.comparable = np.array(usable)
        self.mismatch = np.array(
            [(block[i] != block[j]) & u for (i, j), u in zip(self.pairs, usable)]
        )

    def distance_matrix(self, columns: np.ndarray | None = None) -> np.ndarray:
        """Symmetric p-distance matrix, optionally over resampled columns."""
        if columns is None:
            comp = self.comparable.sum(axis=1)
            mism = self.mismatch.sum(axis=1)
        else:
            comp = self.comparable[:, columns].sum(axis=1)
            mism = self.mismatch[:, columns].sum(axis=1)
        d = np.zeros((self.n_rows, self.n_rows))
        for (i, j), c, m in zip(self.pairs, comp, mism):
            dij = (m / c) if c > 0 else 0.0
            d[i, j] = d[j, i] = dij
        return d


def distance_matrix(block: np.ndarray, gap_mode: str = "pairwise") -> np.ndarray:
    return PairwiseCounts(block, gap_mode).distance_matrix()


def neighbor_joining(d: np.ndarray, taxa: list[str] | tuple[str, ...]) -> UnrootedTree:
    """Saitou-Nei agglomeration with deterministic tie handling.

    The Q-criterion minimum is resolved toward the smallest (i, j) index
    pair in the current working order, so results never depend on hash or
    iteration order. Negative branch lengths are clamped to zero with the
    deficit moved onto the sister branch.
    """
    n = len(taxa)
    if n < 3:
        raise ValueError("neighbor joining needs at least 3 taxa")
    if d.shape != (n, n):
        raise ValueError(f"distance matrix shape {d.shape} does not match {n} taxa")

    dist = d.astype(np.float64).copy()
    nodes: list[TreeNode] = [TreeNode(name=t) for t in taxa]

    while len(nodes) > 3:
        m = len(nodes)
        r = dist.sum(axis=1)
        # r_i + r_j commutes exactly, keeping q bit-symmetric for tie-breaks
        q = (m - 2) * dist - (r[:, None] + r[None, :])
        np.fill_diagonal(q, np.inf)
        qmin = q.min()
        ties = np.argwhere(q <= qmin)
        i, j = min((int(a), int(b)) for a, b in ties if a < b)

        li = 0.5 * dist[i, j] + (r[i] - r[j]) / (2.0 * (m - 2))
        if li < 0.0:
            li = 0.0
        elif li > dist[i, j]:
            li = dist[i, j]
        lj = dist[i, j] - li
        nodes[i].length = li
        nodes[j].length = lj
        joined = TreeNode(children=[nodes[i], nodes[j]])

        new_row = 0.5 * (dist[i] + dist[j] - dist[i, j])
        new_row = np.maximum(new_row, 0.0)
        dist[i, :] = new_row
        dist[:, i] = new_row
        dist[i, i] = 0.0
        nodes[i] = joined

        keep = [k for k in range(m) if k != j]
        dist = dist[np.ix_(keep, keep)]
        nodes.pop(j)

    a, b, c = nodes
    dab, dac, dbc = dist[0, 1], dist[0, 2], dist[1, 2]
    a.length = max(0.0, 0.5 * (dab + dac - dbc))
    b.length = max(0.0, 0.5 * (dab + dbc - dac))
    c.length = max(0.0, 0.5 * (dac + dbc - dab))
    root = TreeNode(children=[a, b, c])
    return UnrootedTree(root, taxa)
