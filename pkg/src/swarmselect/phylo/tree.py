"""Unrooted trees, canonical topology identities, and Newick text.

A tree is stored rooted at an arbitrary internal node purely for traversal;
all identity questions (bipartitions, signatures) are unrooted. Two trees
share a TopologySignature exactly when their unrooted topologies coincide.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator


@dataclass
class TreeNode:
    name: str | None = None
    children: list["TreeNode"] = field(default_factory=list)
    length: float = 0.0
    support: int | None = None  # support of the edge above this node

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaf_names(self) -> list[str]:
        return [n.name for n in self.walk() if n.is_leaf]


def canonical_split(side: Iterable[str], taxa: Iterable[str]) -> tuple[str, ...] | None:
    """Orientation-free encoding of one bipartition.

    Returns the lexicographically smaller of the two sides as a sorted taxon
    tuple, or None for a trivial split (a side with fewer than two taxa).
    """
    side = frozenset(side)
    other = frozenset(taxa) - side
    if len(side) < 2 or len(other) < 2:
        return None
    return min(tuple(sorted(side)), tuple(sorted(other)))


class TopologySignature:
    """Canonical identity of an unrooted topology.

    Every non-trivial bipartition is encoded as the lexicographically
    smaller of its two sides (each side a sorted taxon tuple); the signature
    is the sorted set of those encodings plus a stable hash. Signatures
    restored from a bare id (cache or wire) compare by id alone.
    """

    __slots__ = ("bipartitions", "id")

    def __init__(self, parts: Iterable[frozenset[str]], taxa: Iterable[str]):
        taxa = tuple(taxa)
        encoded = set()
        for side in parts:
            split = canonical_split(side, taxa)
            if split is not None:
                encoded.add(split)
        self.bipartitions: tuple[tuple[str, ...], ...] = tuple(sorted(encoded))
        self.id = self._digest(self.canonical_text)

    @property
    def canonical_text(self) -> str:
        return ";".join(",".join(side) for side in self.bipartitions)

    @staticmethod
    def _digest(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_id(cls, topology_id: str) -> "TopologySignature":
        sig = cls.__new__(cls)
        sig.bipartitions = ()
        sig.id = topology_id
        return sig

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TopologySignature):
            return NotImplemented
        return self.id == other.id

    def __hash__(self) -> int:
        return hash(self.id)

    def __repr__(self) -> str:
        return f"TopologySignature({self.id})"


class UnrootedTree:
    """Leaf-labeled unrooted tree with branch lengths and edge supports."""

    def __init__(self, root: TreeNode, taxa: Iterable[str]):
        self.root = root
        self.taxa = tuple(taxa)

    def leaves(self) -> list[str]:
        return self.root.leaf_names()

    def internal_nodes(self) -> list[TreeNode]:
        """Non-leaf nodes below the root; each owns one internal edge."""
        return [n for n in self.root.walk() if not n.is_leaf and n is not self.root]

    def bipartitions(self) -> set[frozenset[str]]:
        """Non-trivial splits, each as the leaf set under an internal edge."""
        all_taxa = frozenset(self.taxa)
        parts = set()
        for node in self.internal_nodes():
            side = frozenset(node.leaf_names())
            if 2 <= len(side) <= len(all_taxa) - 2:
                parts.add(side)
        return parts

    def signature(self) -> TopologySignature:
        return TopologySignature(self.bipartitions(), self.taxa)

    def supports(self) -> list[int]:
        return [n.support for n in self.internal_nodes() if n.support is not None]

    def newick(self) -> str:
        """Newick text: integer supports as internal labels, 6-decimal lengths."""
        return self._newick_node(self.root, top=True) + ";"

    def _newick_node(self, node: TreeNode, top: bool = False) -> str:
        if node.is_leaf:
            return f"{node.name}:{node.length:.6f}"
        inner = ",".join(self._newick_node(c) for c in node.children)
        label = "" if node.support is None else str(node.support)
        if top:
            return f"({inner}){label}"
        return f"({inner}){label}:{node.length:.6f}"


def display_rooted(tree: UnrootedTree, outgroup: str) -> UnrootedTree:
    """Re-draw the tree so the outgroup hangs directly off the root.

    Purely presentational: branch lengths and edge supports travel with
    their edges, and the topology signature is unchanged.
    """
    if outgroup not in tree.taxa:
        raise ValueError(f"outgroup {outgroup!r} is not a leaf of this tree")

    edges: dict[int, list[tuple[TreeNode, float, int | None]]] = {}

    def link(a: TreeNode, b: TreeNode, length: float, support: int | None) -> None:
        edges.setdefault(id(a), []).append((b, length, support))
        edges.setdefault(id(b), []).append((a, length, support))

    def collect(node: TreeNode) -> None:
        for child in node.children:
            link(node, child, child.length, child.support)
            collect(child)

    collect(tree.root)
    leaf = next(n for n in tree.root.walk() if n.name == outgroup)

    def rebuild(node: TreeNode, parent: TreeNode | None) -> TreeNode:
        fresh = TreeNode(name=node.name)
        for neighbor, length, support in edges.get(id(node), []):
            if parent is not None and neighbor is parent:
                continue
            child = rebuild(neighbor, node)
            child.length = length
            child.support = support
            fresh.children.append(child)
        return fresh

    (anchor, length, support) = edges[id(leaf)][0]
    root = TreeNode()
    out_node = TreeNode(name=outgroup, length=length, support=support)
    rest = rebuild(anchor, leaf)
    rest.length = 0.0
    root.children = [out_node, rest]
    return UnrootedTree(root, tree.taxa)


class NewickParseError(ValueError):
    pass


def parse_newick(text: str) -> UnrootedTree:
    """Parse Newick with optional internal support labels and branch lengths."""
    s = text.strip()
    if not s.endswith(";"):
        raise NewickParseError("newick text must end with ';'")
    s = s[:-1]
    pos = 0

    def parse_node() -> TreeNode:
        nonlocal pos
        node = TreeNode()
        if pos < len(s) and s[pos] == "(":
            pos += 1
            node.children.append(parse_node())
            while pos < len(s) and s[pos] == ",":
                pos += 1
                node.children.append(parse_node())
            if pos >= len(s) or s[pos] != ")":
                raise NewickParseError("unbalanced parentheses")
            pos += 1
            label = read_token()
            if label:
                try:
                    node.support = int(round(float(label)))
                except ValueError as exc:
                    raise NewickParseError(f"bad support label {label!r}") from exc
        else:
            name = read_token()
            if not name:
                raise NewickParseError(f"expected a taxon name at offset {pos}")
            node.name = name
        if pos < len(s) and s[pos] == ":":
            pos += 1
            token = read_token()
            try:
                node.length = float(token)
            except ValueError as exc:
                raise NewickParseError(f"bad branch length {token!r}") from exc
        return node

    def read_token() -> str:
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos] not in "(),:;":
            pos += 1
        return s[start:pos].strip()

    root = parse_node()
    if pos != len(s):
        raise NewickParseError(f"trailing characters at offset {pos}")
    return UnrootedTree(root, root.leaf_names())
