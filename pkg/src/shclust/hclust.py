"""Agglomerative hierarchical clustering and dendrogram queries.

Node ids follow the usual convention: leaves are ``0..n-1`` and the merge
performed at step ``t`` creates node ``n + t``; the root is ``2n - 2``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .dissimilarity import check_dissimilarity

LINKAGES = tuple(kernels.LINKAGE_CODES)


@dataclass(frozen=True, eq=False)
class Dendrogram:
    children: np.ndarray  # (n-1, 2) node ids, smaller id first
    heights: np.ndarray  # (n-1,)
    sizes: np.ndarray  # (n-1,)
    linkage: str

    @property
    def n(self):
        return self.children.shape[0] + 1

    @property
    def root(self):
        return 2 * self.n - 2

    @property
    def leaf_ids(self):
        return np.arange(self.n)

    @property
    def merges(self):
        """Merge records as ``(left, right, height, size)`` tuples."""
        return [
            (int(a), int(b), float(h), int(s))
            for (a, b), h, s in zip(self.children, self.heights, self.sizes)
        ]

    def _check_node(self, node):
        if not 0 <= node <= self.root:
            raise KeyError(f"unknown node {node}")

    def height(self, node):
        self._check_node(node)
        return 0.0 if node < self.n else float(self.heights[node - self.n])

    def node_children(self, node):
        """The two children of an internal node; empty tuple for a leaf."""
        self._check_node(node)
        if node < self.n:
            return ()
        a, b = self.children[node - self.n]
        return int(a), int(b)

    @cached_property
    def _member_lists(self):
        members = [[i] for i in range(self.n)]
        for a, b in self.children:
            members.append(sorted(members[a] + members[b]))
        return members

    def members(self, node):
        self._check_node(node)
        return np.asarray(self._member_lists[node], dtype=np.int64)

    def cut(self, k):
        return cut(self, k)

    def to_newick(self, names=None):
        return to_newick(self, names)

    def to_dict(self, names=None):
        names = list(names) if names is not None else [str(i) for i in range(self.n)]
        return {
            "linkage": self.linkage,
            "n": self.n,
            "leaves": names,
            "merges": [
                {"id": self.n + t, "left": a, "right": b, "height": h, "size": s}
                for t, (a, b, h, s) in enumerate(self.merges)
            ],
        }


def agglomerate(d, linkage="complete"):
    """Build a dendrogram from an ``n x n`` dissimilarity matrix.

    Ties between candidate merges are broken by the lexicographically
    smallest ``(smaller id, larger id)`` node pair.  For ``ward`` the input is
    taken to be squared Euclidean and merge heights are reported on the
    Euclidean scale (the square root of the Lance-Williams value).
    """
    if linkage not in kernels.LINKAGE_CODES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    d = check_dissimilarity(d)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    children, heights, sizes = kernels.agglomerate(d, kernels.LINKAGE_CODES[linkage])
    for arr in (children, heights, sizes):
        arr.setflags(write=False)
    return Dendrogram(children, heights, sizes, linkage)


def cut(tree, k):
    """Partition into ``k`` clusters by undoing the last ``k - 1`` merges.

    Labels are 1..k, numbered in order of each cluster's smallest member.
    """
    n = tree.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    return kernels.cut(np.ascontiguousarray(tree.children), n, int(k))


def subtree_members(tree, node):
    return tree.members(node)


def canonical_labels(labels):
    """Relabel a partition as 1..k in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(1, len(first) + 1)
    return rank[inverse.ravel()]


def labels_from_nodes(tree, nodes):
    """Partition whose clusters are the subtrees under ``nodes``."""
    labels = np.zeros(tree.n, dtype=np.int64)
    for c, node in enumerate(nodes, start=1):
        labels[tree.members(node)] = c
    if (labels == 0).any():
        raise ValueError("nodes do not cover every observation")
    return canonical_labels(labels)


def cophenetic(tree):
    """Matrix of merge heights at which each pair first shares a cluster."""
    n = tree.n
    out = np.zeros((n, n))
    members = tree._member_lists
    for t, (a, b) in enumerate(tree.children):
        out[np.ix_(members[a], members[b])] = tree.heights[t]
        out[np.ix_(members[b], members[a])] = tree.heights[t]
    return out


def _newick_name(name):
    name = str(name)
    if any(ch in name for ch in " ():;,[]'\t\n"):
        return "'" + name.replace("'", "''") + "'"
    return name


def to_newick(tree, names=None):
    """Newick text with branch lengths equal to height differences."""
    n = tree.n
    names = list(names) if names is not None else [str(i) for i in range(n)]
    if len(names) != n:
        raise ValueError("names length does not match leaf count")
    text = [_newick_name(nm) for nm in names] + [None] * (n - 1)
    for t, (a, b) in enumerate(tree.children):
        h = float(tree.heights[t])
        parts = [f"{text[c]}:{h - tree.height(int(c))!r}" for c in (a, b)]
        text[n + t] = "(" + ",".join(parts) + ")"
    return text[tree.root] + ";"
