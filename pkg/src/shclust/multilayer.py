"""Gap-statistic-gated splitting of a dendrogram into at most K clusters."""
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .dissimilarity import aggregate_dissim, as_array
from .hclust import agglomerate, labels_from_nodes
from .stats import gap_split_decision

DEFAULT_B = 50
# nodes smaller than this are never tested: with two members the binary cut
# has zero within-cluster dispersion and the gap test always accepts
MIN_NODE_SIZE = 3


@dataclass
class MultilayerResult:
    labels: np.ndarray
    n_clusters: int
    terminal_nodes: list
    decisions: list = field(default_factory=list)  # (node, GapDecision)

    def to_dict(self):
        return {
            "n_clusters": self.n_clusters,
            "leaves": [int(v) for v in self.terminal_nodes],
            "decisions": [{"node": int(nd), **dec.to_dict()} for nd, dec in self.decisions],
        }


def multilayer_cluster(tree, x, k_ref=None, b=DEFAULT_B, seed=0, *,
                       measure="sqeuclidean", min_node_size=MIN_NODE_SIZE):
    """Split from the root while the gap test accepts, up to ``k_ref`` clusters.

    ``k_ref=None`` removes the cap: splitting continues until every leaf is
    terminal.  The next node examined is the non-terminal leaf with the
    largest merge height (ties: smaller smallest-member index).
    """
    arr = as_array(x)
    if arr.shape[0] != tree.n:
        raise ValueError(f"tree has {tree.n} leaves but x has {arr.shape[0]} rows")
    if k_ref is not None and k_ref < 1:
        raise ValueError("k_ref must be >= 1")
    if b < 1:
        raise ValueError("bootstrap count must be >= 1")

    leaves = [tree.root]
    terminal = set()
    decisions = []
    while True:
        if k_ref is not None and len(leaves) >= k_ref:
            break
        open_leaves = [nd for nd in leaves if nd not in terminal]
        if not open_leaves:
            break
        node = max(open_leaves, key=lambda nd: (tree.height(nd), -int(tree.members(nd)[0])))
        members = tree.members(node)
        if len(members) < max(2, min_node_size):
            terminal.add(node)
            continue
        left, right = tree.node_children(node)
        labels = np.where(np.isin(members, tree.members(left)), 1, 2)
        dec = gap_split_decision(
            arr[members], labels, b=b, seed=derive_seed(seed, node),
            linkage=tree.linkage, measure=measure,
        )
        decisions.append((node, dec))
        if dec.split:
            pos = leaves.index(node)
            leaves[pos:pos + 1] = [left, right]
        else:
            terminal.add(node)

    labels = labels_from_nodes(tree, leaves)
    ordered = sorted(leaves, key=lambda nd: int(tree.members(nd)[0]))
    return MultilayerResult(labels, len(leaves), ordered, decisions)


def default_reference_k(x, linkage="complete", b=DEFAULT_B, seed=0, measure="sqeuclidean"):
    """``max(2, K')`` where K' comes from an uncapped multilayer run on all features."""
    arr = as_array(x)
    tree = agglomerate(aggregate_dissim(arr, measure=measure), linkage)
    res = multilayer_cluster(tree, arr, None, b, seed, measure=measure)
    return max(2, res.n_clusters)
