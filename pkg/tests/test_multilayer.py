import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shclust.dissimilarity import aggregate_dissim
from shclust.hclust import agglomerate, cut
from shclust.multilayer import default_reference_k, multilayer_cluster
from shclust.simgen import gen_example1, gen_sparse_model
from shclust.stats import cer

from strategies import seeded_normal


def _tree(x, linkage="complete"):
    return agglomerate(aggregate_dissim(x), linkage)


def _blobs(seed, sizes=(8, 8, 8), sep=6.0, p=3):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((len(sizes), p)) * sep
    x = np.vstack([c + rng.standard_normal((m, p)) for c, m in zip(centers, sizes)])
    return x


def test_cap_of_one_examines_nothing(rng):
    x = _blobs(1)
    res = multilayer_cluster(_tree(x), x, k_ref=1)
    assert res.n_clusters == 1 and res.decisions == []
    assert np.all(res.labels == 1)


def test_single_blob_stays_whole():
    kept = 0
    for seed in range(25):
        x = np.random.default_rng(seed).standard_normal((30, 5))
        kept += multilayer_cluster(_tree(x), x, k_ref=4, seed=seed).n_clusters == 1
    assert kept >= 20


def test_example1_true_features_four_clusters():
    exact = 0
    for seed in range(25):
        ds = gen_example1(seed)
        x = ds.x.values[:, ds.true_features]
        res = multilayer_cluster(_tree(x), x, k_ref=4, seed=seed)
        exact += res.n_clusters == 4 and cer(res.labels, ds.truth) == 0.0
    assert exact >= 20


def test_default_reference_k_on_planted_model():
    ks = [default_reference_k(gen_sparse_model(seed=s).x, seed=s) for s in range(10)]
    assert min(ks) >= 2
    assert sum(k == 3 for k in ks) > len(ks) // 2


def test_default_reference_k_floor_of_two():
    # a single tight blob: every split is rejected, K' = 1
    x = np.random.default_rng(3).standard_normal((25, 4))
    assert default_reference_k(x, seed=3) == 2


def test_root_split_with_cap_two_is_two_cut():
    x = _blobs(5, sizes=(10, 10), sep=8.0)
    tree = _tree(x)
    res = multilayer_cluster(tree, x, k_ref=2, seed=0)
    assert res.decisions[0][1].split
    assert np.array_equal(res.labels, cut(tree, 2))


def test_visits_highest_node_first():
    x = _blobs(11, sizes=(10, 10, 10), sep=10.0)
    tree = _tree(x)
    res = multilayer_cluster(tree, x, k_ref=3, seed=0)
    visited = [nd for nd, _ in res.decisions]
    assert visited[0] == tree.root
    heights = [tree.height(nd) for nd in visited]
    assert heights == sorted(heights, reverse=True)


def test_input_checks(rng):
    x = rng.standard_normal((6, 2))
    tree = _tree(x)
    with pytest.raises(ValueError):
        multilayer_cluster(tree, x[:5], k_ref=2)
    with pytest.raises(ValueError):
        multilayer_cluster(tree, x, k_ref=0)
    with pytest.raises(ValueError):
        multilayer_cluster(tree, x, k_ref=2, b=0)
    with pytest.raises(ValueError):
        multilayer_cluster(tree, x[:, :0], k_ref=2)


@given(seeded_normal(min_n=4, max_n=16, max_p=4), st.integers(1, 6),
       st.sampled_from(["complete", "average", "ward"]))
def test_cap_and_subtree_structure(data, k_ref, linkage):
    x, seed = data
    x = x + np.repeat(np.arange(2) * 4.0, [len(x) // 2, len(x) - len(x) // 2])[:, None]
    tree = _tree(x, linkage)
    res = multilayer_cluster(tree, x, k_ref=k_ref, b=5, seed=seed)
    assert 1 <= res.n_clusters <= k_ref
    assert res.labels.max() == res.n_clusters
    # every output cluster is the member set of one dendrogram node
    for lab, node in enumerate(res.terminal_nodes, start=1):
        assert np.array_equal(np.flatnonzero(res.labels == lab), np.sort(tree.members(node)))
    again = multilayer_cluster(tree, x, k_ref=k_ref, b=5, seed=seed)
    assert np.array_equal(res.labels, again.labels)
    assert res.to_dict() == again.to_dict()
