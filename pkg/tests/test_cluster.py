import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_upgma
from foi.cluster import (
    ClusterAssignment,
    Dendrogram,
    DistanceMatrix,
    Linkage,
    Metric,
    adjusted_rand_index,
    agglomerate,
    cluster_means,
    cut_k,
    distance_matrix,
)
from foi.errors import InvalidK, LabelMismatch, MissingCoordinate, ValidationError


def _random_dm(rng, n):
    pts = rng.standard_normal((n, 3))
    return distance_matrix(pts, [f"p{i}" for i in range(n)], Metric.EUCLIDEAN)


def test_distance_examples():
    dm = distance_matrix([[0, 0, 0], [1, 2, 2], [1, 2, 2]], ["a", "b", "c"], "euclidean")
    assert dm.d[0, 1] == 3.0 and dm.d[1, 2] == 0.0
    assert distance_matrix([[0, 0, 0], [1, 2, 2]], metric="sqeuclidean").d[0, 1] == 9.0


def test_distance_missing_coordinate():
    with pytest.raises(MissingCoordinate):
        distance_matrix([[0, 0, 0], [1, np.nan, 2]])


def test_distance_matrix_validation():
    with pytest.raises(ValidationError):
        DistanceMatrix(("a", "b"), [[0, 1], [2, 0]])
    with pytest.raises(ValidationError):
        DistanceMatrix(("a", "b"), [[0, -1], [-1, 0]])


def test_coincident_points_merge_first_at_zero():
    dm = distance_matrix([[0.0], [5.0], [2.0], [5.0]], metric="euclidean")
    first = agglomerate(dm).merges[0]
    assert (first.a, first.b, first.height) == (1, 3, 0.0)


def test_hand_traced_upgma():
    dm = distance_matrix([[0.0], [1.0], [10.0]], metric="euclidean")
    merges = agglomerate(dm, "average").merges
    assert [(m.a, m.b, m.height, m.new_id, m.size) for m in merges] == [(0, 1, 1.0, 3, 2), (2, 3, 9.5, 4, 3)]


def test_single_and_complete_linkage():
    dm = distance_matrix([[0.0], [1.0], [10.0]], metric="euclidean")
    assert agglomerate(dm, Linkage.SINGLE).merges[1].height == 9.0
    assert agglomerate(dm, Linkage.COMPLETE).merges[1].height == 10.0


def test_tie_break_is_lexicographic():
    # all pairwise distances equal
    dm = DistanceMatrix(tuple("abcd"), np.ones((4, 4)) - np.eye(4))
    assert [(m.a, m.b) for m in agglomerate(dm).merges][:2] == [(0, 1), (2, 3)]


def test_matches_naive_oracle():
    rng = np.random.default_rng(21)
    for _ in range(60):
        n = int(rng.integers(2, 11))
        dm = _random_dm(rng, n)
        got = [(m.a, m.b, m.height) for m in agglomerate(dm).merges]
        want = naive_upgma(dm.d)
        assert [g[:2] for g in got] == [w[:2] for w in want]
        np.testing.assert_allclose([g[2] for g in got], [w[2] for w in want], atol=1e-12)


def test_metric_consistency():
    rng = np.random.default_rng(22)
    for _ in range(30):
        pts = rng.standard_normal((9, 3))
        sq = agglomerate(distance_matrix(pts, metric="sqeuclidean"))
        eu = distance_matrix(pts, metric="euclidean")
        squared = agglomerate(DistanceMatrix(eu.labels, eu.d**2))
        assert [(m.a, m.b) for m in sq.merges] == [(m.a, m.b) for m in squared.merges]


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_permutation_invariance_and_monotone(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 3))
    labels = [f"p{i}" for i in range(n)]
    perm = rng.permutation(n)
    base = agglomerate(distance_matrix(pts, labels))
    shuffled = agglomerate(distance_matrix(pts[perm], [labels[i] for i in perm]))
    heights = [m.height for m in base.merges]
    assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))
    for k in range(1, n + 1):
        assert adjusted_rand_index(cut_k(base, k), cut_k(shuffled, k)) == pytest.approx(1.0)


def test_each_leaf_in_one_chain():
    dendro = agglomerate(_random_dm(np.random.default_rng(23), 8))
    assert len(dendro.merges) == 7
    used = [x for m in dendro.merges for x in (m.a, m.b)]
    assert sorted(used) == list(range(8 + 6))
    assert dendro.merges[-1].size == 8


def test_cut_k_extremes():
    dendro = agglomerate(_random_dm(np.random.default_rng(24), 6))
    one = cut_k(dendro, 1)
    assert one.k == 1 and set(one.membership.values()) == {1}
    alln = cut_k(dendro, 6)
    assert len(alln.singletons()) == 6
    assert list(alln.membership.values()) == [1, 2, 3, 4, 5, 6]
    with pytest.raises(InvalidK):
        cut_k(dendro, 0)
    with pytest.raises(InvalidK):
        cut_k(dendro, 7)


def test_fixture_cut_singletons(fixture_data):
    idx = fixture_data.indices
    dendro = agglomerate(distance_matrix(idx.values, idx.countries, "sqeuclidean"))
    part = cut_k(dendro, 11)
    assert {"Iceland", "Japan", "Luxembourg", "Switzerland"} <= part.singletons()


def _part(groups):
    return ClusterAssignment.from_groups(groups)


def test_ari_examples():
    p = _part([["a", "b"], ["c"], ["d", "e"]])
    assert adjusted_rand_index(p, p) == 1.0
    singles = _part([["a"], ["b"], ["c"], ["d"]])
    whole = _part([["a", "b", "c", "d"]])
    assert adjusted_rand_index(singles, whole) == 0.0
    relabeled = _part([["d", "e"], ["a", "b"], ["c"]])
    assert adjusted_rand_index(p, relabeled) == 1.0


def test_ari_against_sklearn_formula():
    # hand contingency: a={0,0,1,1}, b={0,0,0,1}
    a = ClusterAssignment(2, {"w": 1, "x": 1, "y": 2, "z": 2})
    b = ClusterAssignment(2, {"w": 1, "x": 1, "y": 1, "z": 2})
    # index=1, sum_a=2, sum_b=3, total=6 -> expected=1, max=2.5 -> ari=0
    assert adjusted_rand_index(a, b) == pytest.approx(0.0, abs=1e-15)


def test_ari_label_mismatch():
    with pytest.raises(LabelMismatch):
        adjusted_rand_index(_part([["a", "b"]]), _part([["a", "c"]]))


def test_ari_below_one_for_different_partitions():
    rng = np.random.default_rng(25)
    names = [f"c{i}" for i in range(12)]
    for _ in range(30):
        a = ClusterAssignment(3, {c: int(rng.integers(1, 4)) for c in names})
        b = ClusterAssignment(3, {c: int(rng.integers(1, 4)) for c in names})
        a = ClusterAssignment(len(set(a.membership.values())), a.membership)
        b = ClusterAssignment(len(set(b.membership.values())), b.membership)
        same = {frozenset(m) for m in a.clusters().values()} == {frozenset(m) for m in b.clusters().values()}
        assert (adjusted_rand_index(a, b) == pytest.approx(1.0)) == same


def test_assignment_k_must_match():
    with pytest.raises(ValidationError):
        ClusterAssignment(3, {"a": 1, "b": 2})


def test_cluster_means_examples():
    part = ClusterAssignment(3, {"Iceland": 1, "Switzerland": 2, "A": 3, "B": 3}, {1: "Iceland", 2: "Switzerland", 3: "AB"})
    means = cluster_means(part, {"Iceland": 2.34, "Switzerland": None, "A": 1.0, "B": 3.0})
    assert (means[1].mean, means[1].n_used) == (2.34, 1)
    assert means[2].mean is None and means[2].n_used == 0
    assert (means[3].mean, means[3].n_used) == (2.0, 2)


def test_cluster_means_nan_is_missing():
    part = ClusterAssignment(1, {"a": 1, "b": 1})
    assert cluster_means(part, {"a": math.nan, "b": 4.0})[1].mean == 4.0


def test_dendrogram_round_trip_and_newick():
    dm = distance_matrix([[0.0], [1.0], [10.0]], ["x", "y", "O'Hara"], "euclidean")
    dendro = agglomerate(dm)
    assert Dendrogram.from_dict(dendro.to_dict()) == dendro
    assert dendro.to_newick(2) == "('O''Hara':9.50,('x':1.00,'y':1.00):8.50);"


def test_assignment_round_trip():
    part = ClusterAssignment(2, {"a": 1, "b": 2, "c": 1}, {1: "first", 2: "second"})
    assert ClusterAssignment.from_dict(part.to_dict()) == part
    assert part.members(1) == ["a", "c"]
    assert part.cluster_of("c") == ["a", "c"]
