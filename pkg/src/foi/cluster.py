"""Agglomerative hierarchical clustering, dendrogram cuts and partition comparison."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidK, LabelMismatch, MissingCoordinate, ValidationError


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SQEUCLIDEAN = "sqeuclidean"


class Linkage(str, enum.Enum):
    AVERAGE = "average"
    SINGLE = "single"
    COMPLETE = "complete"


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple[str, ...]
    d: np.ndarray = field(repr=False)
    metric: Metric | None = None

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        n = len(self.labels)
        if d.shape != (n, n):
            raise ValidationError(f"distance matrix must be {n} x {n}, got {d.shape}")
        if np.any(np.isnan(d)) or np.any(d < 0):
            raise ValidationError("distances must be nonnegative numbers")
        if np.max(np.abs(d - d.T), initial=0.0) > 1e-12 or np.any(np.diag(d) != 0):
            raise ValidationError("distance matrix must be symmetric with a zero diagonal")
        d.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "d", d)


def distance_matrix(points, labels: Sequence[str] | None = None, metric: Metric | str = Metric.SQEUCLIDEAN) -> DistanceMatrix:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("need a 2-D array with at least two points")
    if labels is None:
        labels = [str(i) for i in range(x.shape[0])]
    missing = np.isnan(x).any(axis=1)
    if missing.any():
        bad = [labels[i] for i in np.nonzero(missing)[0]]
        raise MissingCoordinate(f"missing coordinates for {bad}")
    metric = Metric(metric)
    diff = x[:, None, :] - x[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    d = sq if metric is Metric.SQEUCLIDEAN else np.sqrt(sq)
    return DistanceMatrix(tuple(labels), d, metric)


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float
    new_id: int
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge history; leaves are ids 0..n-1 and merge k creates id n+k."""

    labels: tuple[str, ...]
    merges: tuple[Merge, ...]
    linkage: Linkage
    metric: Metric | None = None

    @property
    def n(self) -> int:
        return len(self.labels)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "linkage": self.linkage.value,
            "metric": None if self.metric is None else self.metric.value,
            "merges": [vars(m) for m in self.merges],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Dendrogram":
        return cls(
            tuple(d["labels"]),
            tuple(Merge(**m) for m in d["merges"]),
            Linkage(d["linkage"]),
            None if d.get("metric") is None else Metric(d["metric"]),
        )

    def to_newick(self, decimals: int = 6) -> str:
        """Newick text; branch length = parent height minus child height."""
        n = self.n
        heights = {i: 0.0 for i in range(n)}
        children = {}
        for m in self.merges:
            heights[m.new_id] = m.height
            children[m.new_id] = (m.a, m.b)

        def quote(label):
            return "'" + label.replace("'", "''") + "'"

        def render(node):
            if node < n:
                return quote(self.labels[node])
            a, b = children[node]
            parts = [f"{render(c)}:{heights[node] - heights[c]:.{decimals}f}" for c in (a, b)]
            return "(" + ",".join(parts) + ")"

        root = self.merges[-1].new_id if self.merges else 0
        return render(root) + ";"


def agglomerate(d: DistanceMatrix, linkage: Linkage | str = Linkage.AVERAGE) -> Dendrogram:
    """Agglomerative clustering with Lance-Williams updates.

    At each step the pair of active clusters at minimal distance is merged;
    exact ties go to the lexicographically smallest (id_a, id_b) pair.
    """
    linkage = Linkage(linkage)
    n = len(d.labels)
    dist: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            dist[i][j] = dist[j][i] = float(d.d[i, j])
    size = {i: 1 for i in range(n)}
    merges = []
    next_id = n
    while len(size) > 1:
        best = None
        active = sorted(size)
        for ia, a in enumerate(active):
            row = dist[a]
            for b in active[ia + 1:]:
                v = row[b]
                if best is None or v < best[0]:
                    best = (v, a, b)
        height, a, b = best
        na, nb = size.pop(a), size.pop(b)
        new = {}
        for k in size:
            dka, dkb = dist[k].pop(a), dist[k].pop(b)
            if linkage is Linkage.AVERAGE:
                v = (na * dka + nb * dkb) / (na + nb)
            elif linkage is Linkage.SINGLE:
                v = min(dka, dkb)
            else:
                v = max(dka, dkb)
            new[k] = v
            dist[k][next_id] = v
        del dist[a], dist[b]
        dist[next_id] = new
        size[next_id] = na + nb
        merges.append(Merge(a, b, height, next_id, na + nb))
        next_id += 1
    return Dendrogram(d.labels, tuple(merges), linkage, d.metric)


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    membership: dict[str, int]
    names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = set(self.membership.values())
        if len(ids) != self.k:
            raise ValidationError(f"assignment has {len(ids)} distinct clusters, expected {self.k}")

    def members(self, cluster: int) -> list[str]:
        return [c for c, g in self.membership.items() if g == cluster]

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for c, g in self.membership.items():
            out.setdefault(g, []).append(c)
        return dict(sorted(out.items()))

    def singletons(self) -> set[str]:
        return {m[0] for m in self.clusters().values() if len(m) == 1}

    def cluster_of(self, country: str) -> list[str]:
        return self.members(self.membership[country])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "clusters": [
                {"id": g, "name": self.names.get(g), "members": members}
                for g, members in self.clusters().items()
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClusterAssignment":
        membership, names = {}, {}
        for c in d["clusters"]:
            for m in c["members"]:
                membership[m] = c["id"]
            if c.get("name") is not None:
                names[c["id"]] = c["name"]
        return cls(d["k"], membership, names)

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[str]], names: Sequence[str] | None = None) -> "ClusterAssignment":
        membership = {c: g for g, members in enumerate(groups, start=1) for c in members}
        if sum(len(g) for g in groups) != len(membership):
            raise ValidationError("a country appears in more than one group")
        named = {g: name for g, name in enumerate(names, start=1)} if names else {}
        return cls(len(groups), membership, named)


def cut_k(dendrogram: Dendrogram, k: int) -> ClusterAssignment:
    """Partition obtained by undoing the last k-1 merges.

    Cluster ids run from 1 in order of each cluster's first leaf.
    """
    n = dendrogram.n
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for m in dendrogram.merges[: n - k]:
        parent[find(m.a)] = m.new_id
        parent[find(m.b)] = m.new_id
    ids: dict[int, int] = {}
    membership = {}
    for leaf, label in enumerate(dendrogram.labels):
        root = find(leaf)
        if root not in ids:
            ids[root] = len(ids) + 1
        membership[label] = ids[root]
    return ClusterAssignment(k, membership)


def _comb2(x) -> float:
    return x * (x - 1) / 2.0


def adjusted_rand_index(a: ClusterAssignment, b: ClusterAssignment) -> float:
    """Hubert-Arabie adjusted Rand index from the pair-counting contingency table."""
    if set(a.membership) != set(b.membership):
        raise LabelMismatch("partitions cover different country sets")
    keys = list(a.membership)
    n = len(keys)
    table = Counter((a.membership[c], b.membership[c]) for c in keys)
    index = sum(_comb2(v) for v in table.values())
    sum_a = sum(_comb2(v) for v in Counter(a.membership[c] for c in keys).values())
    sum_b = sum(_comb2(v) for v in Counter(b.membership[c] for c in keys).values())
    total = _comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        # both partitions trivial (all singletons or one block)
        return 1.0 if sum_a == sum_b else 0.0
    return (index - expected) / (maximum - expected)


@dataclass(frozen=True)
class ClusterMean:
    mean: float | None
    n_used: int


def cluster_means(assignment: ClusterAssignment, values: Mapping[str, float | None]) -> dict[int, ClusterMean]:
    """Per-cluster mean of the non-missing values; ``mean`` is None when none are usable."""
    out = {}
    for g, members in assignment.clusters().items():
        usable = [
            float(values[c]) for c in members
            if values.get(c) is not None and not math.isnan(values[c])
        ]
        out[g] = ClusterMean(sum(usable) / len(usable) if usable else None, len(usable))
    return out
