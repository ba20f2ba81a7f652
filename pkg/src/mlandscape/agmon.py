"""Agmon-type graph pseudo-metric built from a shifted potential.

Edges follow the non-zero off-diagonal pattern of the matrix; the weight of
edge {i, j} is ln(1 + sqrt(sqrt(v_i v_j) / |a_ij|)).  Distances are shortest
path sums (a pseudo-metric: weights vanish wherever the potential does), with
+inf for unreachable targets and for distances to an empty set.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .landscape import ShiftedPotential
from .matrices import SparseSymMatrix, _frozen

__all__ = [
    "AgmonMetric",
    "DistanceField",
    "build_metric",
    "distance_from_set",
    "pairwise_distance",
    "set_distance",
    "inner_boundary",
    "outer_boundary",
    "band_lower_bound",
    "write_distance_csv",
    "write_edges_csv",
]

INF = float("inf")


@dataclass(frozen=True, eq=False)
class AgmonMetric:
    """Weighted graph of the pseudo-metric; provenance records the potential."""

    n: int
    threshold: float
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_w: np.ndarray
    provenance: ShiftedPotential
    _adj: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _frozen(self.edge_i)
        _frozen(self.edge_j)
        _frozen(self.edge_w)
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for i, j, w in zip(self.edge_i, self.edge_j, self.edge_w):
            adj[i - 1].append((int(j) - 1, float(w)))
            adj[j - 1].append((int(i) - 1, float(w)))
        for row in adj:
            row.sort()
        object.__setattr__(self, "_adj", adj)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield (i, j, weight) with i < j, lexicographic."""
        for i, j, w in zip(self.edge_i, self.edge_j, self.edge_w):
            yield int(i), int(j), float(w)

    def edge_weight(self, i: int, j: int) -> float:
        for nb, w in self._adj[i - 1]:
            if nb == j - 1:
                return w
        raise KeyError(f"no edge between {i} and {j}")


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Distances from a source set; dist[k] is the distance of index k+1.

    ``witness_path(i)`` reconstructs a realizing shortest path (source first)
    from the stored Dijkstra predecessors.
    """

    source: frozenset[int]
    dist: np.ndarray
    predecessor: np.ndarray

    def __post_init__(self):
        _frozen(self.dist)
        _frozen(self.predecessor)

    def witness_path(self, i: int) -> list[int]:
        k = i - 1
        if not (0 <= k < self.dist.size):
            raise ValueError(f"index {i} outside [1, {self.dist.size}]")
        if not math.isfinite(self.dist[k]):
            raise ValueError(f"index {i} is unreachable from the source set")
        path = [i]
        while self.predecessor[k] >= 0:
            k = int(self.predecessor[k])
            path.append(k + 1)
        path.reverse()
        return path


def build_metric(A: SparseSymMatrix, sp: ShiftedPotential) -> AgmonMetric:
    """Agmon metric of (A, v): weight(i,j) = ln(1 + sqrt(sqrt(v_i v_j)/|a_ij|))."""
    if sp.v.shape != (A.n,):
        raise ValueError(f"potential has length {sp.v.shape[0]}, matrix has n = {A.n}")
    off_i, off_j, off_v = A.off_arrays()
    vi = sp.v[off_i - 1]
    vj = sp.v[off_j - 1]
    w = np.log1p(np.sqrt(np.sqrt(vi * vj) / np.abs(off_v)))
    return AgmonMetric(
        n=A.n,
        threshold=sp.threshold,
        edge_i=off_i.copy(),
        edge_j=off_j.copy(),
        edge_w=w,
        provenance=sp,
    )


def _check_indices(n: int, indices: Iterable[int]) -> list[int]:
    out = []
    for i in indices:
        i = int(i)
        if not (1 <= i <= n):
            raise ValueError(f"index {i} outside [1, {n}]")
        out.append(i)
    return out


def distance_from_set(m: AgmonMetric, sources: Iterable[int]) -> DistanceField:
    """Multi-source Dijkstra; an empty source set gives all-infinite distances.

    Ties are broken toward the smallest predecessor index so witness paths are
    reproducible run to run.
    """
    src = sorted(set(_check_indices(m.n, sources)))
    dist = np.full(m.n, INF, dtype=float)
    pred = np.full(m.n, -1, dtype=np.int64)
    heap: list[tuple[float, int]] = []
    for s in src:
        dist[s - 1] = 0.0
        heapq.heappush(heap, (0.0, s - 1))
    adj = m._adj
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist[node]:
            continue
        for nb, w in adj[node]:
            nd = d + w
            if nd < dist[nb]:
                dist[nb] = nd
                pred[nb] = node
                heapq.heappush(heap, (nd, nb))
            elif nd == dist[nb] and pred[nb] >= 0 and node < pred[nb]:
                pred[nb] = node
    return DistanceField(source=frozenset(src), dist=dist, predecessor=pred)


def pairwise_distance(m: AgmonMetric, i: int, j: int) -> float:
    """rho(i, j); 0 on the diagonal, +inf when j is unreachable from i."""
    (i,) = _check_indices(m.n, [i])
    (j,) = _check_indices(m.n, [j])
    return float(distance_from_set(m, [i]).dist[j - 1])


def set_distance(m: AgmonMetric, K: Iterable[int], M: Iterable[int]) -> float:
    """rho(K, M) = inf over pairs; +inf when either set is empty."""
    K = set(_check_indices(m.n, K))
    M = set(_check_indices(m.n, M))
    if not K or not M:
        return INF
    field_ = distance_from_set(m, M)
    return float(min(field_.dist[k - 1] for k in K))


def inner_boundary(A: SparseSymMatrix, omega: Iterable[int]) -> frozenset[int]:
    """Members of omega with at least one neighbor outside omega."""
    om = set(_check_indices(A.n, omega))
    return frozenset(k for k in om if any(nb not in om for nb in A.neighbors(k)))


def outer_boundary(A: SparseSymMatrix, omega: Iterable[int]) -> frozenset[int]:
    """Non-members of omega with at least one neighbor inside omega."""
    om = set(_check_indices(A.n, omega))
    out = set()
    for k in om:
        for nb in A.neighbors(k):
            if nb not in om:
                out.add(nb)
    return frozenset(out)


def band_lower_bound(w: int, i1: int, iq: int, v_min: float, a_max: float) -> float:
    """Distance lower bound across an interval where the potential stays >= v_min.

    For a matrix of half-bandwidth w and an interval [i1, iq] on which
    v >= v_min, every path crossing the interval uses at least
    floor((iq - i1 + 1 - w)/w) edges of weight >= ln(1 + sqrt(v_min/a_max)),
    so rho(i1 - 1, iq + 1) is at least that multiple.  Clamped below at 0.
    """
    if not isinstance(w, (int, np.integer)) or w < 1:
        raise ValueError(f"half-bandwidth must be a positive integer, got {w!r}")
    if iq < i1:
        raise ValueError(f"empty interval [{i1}, {iq}]")
    if not (float(v_min) > 0.0):
        raise ValueError(f"v_min must be positive, got {v_min!r}")
    if not (float(a_max) > 0.0):
        raise ValueError(f"a_max must be positive, got {a_max!r}")
    steps = (iq - i1 + 1 - w) // w
    if steps <= 0:
        return 0.0
    return steps * math.log1p(math.sqrt(float(v_min) / float(a_max)))


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_distance_csv(path, field_: DistanceField) -> None:
    """CSV with header index,dist; infinite distances serialize as 'inf'."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "dist"])
        for k in range(field_.dist.size):
            writer.writerow([k + 1, _fmt(float(field_.dist[k]))])


def write_edges_csv(path, m: AgmonMetric) -> None:
    """CSV with header i,j,weight listing each edge once (i < j)."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        for i, j, w in m.edges():
            writer.writerow([i, j, repr(w)])
