"""Well components, merging, Voronoi-type regions, and separation axioms.

A "well" here is a connected component of the well set of a shifted potential
(components taken in the adjacency graph of the matrix).  Wells closer than a
minimum separation are merged transitively; every index is then assigned to
the region of its nearest well.  ``verify_separation`` evaluates the three
separation axioms and records the achieved margins; failures are reported in
the result, never raised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .agmon import AgmonMetric, INF, distance_from_set, inner_boundary, set_distance
from .matrices import SparseSymMatrix

__all__ = [
    "WellPartition",
    "well_components",
    "merge_close_wells",
    "voronoi_regions",
    "verify_separation",
    "build_partition",
    "write_partition_json",
    "partition_report_dict",
]


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller root wins, keeping group ids stable
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True, eq=False)
class WellPartition:
    """Wells, their Voronoi regions, and the separation audit.

    ``s_achieved`` is the smallest distance from a region's inner boundary to
    its own well; ``well_separation`` is the smallest well-to-well distance.
    ``unassigned`` lists indices unreachable from every well; they are parked
    in region 0 and flagged here.
    """

    wells: tuple[frozenset[int], ...]
    regions: tuple[frozenset[int], ...]
    s_requested: float
    s_achieved: float
    well_separation: float
    axiom_disjoint: bool
    axiom_complement: bool
    axiom_boundary: bool
    boundary_well_distances: tuple[float, ...]
    complement_well_distances: tuple[float, ...]
    unassigned: frozenset[int]

    @property
    def axioms_hold(self) -> bool:
        return self.axiom_disjoint and self.axiom_complement and self.axiom_boundary


def well_components(A: SparseSymMatrix, wells) -> list[frozenset[int]]:
    """Connected components of the well set in the graph of A.

    Components are ordered by their smallest member.
    """
    well_set = set(int(i) for i in wells)
    for i in well_set:
        if not (1 <= i <= A.n):
            raise ValueError(f"index {i} outside [1, {A.n}]")
    seen: set[int] = set()
    comps: list[frozenset[int]] = []
    for start in sorted(well_set):
        if start in seen:
            continue
        stack = [start]
        comp = {start}
        seen.add(start)
        while stack:
            k = stack.pop()
            for nb in A.neighbors(k):
                if nb in well_set and nb not in seen:
                    seen.add(nb)
                    comp.add(nb)
                    stack.append(nb)
        comps.append(frozenset(comp))
    return comps


def merge_close_wells(
    components: list[frozenset[int]],
    m: AgmonMetric,
    min_sep: float,
) -> list[frozenset[int]]:
    """Merge components transitively until all pairwise distances are >= min_sep.

    Since rho(K1 u K2, K3) = min(rho(K1, K3), rho(K2, K3)), merging never
    increases a distance, so the transitive closure over the "closer than
    min_sep" relation is exactly what is needed.  Results keep the order of
    their smallest member.
    """
    count = len(components)
    if count == 0:
        return []
    # one distance field per component serves all pairwise queries
    fields = [distance_from_set(m, comp) for comp in components]
    uf = _UnionFind(count)
    for a in range(count):
        for b in range(a + 1, count):
            d = min(fields[a].dist[k - 1] for k in components[b])
            if d < min_sep:
                uf.union(a, b)
    grouped: dict[int, set[int]] = {}
    for idx, comp in enumerate(components):
        grouped.setdefault(uf.find(idx), set()).update(comp)
    merged = [frozenset(v) for v in grouped.values()]
    merged.sort(key=min)
    return merged


def voronoi_regions(
    A: SparseSymMatrix,
    wells: list[frozenset[int]],
    m: AgmonMetric,
) -> list[frozenset[int]]:
    """Assign every index to its nearest well; ties go to the lowest well id.

    Indices at infinite distance from every well fall back to region 0.
    """
    regions, _ = _assign_regions(A, wells, m)
    return regions


def _assign_regions(A, wells, m):
    if not wells:
        return [], frozenset()
    fields = [distance_from_set(m, w) for w in wells]
    members: list[set[int]] = [set() for _ in wells]
    unassigned = set()
    for k in range(1, A.n + 1):
        best = 0
        best_d = fields[0].dist[k - 1]
        for ell in range(1, len(wells)):
            d = fields[ell].dist[k - 1]
            if d < best_d:
                best, best_d = ell, d
        if math.isinf(best_d):
            unassigned.add(k)
            best = 0
        members[best].add(k)
    return [frozenset(s) for s in members], frozenset(unassigned)


def verify_separation(
    A: SparseSymMatrix,
    wells: list[frozenset[int]],
    regions: list[frozenset[int]],
    m: AgmonMetric,
    s_requested: float,
    unassigned: frozenset[int] = frozenset(),
) -> WellPartition:
    """Evaluate the separation axioms at s_requested; never raises on failure.

    (disjoint)    regions are pairwise disjoint;
    (complement)  rho(complement of region, its well) >= S for every region;
    (boundary)    rho(inner boundary of region, its well) >= S for every region.
    The boundary axiom strengthens the complement one: leaving a region means
    stepping through its inner boundary first.
    """
    if len(wells) != len(regions):
        raise ValueError(f"{len(wells)} wells but {len(regions)} regions")
    all_indices = set(range(1, A.n + 1))
    disjoint = True
    seen: set[int] = set()
    for reg in regions:
        if seen & reg:
            disjoint = False
            break
        seen |= reg

    boundary_d: list[float] = []
    complement_d: list[float] = []
    well_sep = INF
    fields = [distance_from_set(m, w) for w in wells]
    for ell, (well, reg) in enumerate(zip(wells, regions)):
        dist = fields[ell].dist
        bnd = inner_boundary(A, reg)
        boundary_d.append(min((float(dist[k - 1]) for k in bnd), default=INF))
        comp = all_indices - set(reg)
        complement_d.append(min((float(dist[k - 1]) for k in comp), default=INF))
        for other in range(len(wells)):
            if other != ell:
                d = min((float(dist[k - 1]) for k in wells[other]), default=INF)
                well_sep = min(well_sep, d)

    s_achieved = min(boundary_d, default=INF)
    ax_boundary = all(d >= s_requested for d in boundary_d)
    ax_complement = all(d >= s_requested for d in complement_d)
    return WellPartition(
        wells=tuple(wells),
        regions=tuple(regions),
        s_requested=float(s_requested),
        s_achieved=s_achieved,
        well_separation=well_sep,
        axiom_disjoint=disjoint,
        axiom_complement=ax_complement,
        axiom_boundary=ax_boundary,
        boundary_well_distances=tuple(boundary_d),
        complement_well_distances=tuple(complement_d),
        unassigned=unassigned,
    )


def build_partition(
    A: SparseSymMatrix,
    m: AgmonMetric,
    s_requested: float,
    *,
    min_sep: float | None = None,
) -> WellPartition:
    """Full recipe: components, merge, Voronoi assignment, separation audit.

    The default merge threshold 2 * s_requested + 1e-9 guarantees no two
    surviving wells could both claim an index within s_requested of each.
    """
    if min_sep is None:
        min_sep = 2.0 * float(s_requested) + 1e-9
    comps = well_components(A, m.provenance.wells)
    wells = merge_close_wells(comps, m, min_sep)
    regions, unassigned = _assign_regions(A, wells, m)
    return verify_separation(A, wells, regions, m, s_requested, unassigned)


def _json_num(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def partition_report_dict(p: WellPartition) -> dict:
    return {
        "wells": [sorted(w) for w in p.wells],
        "regions": [sorted(r) for r in p.regions],
        "s_requested": _json_num(p.s_requested),
        "s_achieved": _json_num(p.s_achieved),
        "well_separation": _json_num(p.well_separation),
        "axioms": {
            "disjoint": p.axiom_disjoint,
            "complement": p.axiom_complement,
            "boundary": p.axiom_boundary,
        },
        "boundary_well_distances": [_json_num(d) for d in p.boundary_well_distances],
        "complement_well_distances": [_json_num(d) for d in p.complement_well_distances],
        "unassigned": sorted(p.unassigned),
    }


def write_partition_json(path, p: WellPartition) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(partition_report_dict(p), fh, indent=2, sort_keys=True)
        fh.write("\n")
