"""Topology recovery: signal profiles, good-cover refinement and nerves."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .graph import INF, GraphPoint, MetricGraph, Region, ball, betti, graph_distance, union_all
from .helmholtz import WaveField, evaluate

log = logging.getLogger(__name__)


class RefinementError(RuntimeError):
    pass


class UndersampledError(ValueError):
    pass


# ---------------------------------------------------------------------------
# signal profiles


@dataclass(frozen=True)
class SignalProfileSample:
    location: GraphPoint
    value: np.ndarray = field(compare=False)


def profile(fields: Sequence[WaveField], p: GraphPoint) -> SignalProfileSample:
    if not fields:
        raise ValueError("need at least one field")
    g0, k0 = fields[0].graph, fields[0].wavenumber
    if any(f.graph is not g0 or f.wavenumber != k0 for f in fields):
        raise ValueError("fields must share graph and wavenumber")
    return SignalProfileSample(p, np.array([evaluate(f, p) for f in fields]))


def injectivity_margin(samples: Sequence[SignalProfileSample], rho: float, graph: MetricGraph) -> float:
    """Smallest signal separation among pairs more than ``rho`` apart on the graph."""
    if len(samples) < 2:
        raise ValueError("insufficient samples")
    best = INF
    vals = np.array([s.value for s in samples])
    sig = np.linalg.norm(vals[:, None, :] - vals[None, :, :], axis=-1)
    for i, j in combinations(range(len(samples)), 2):
        if sig[i, j] >= best:
            continue
        if graph_distance(graph, samples[i].location, samples[j].location) > rho:
            best = sig[i, j]
    return float(best)


def sample_region(region: Region, spacing: float) -> list[GraphPoint]:
    """Points along every interval at most ``spacing`` apart, plus member vertices."""
    pts: list[GraphPoint] = [GraphPoint.at_vertex(v) for v in sorted(region.vertices, key=repr)]
    for eid, ivs in region.intervals.items():
        for a, b in ivs:
            b = min(b, a + 50 * spacing) if math.isinf(b) else b
            n = max(2, int(math.ceil((b - a) / spacing)) + 1)
            # stay strictly inside the open interval
            for x in np.linspace(a, b, n + 2)[1:-1]:
                pts.append(GraphPoint(eid, float(x)))
    return pts


def _adjacent_pairs(points: Sequence[GraphPoint], region: Region) -> list[tuple[int, int]]:
    by_interval: dict = {}
    vertex_index = {p.vertex: i for i, p in enumerate(points) if p.is_vertex}
    for i, p in enumerate(points):
        if p.is_vertex:
            continue
        for j, (a, b) in enumerate(region.intervals.get(p.edge, ())):
            if a < p.offset < b:
                by_interval.setdefault((p.edge, j), []).append(i)
    pairs = []
    g = region.graph
    for (eid, j), idx in by_interval.items():
        idx.sort(key=lambda i: points[i].offset)
        pairs.extend(zip(idx, idx[1:]))
        a, b = region.intervals[eid][j]
        e = g.edge(eid)
        if a <= 1e-12 and e.tail in vertex_index:
            pairs.append((vertex_index[e.tail], idx[0]))
        if not e.is_open and b >= e.length - 1e-12 and e.head in vertex_index:
            pairs.append((vertex_index[e.head], idx[-1]))
    return pairs


def components_via_signal(region: Region, samples: Sequence[SignalProfileSample], link_radius: float | None = None) -> list[list[int]]:
    """Single-linkage clusters of signal values; returns sample indices per cluster."""
    pts = [s.location for s in samples]
    vals = np.array([s.value for s in samples])
    for eid, ivs in region.intervals.items():
        for a, b in ivs:
            if sum(1 for p in pts if not p.is_vertex and p.edge == eid and a < p.offset < b) < 2:
                raise UndersampledError("undersampled region")
    if len(samples) == 1:
        return [[0]]
    if link_radius is None:
        pairs = _adjacent_pairs(pts, region)
        step = max((np.linalg.norm(vals[i] - vals[j]) for i, j in pairs), default=0.0)
        link_radius = 3 * step if step > 0 else 1e-12
    Z = linkage(np.hstack([vals.real, vals.imag]), method="single")
    labels = fcluster(Z, t=link_radius, criterion="distance")
    clusters: dict = {}
    for i, lab in enumerate(labels):
        clusters.setdefault(lab, []).append(i)
    return sorted(clusters.values())


# ---------------------------------------------------------------------------
# good covers


@dataclass(frozen=True)
class Cover:
    graph: MetricGraph = field(repr=False)
    regions: tuple[Region, ...]

    def __len__(self) -> int:
        return len(self.regions)

    def union(self) -> Region:
        return union_all(self.graph, self.regions)


def _intersections(regions: Sequence[Region]):
    """Yield ``(index tuple, intersection)`` for every nonempty intersection, by clique growth."""
    level = [((i,), r) for i, r in enumerate(regions) if not r.is_empty()]
    while level:
        yield from level
        nxt = []
        for idx, inter in level:
            for j in range(idx[-1] + 1, len(regions)):
                x = inter.intersection(regions[j])
                if not x.is_empty():
                    nxt.append((idx + (j,), x))
        level = nxt


def verify_good_cover(c: Cover) -> list[str]:
    problems = []
    for idx, inter in _intersections(c.regions):
        b = betti(inter)
        if b != (1, 0):
            problems.append(f"intersection {idx} has betti {b}")
    return problems


def _distance_between(g: MetricGraph, A: Region, B: Region) -> float:
    """Distance between two disjoint open regions, attained at closure points."""
    if A.is_empty() or B.is_empty():
        return INF
    pa = A.boundary_points() or []
    pb = B.boundary_points() or []
    if not pa or not pb:
        return INF
    return min(graph_distance(g, p, q) for p in pa for q in pb)


def _min_spread(g: MetricGraph, pts: Sequence[GraphPoint]) -> float:
    return min((graph_distance(g, p, q) for p, q in combinations(pts, 2)), default=INF)


def refine_step(good: Cover, W: Region) -> Cover:
    g = good.graph
    if betti(W) != (1, 0):
        raise RefinementError("W is not contractible")
    union = good.union()
    if W.is_subset(union):
        raise RefinementError("W already covered")
    V = W.intersection(union)
    if V.is_empty():
        return Cover(g, tuple(good.regions) + tuple(W.components()))
    Vparts = V.components()
    for part in Vparts:
        if betti(part)[1] != 0:
            raise RefinementError("V component not acyclic")
    dV = V.boundary_points()
    C = [p for p in dV if W.contains(p)]
    Bs = [[p for p in dV if U.contains(p)] for U in good.regions]
    W_rest = W.minus_closure(V)
    U_rest = [U.minus_closure(V) for U in good.regions]
    # Both rests avoid cl V, so they can only touch at a vertex inside V.  The
    # balls are clipped to W and U_i, which keeps the new sets disjoint
    # without the cross bound; it is still used as a cap when positive.
    cross = _distance_between(g, W_rest, union_all(g, U_rest))
    if cross <= 0:
        cross = INF
    pts = list(dict.fromkeys(C + [p for B in Bs for p in B]))
    delta = _min_spread(g, pts)
    if len(pts) < 2 or math.isinf(delta):
        delta = cross / 2
    delta = min(delta, cross)
    if math.isinf(delta):
        delta = 0.5 * min(e.length for e in g.edges if not e.is_open) if any(not e.is_open for e in g.edges) else 1.0
    r = delta / 3
    W_new = union_all(g, [W_rest] + [ball(g, x, r).intersection(W) for x in C])
    U_new = [union_all(g, [rest] + [ball(g, x, r).intersection(U) for x in B]) for rest, U, B in zip(U_rest, good.regions, Bs)]
    pieces = list(Vparts) + W_new.components()
    for U in U_new:
        pieces.extend(U.components())
    return Cover(g, tuple(p for p in pieces if not p.is_empty()))


def refine_all(regions: Sequence[Region]) -> Cover:
    if not regions:
        raise ValueError("no regions")
    g = regions[0].graph
    for r in regions:
        if betti(r) != (1, 0):
            raise RefinementError("input region not contractible")
    cover = Cover(g, (regions[0],))
    for i, W in enumerate(regions[1:], start=1):
        if W.is_subset(cover.union()):
            log.info("region %d fully covered; skipped", i)
            continue
        cover = refine_step(cover, W)
    return cover


# ---------------------------------------------------------------------------
# nerve


@dataclass(frozen=True)
class NerveComplex:
    size: int
    simplices: tuple[tuple[int, ...], ...]

    def of_dim(self, d: int) -> list[tuple[int, ...]]:
        return [s for s in self.simplices if len(s) == d + 1]

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)


def nerve(c: Cover) -> NerveComplex:
    simplices = tuple(idx for idx, _ in _intersections(c.regions))
    return NerveComplex(len(c.regions), simplices)


def _boundary_rank(rows: list[tuple], cols: list[tuple]) -> int:
    if not rows or not cols:
        return 0
    index = {s: i for i, s in enumerate(rows)}
    M = [[0] * len(cols) for _ in rows]
    for j, s in enumerate(cols):
        for k in range(len(s)):
            face = s[:k] + s[k + 1:]
            M[index[face]][j] = (-1) ** k
    return DomainMatrix([[QQ(x) for x in row] for row in M], (len(rows), len(cols)), QQ).rank()


def simplicial_betti(n: NerveComplex) -> tuple[int, int]:
    v, e, t = n.of_dim(0), n.of_dim(1), n.of_dim(2)
    r1 = _boundary_rank(v, e)
    r2 = _boundary_rank(e, t)
    return len(v) - r1, len(e) - r1 - r2
