"""Edge endomorphisms and lengths from one nonzero global solution.

Observations are the amplitudes arriving at each sensed vertex along each
incident half-edge.  The Kirchhoff coding turns the arrivals at a vertex into
the amplitudes leaving it, and an edge endomorphism is then the ratio of what
arrives at one end to what left the other.  Edges are visited in
spanning-tree order first (each new tree edge is un-collapsed against the
vertices already reached) and the remaining edges, which all become loops of
the collapsed bouquet, afterwards.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping


from .config import TOL
from .graph import Edge, MetricGraph, spanning_tree
from .helmholtz import Wavenumber, WaveField


class GeometryError(RuntimeError):
    pass


HalfEdge = tuple  # (edge id, end)


@dataclass(frozen=True)
class SectionObservation:
    """``values[(vertex, (edge id, end))]`` is the amplitude arriving at ``vertex``."""

    values: Mapping[tuple, complex]

    def norm(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    def scaled(self, c: complex) -> "SectionObservation":
        return SectionObservation({k: c * v for k, v in self.values.items()})

    @classmethod
    def from_field(cls, f: WaveField) -> "SectionObservation":
        g = f.graph
        k = f.k
        out = {}
        for e in g.edges:
            ps = f.pieces[e.id]
            first, last = ps[0], ps[-1]
            back = first.B if math.isinf(first.stop) else first.B * cmath.exp(1j * k * first.length)
            out[(e.tail, (e.id, 0))] = complex(back)
            if e.is_open:
                continue
            out[(e.head, (e.id, 1))] = complex(last.A * cmath.exp(1j * k * last.length))
        return cls(out)

    @classmethod
    def from_section(cls, sheaf, result, column) -> "SectionObservation":
        from .sheaf import arriving_amplitudes

        return cls(arriving_amplitudes(sheaf, result, column))


@dataclass(frozen=True)
class ResidueClass:
    base: float
    modulus: float

    def contains(self, x: float, tol: float = 1e-6) -> bool:
        r = (x - self.base) % self.modulus
        return min(r, self.modulus - r) <= tol * max(1.0, abs(x))


@dataclass(frozen=True)
class RecoveredGeometry:
    endomorphisms: Mapping[str, complex]
    lengths: Mapping[str, float | ResidueClass]
    chains: Mapping[str, tuple[str, ...]]  # reduced edge -> original edges it merges
    diagnostics: tuple[str, ...] = ()
    reduced: MetricGraph | None = field(default=None, repr=False, compare=False)


# ---------------------------------------------------------------------------
# degree-2 elimination


def merge_degree_two(g: MetricGraph) -> tuple[MetricGraph, dict, dict]:
    """Merge edge pairs through degree-2 vertices.

    Returns the reduced graph, a map from reduced edge id to the original edge
    ids it covers, and a map from reduced half-edges to original half-edges.
    """
    chains = {e.id: (e.id,) for e in g.edges}
    ends = {e.id: [(e.tail, (e.id, 0))] + ([] if e.is_open else [(e.head, (e.id, 1))]) for e in g.edges}
    lengths = {e.id: e.length for e in g.edges}
    vertices = list(g.vertices)

    def incident(v):
        return [(eid, i) for eid, es in ends.items() for i, (w, _) in enumerate(es) if w == v]

    changed = True
    while changed:
        changed = False
        for v in vertices:
            inc = incident(v)
            if len(inc) != 2 or inc[0][0] == inc[1][0]:
                continue
            (e1, i1), (e2, i2) = inc
            if len(ends[e1]) == 1 and len(ends[e2]) == 1:
                continue
            # orient the merged edge from e1's far end through v to e2's far end
            far1 = ends[e1][1 - i1] if len(ends[e1]) == 2 else None
            far2 = ends[e2][1 - i2] if len(ends[e2]) == 2 else None
            if far1 is None:
                (e1, i1, far1), (e2, i2, far2) = (e2, i2, far2), (e1, i1, far1)
            new_id = f"{e1}+{e2}"
            ends[new_id] = [far1] + ([] if far2 is None else [far2])
            chains[new_id] = chains[e1] + chains[e2]
            lengths[new_id] = lengths[e1] + lengths[e2]
            for x in (e1, e2):
                del ends[x], chains[x], lengths[x]
            vertices.remove(v)
            changed = True
            break
    edges = []
    half_map = {}
    for eid, es in ends.items():
        eps = tuple(w for w, _ in es)
        kind = "open" if len(eps) == 1 else ("loop" if eps[0] == eps[1] else "segment")
        edges.append((eid, eps, lengths[eid], kind))
        for i, (w, h) in enumerate(es):
            half_map[(eid, i)] = h
    degree = {v: 0 for v in vertices}
    for _, eps, _, _ in edges:
        for w in eps:
            degree[w] += 1
    fixed = [(eid, eps, L, "closed" if kind == "segment" and min(degree[eps[0]], degree[eps[1]]) == 1 else kind) for eid, eps, L, kind in edges]
    return MetricGraph.build(vertices, fixed), chains, half_map


# ---------------------------------------------------------------------------
# extraction


def _outgoing(g: MetricGraph, arrivals: Mapping, v: Hashable, h: HalfEdge) -> complex:
    halves = g.half_edges(v)
    n = len(halves)
    total = sum(arrivals[(v, hh)] for hh in halves)
    return 2.0 / n * total - arrivals[(v, h)]


def _edge_ratio(g: MetricGraph, arrivals: Mapping, e: Edge, pivot: float) -> tuple[complex, list[str]]:
    a, b = e.endpoints
    out_tail = _outgoing(g, arrivals, a, (e.id, 0))
    out_head = _outgoing(g, arrivals, b, (e.id, 1))
    notes = []
    candidates = []
    if abs(out_tail) > pivot:
        candidates.append((abs(out_tail), arrivals[(b, (e.id, 1))] / out_tail))
    if abs(out_head) > pivot:
        candidates.append((abs(out_head), arrivals[(a, (e.id, 0))] / out_head))
    if not candidates:
        raise GeometryError(f"vanishing pivot on edge {e.id}")
    candidates.sort(key=lambda c: -c[0])
    E = candidates[0][1]
    if len(candidates) == 2 and abs(candidates[1][1] - E) > 1e-6 * max(1.0, abs(E)):
        notes.append(f"edge {e.id}: directions disagree by {abs(candidates[1][1] - E):.3g}")
    return E, notes


def _length_from(E: complex, k: Wavenumber) -> float | ResidueClass:
    if k.alpha > 0:
        mag = abs(E)
        if mag <= 0:
            raise GeometryError("zero endomorphism")
        return -math.log(mag) / k.alpha
    modulus = 2 * math.pi / k.kprime
    return ResidueClass((cmath.phase(E) / k.kprime) % modulus, modulus)


def extract_geometry(g: MetricGraph, obs: SectionObservation, k: Wavenumber) -> RecoveredGeometry:
    scale = obs.norm()
    if scale == 0:
        raise GeometryError("zero section")
    reduced, chains, half_map = merge_degree_two(g)
    arrivals = {}
    for v in reduced.vertices:
        for h in reduced.half_edges(v):
            key = (v, half_map[h])
            if key not in obs.values:
                raise GeometryError(f"missing observation at vertex {v!r} for edge end {half_map[h]}")
            arrivals[(v, h)] = obs.values[key] / scale
    order = spanning_tree(reduced)
    rest = [e.id for e in reduced.edges if not e.is_open and e.id not in order]
    ends, lengths, notes = {}, {}, []
    for eid in order + rest:
        E, extra = _edge_ratio(reduced, arrivals, reduced.edge(eid), TOL.pivot)
        notes.extend(extra)
        ends[eid] = complex(E)
        lengths[eid] = _length_from(E, k)
    return RecoveredGeometry(ends, lengths, {e: chains[e] for e in ends}, tuple(notes), reduced)


def verify_section_consistency(g: MetricGraph, obs: SectionObservation, geom: RecoveredGeometry, k: Wavenumber | None = None) -> float:
    """Largest mismatch between observed arrivals and those predicted by the codings."""
    reduced = geom.reduced if geom.reduced is not None else merge_degree_two(g)[0]
    _, _, half_map = merge_degree_two(g)
    arrivals = {}
    for v in reduced.vertices:
        for h in reduced.half_edges(v):
            arrivals[(v, h)] = obs.values.get((v, half_map[h]), 0j)
    worst = 0.0
    for e in reduced.edges:
        if e.is_open or e.id not in geom.endomorphisms:
            continue
        E = geom.endomorphisms[e.id]
        a, b = e.endpoints
        worst = max(worst, abs(arrivals[(b, (e.id, 1))] - E * _outgoing(reduced, arrivals, a, (e.id, 0))))
        worst = max(worst, abs(arrivals[(a, (e.id, 0))] - E * _outgoing(reduced, arrivals, b, (e.id, 1))))
    return worst


def true_endomorphisms(g: MetricGraph, k: Wavenumber, geom: RecoveredGeometry) -> dict:
    """Forward-model endomorphisms of the reduced edges, for comparison."""
    return {eid: cmath.exp(1j * k.k * sum(g.edge(x).length for x in chain)) for eid, chain in geom.chains.items()}
