"""Flow sheaves on directed graphs and the directed edge collapse.

A vertex stalk holds one value per incoming edge.  Restricting to an incoming
edge is a coordinate projection; restricting to an outgoing edge applies the
vertex coding matrix followed by that edge's endomorphism.  Edges may have a
missing tail (a source from infinity) or a missing head (a sink).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .sheaf import SheafError, TransmissionLineSheaf, numerical_rank


@dataclass(frozen=True)
class DirectedEdge:
    id: str
    tail: Hashable | None
    head: Hashable | None


@dataclass(frozen=True)
class FlowSheaf:
    vertices: tuple
    edges: tuple[DirectedEdge, ...]
    inputs: Mapping  # vertex -> ordered incoming edge ids
    outputs: Mapping  # vertex -> ordered outgoing edge ids
    codings: Mapping  # vertex -> complex matrix, shape (len(outputs), len(inputs))
    endomorphisms: Mapping  # edge id -> complex scalar

    def __post_init__(self):
        for v in self.vertices:
            C = np.asarray(self.codings[v], dtype=complex)
            if C.shape != (len(self.outputs[v]), len(self.inputs[v])):
                raise SheafError(f"vertex {v!r}: coding shape {C.shape} does not match degrees")
        for e in self.edges:
            if e.head is not None and e.id not in self.inputs[e.head]:
                raise SheafError(f"edge {e.id} missing from inputs of {e.head!r}")
            if e.tail is not None and e.id not in self.outputs[e.tail]:
                raise SheafError(f"edge {e.id} missing from outputs of {e.tail!r}")

    def edge(self, eid: str) -> DirectedEdge:
        return next(e for e in self.edges if e.id == eid)

    def stalk_rank(self, v) -> int:
        return len(self.inputs[v])

    @classmethod
    def build(cls, edges: Sequence[tuple], codings: Mapping, endomorphisms: Mapping | None = None) -> "FlowSheaf":
        """Edges as ``(id, tail, head)``; port order follows edge order."""
        dedges = tuple(DirectedEdge(str(i), t, h) for i, t, h in edges)
        verts = tuple(dict.fromkeys(v for e in dedges for v in (e.tail, e.head) if v is not None))
        inputs = {v: [e.id for e in dedges if e.head == v] for v in verts}
        outputs = {v: [e.id for e in dedges if e.tail == v] for v in verts}
        ends = {e.id: 1.0 + 0j for e in dedges}
        ends.update(endomorphisms or {})
        return cls(verts, dedges, {v: tuple(x) for v, x in inputs.items()}, {v: tuple(x) for v, x in outputs.items()},
                   {v: np.asarray(codings[v], dtype=complex) for v in verts}, ends)

    @classmethod
    def random(cls, edges: Sequence[tuple], rng: np.random.Generator) -> "FlowSheaf":
        probe = cls.build(edges, _zeros_for(edges))
        codings = {v: rng.normal(size=(len(probe.outputs[v]), len(probe.inputs[v])))
                   + 1j * rng.normal(size=(len(probe.outputs[v]), len(probe.inputs[v]))) for v in probe.vertices}
        ends = {e.id: complex(np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.5, 1.5)) for e in probe.edges}
        return cls.build(edges, codings, ends)


def _zeros_for(edges):
    vs = {v for _, t, h in edges for v in (t, h) if v is not None}
    deg_in = {v: sum(1 for _, _, h in edges if h == v) for v in vs}
    deg_out = {v: sum(1 for _, t, _ in edges if t == v) for v in vs}
    return {v: np.zeros((deg_out[v], deg_in[v])) for v in vs}


def from_transmission_line(s: TransmissionLineSheaf) -> FlowSheaf:
    """The doubled directed graph carrying the Kirchhoff coding.

    Half-edge ``(e, end)`` at ``v`` yields incoming edge ``e:in<end>`` (arriving
    at ``v`` through that end) and outgoing edge ``e:out<end>``.  Endomorphisms
    are folded into the codings, so the directed edges carry the identity.
    """
    g = s.graph
    edges = []
    for e in g.edges:
        if e.is_open:
            edges.append((f"{e.id}:in0", None, e.tail))
            edges.append((f"{e.id}:out0", e.tail, None))
        else:
            # leaving through end 0 arrives through end 1 and vice versa
            edges.append((f"{e.id}:out0", e.endpoints[0], e.endpoints[1]))
            edges.append((f"{e.id}:out1", e.endpoints[1], e.endpoints[0]))
    arriving = {}
    for e in g.edges:
        if e.is_open:
            arriving[(e.id, 0)] = f"{e.id}:in0"
        else:
            arriving[(e.id, 1)] = f"{e.id}:out0"
            arriving[(e.id, 0)] = f"{e.id}:out1"
    probe = FlowSheaf.build(edges, _zeros_for(edges))
    codings = {}
    for v in probe.vertices:
        halves = g.half_edges(v)
        n = len(halves)
        ins, outs = probe.inputs[v], probe.outputs[v]
        C = np.zeros((len(outs), len(ins)), dtype=complex)
        for h in halves:
            r = outs.index(f"{h[0]}:out{h[1]}")
            for j in halves:
                C[r, ins.index(arriving[j])] += 2.0 / n * complex(s.E(j[0]))
            C[r, ins.index(arriving[h])] -= complex(s.E(h[0]))
        codings[v] = C
    return FlowSheaf(probe.vertices, probe.edges, probe.inputs, probe.outputs, codings, probe.endomorphisms)


def flow_coboundary(F: FlowSheaf) -> np.ndarray:
    cols = {}
    for v in F.vertices:
        for eid in F.inputs[v]:
            cols[(v, eid)] = len(cols)
    for e in F.edges:
        cols[("edge", e.id)] = len(cols)
    rows = []
    for e in F.edges:
        x = cols[("edge", e.id)]
        if e.head is not None:
            r = np.zeros(len(cols), complex)
            r[cols[(e.head, e.id)]] += 1
            r[x] -= 1
            rows.append(r)
        if e.tail is not None:
            r = np.zeros(len(cols), complex)
            C = np.asarray(F.codings[e.tail])
            i = F.outputs[e.tail].index(e.id)
            for j, src in enumerate(F.inputs[e.tail]):
                r[cols[(e.tail, src)]] += F.endomorphisms[e.id] * C[i, j]
            r[x] -= 1
            rows.append(r)
    return np.array(rows).reshape(len(rows), len(cols))


def flow_cohomology(F: FlowSheaf) -> tuple[int, int]:
    M = flow_coboundary(F)
    rank, _ = numerical_rank(M)
    return M.shape[1] - rank, M.shape[0] - rank


def collapse_flow_edge(F: FlowSheaf, eid: str) -> FlowSheaf:
    """Direct image under collapsing a directed edge with distinct endpoints.

    The merged vertex keeps the tail's id.  Its inputs are the tail's inputs
    followed by the head's remaining inputs, and its coding is the block
    matrix ``[[a, 0], [v u^T, b]]``.
    """
    e = F.edge(eid)
    if e.tail is None or e.head is None:
        raise SheafError("cannot collapse an edge with a missing endpoint")
    if e.tail == e.head:
        raise SheafError("loop collapse via flow lemma")
    v1, v2 = e.tail, e.head
    C1, C2 = np.asarray(F.codings[v1]), np.asarray(F.codings[v2])
    in1, out1 = list(F.inputs[v1]), list(F.outputs[v1])
    in2, out2 = list(F.inputs[v2]), list(F.outputs[v2])
    ie, oe = in2.index(eid), out1.index(eid)
    keep_in2 = [x for x in in2 if x != eid]
    keep_out1 = [x for x in out1 if x != eid]
    u = F.endomorphisms[eid] * C1[oe, :]
    a = C1[[out1.index(x) for x in keep_out1], :]
    b = C2[:, [in2.index(x) for x in keep_in2]]
    vcol = C2[:, ie]
    top = np.hstack([a, np.zeros((a.shape[0], b.shape[1]), complex)])
    bottom = np.hstack([np.outer(vcol, u), b])
    merged = np.vstack([top, bottom]).reshape(len(keep_out1) + len(out2), len(in1) + len(keep_in2))

    def move(x):
        return v1 if x == v2 else x

    edges = tuple(DirectedEdge(x.id, move(x.tail), move(x.head)) for x in F.edges if x.id != eid)
    verts = tuple(v for v in F.vertices if v != v2)
    inputs = {v: F.inputs[v] for v in verts}
    outputs = {v: F.outputs[v] for v in verts}
    codings = {v: F.codings[v] for v in verts}
    inputs[v1] = tuple(in1 + keep_in2)
    outputs[v1] = tuple(keep_out1 + out2)
    codings[v1] = merged
    ends = {k: x for k, x in F.endomorphisms.items() if k != eid}
    return FlowSheaf(verts, edges, inputs, outputs, codings, ends)
