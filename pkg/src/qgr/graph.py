"""Finite metric graphs, points and open regions on them.

Edges carry a fixed orientation: offsets run from ``endpoints[0]`` (offset 0)
to ``endpoints[1]`` (offset ``length``).  Open edges have a single endpoint at
offset 0 and extend to infinity.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .config import TOL

INF = math.inf
KINDS = ("segment", "loop", "closed", "open")


class GraphError(ValueError):
    """Raised for invalid graphs or unsupported combinatorial operations."""


@dataclass(frozen=True)
class Edge:
    id: str
    endpoints: tuple
    length: float
    kind: str

    @property
    def tail(self) -> Hashable:
        return self.endpoints[0]

    @property
    def head(self) -> Hashable | None:
        return self.endpoints[1] if len(self.endpoints) == 2 else None

    @property
    def is_open(self) -> bool:
        return self.kind == "open"

    @property
    def is_loop(self) -> bool:
        return self.kind == "loop"


@dataclass(frozen=True)
class GraphPoint:
    """A location on a metric graph.

    Points are either interior edge points ``(edge, offset)`` or vertices.  Use
    :meth:`MetricGraph.point` to build canonical instances.
    """

    edge: str | None = None
    offset: float = 0.0
    vertex: Hashable | None = None

    @classmethod
    def at_vertex(cls, v: Hashable) -> "GraphPoint":
        return cls(edge=None, offset=0.0, vertex=v)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None


class MetricGraph:
    """Immutable finite metric graph with typed edges."""

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Edge], *, check: bool = True):
        self.vertices: tuple = tuple(dict.fromkeys(vertices))
        self.edges: tuple[Edge, ...] = tuple(edges)
        self._edge_index = {e.id: e for e in self.edges}
        self._halves: dict = {v: [] for v in self.vertices}
        for e in self.edges:
            for end, v in enumerate(e.endpoints):
                if v in self._halves:
                    self._halves[v].append((e.id, end))
        if check:
            problems = validate(self)
            if problems:
                raise GraphError("; ".join(problems))

    # construction helpers -------------------------------------------------
    @classmethod
    def build(cls, vertices: Iterable[Hashable], edges: Iterable[Sequence], *, check: bool = True) -> "MetricGraph":
        """Build from ``(id, endpoints, length)`` or ``(id, endpoints, length, kind)`` tuples.

        Missing kinds are inferred from the endpoint structure.
        """
        vertices = list(vertices)
        raw = [tuple(r) for r in edges]
        degree: dict = defaultdict(int)
        for r in raw:
            for v in r[1]:
                degree[v] += 1
        out = []
        for r in raw:
            eid, ends, length = r[0], tuple(r[1]), float(r[2])
            kind = r[3] if len(r) > 3 else infer_kind(ends, degree)
            out.append(Edge(str(eid), ends, length, kind))
        return cls(vertices, out, check=check)

    # queries ---------------------------------------------------------------
    def edge(self, eid: str) -> Edge:
        return self._edge_index[eid]

    def has_edge(self, eid: str) -> bool:
        return eid in self._edge_index

    def half_edges(self, v: Hashable) -> list[tuple[str, int]]:
        """Incident half-edges ``(edge id, end)``; a loop contributes both ends."""
        return list(self._halves[v])

    def degree(self, v: Hashable) -> int:
        return len(self._halves[v])

    def end_vertex(self, eid: str, end: int) -> Hashable | None:
        e = self.edge(eid)
        return e.endpoints[end] if end < len(e.endpoints) else None

    def point(self, eid: str, offset: float) -> GraphPoint:
        """Canonical point: offsets at an edge end collapse onto the vertex."""
        e = self.edge(eid)
        tol = TOL.merge
        if offset < -tol or (not e.is_open and offset > e.length + tol):
            raise GraphError(f"offset {offset} outside edge {eid}")
        if offset <= tol:
            return GraphPoint.at_vertex(e.tail)
        if not e.is_open and offset >= e.length - tol:
            return GraphPoint.at_vertex(e.head)
        return GraphPoint(edge=eid, offset=float(offset))

    def counts(self) -> dict[str, int]:
        c = {k: 0 for k in KINDS}
        for e in self.edges:
            c[e.kind] += 1
        return c

    def __repr__(self) -> str:
        return f"MetricGraph(V={len(self.vertices)}, E={len(self.edges)}, kinds={self.counts()})"

    # serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "v": list(e.endpoints), "length": "inf" if math.isinf(e.length) else e.length, "kind": e.kind}
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping | str) -> "MetricGraph":
        if isinstance(data, str):
            data = json.loads(data)
        edges = []
        for item in data["edges"]:
            length = INF if item["length"] == "inf" else float(item["length"])
            row = (item["id"], tuple(item["v"]), length)
            if "kind" in item:
                row = row + (item["kind"],)
            edges.append(row)
        return cls.build(data["vertices"], edges)


def infer_kind(ends: tuple, degree: Mapping) -> str:
    if len(ends) == 1:
        return "open"
    if ends[0] == ends[1]:
        return "loop"
    if degree.get(ends[0], 0) == 1 or degree.get(ends[1], 0) == 1:
        return "closed"
    return "segment"


def validate(g: MetricGraph) -> list[str]:
    """Return a list of invariant violations; empty means valid."""
    problems: list[str] = []
    if not g.edges:
        problems.append("graph has no edges")
    vset = set(g.vertices)
    seen = set()
    for e in g.edges:
        if e.id in seen:
            problems.append(f"duplicate edge id {e.id}")
        seen.add(e.id)
        if e.kind not in KINDS:
            problems.append(f"edge {e.id}: unknown kind {e.kind!r}")
            continue
        for v in e.endpoints:
            if v not in vset:
                problems.append(f"edge {e.id}: unknown vertex {v!r}")
        if e.kind == "open":
            if len(e.endpoints) != 1:
                problems.append(f"edge {e.id}: open edge endpoint count {len(e.endpoints)}")
            if not math.isinf(e.length):
                problems.append(f"edge {e.id}: open edge must have infinite length")
            continue
        if not (e.length > 0):
            problems.append(f"edge {e.id}: nonpositive length")
        elif math.isinf(e.length):
            problems.append(f"edge {e.id}: infinite length on a non-open edge")
        if len(e.endpoints) != 2:
            problems.append(f"edge {e.id}: {e.kind} edge endpoint count {len(e.endpoints)}")
            continue
        a, b = e.endpoints
        if e.kind == "loop" and a != b:
            problems.append(f"edge {e.id}: loop with distinct endpoints")
        if e.kind in ("segment", "closed") and a == b:
            problems.append(f"edge {e.id}: {e.kind} edge with equal endpoints")
    if problems:
        return problems
    for v in g.vertices:
        if g.degree(v) == 0:
            problems.append(f"isolated vertex {v!r}")
    for e in g.edges:
        if e.kind == "closed" and not (g.degree(e.endpoints[0]) == 1 or g.degree(e.endpoints[1]) == 1):
            problems.append(f"edge {e.id}: closed edge without a degree-1 endpoint")
        if e.kind == "segment" and (g.degree(e.endpoints[0]) == 1 or g.degree(e.endpoints[1]) == 1):
            problems.append(f"edge {e.id}: segment with a degree-1 endpoint should be closed")
    return problems


# ---------------------------------------------------------------------------
# combinatorics


def _components(vertices: Iterable[Hashable], links: Iterable[tuple]) -> list[set]:
    h = nx.Graph()
    h.add_nodes_from(vertices)
    h.add_edges_from(links)
    return [set(c) for c in nx.connected_components(h)]


def betti(obj: "MetricGraph | Region") -> tuple[int, int]:
    """Betti numbers ``(b0, b1)`` of a graph or an open region."""
    if isinstance(obj, Region):
        nodes, links = obj._piece_graph()
        b0 = len(_components(nodes, [(a, b) for a, b, _ in links]))
        return b0, len(links) - len(nodes) + b0
    finite = [e for e in obj.edges if not e.is_open]
    b0 = len(_components(obj.vertices, [(e.tail, e.head) for e in finite]))
    return b0, len(finite) - len(obj.vertices) + b0


def is_connected(g: MetricGraph) -> bool:
    return betti(g)[0] == 1


def spanning_tree(g: MetricGraph, *, exclude_closed: bool = False, root: Hashable | None = None) -> list[str]:
    """Edge ids of a spanning tree in breadth-first order.

    Every prefix of the returned list is a tree.  Loops and open edges never
    belong to a tree.  With ``exclude_closed`` the tree spans only the
    vertices of degree > 1 (closed edges stay outside the tree).
    """
    if not is_connected(g):
        raise GraphError("disconnected graph")
    usable = [e for e in g.edges if e.kind == "segment" or (e.kind == "closed" and not exclude_closed)]
    verts = {v for e in usable for v in e.endpoints}
    if exclude_closed:
        verts |= {v for v in g.vertices if g.degree(v) > 1}
    if not verts:
        return []
    adj: dict = defaultdict(list)
    for e in usable:
        adj[e.tail].append((e.id, e.head))
        adj[e.head].append((e.id, e.tail))
    start = root if root is not None else next(v for v in g.vertices if v in verts)
    seen = {start}
    order: list[str] = []
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for eid, w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    order.append(eid)
                    nxt.append(w)
        frontier = nxt
    return order


@dataclass(frozen=True)
class EdgeCollapseMap:
    source: MetricGraph
    target: MetricGraph
    edge: str
    relabel: dict


def collapse_edge(g: MetricGraph, eid: str) -> tuple[MetricGraph, EdgeCollapseMap]:
    """Collapse one edge to a vertex.

    For an edge with distinct endpoints the head is merged into the tail and
    keeps the tail's id.  Collapsing a loop simply removes it.  Edge kinds are
    re-inferred afterwards, so parallel edges become loops.
    """
    e = g.edge(eid)
    if e.is_open:
        raise GraphError("cannot collapse open edge")
    if e.is_loop:
        relabel = {v: v for v in g.vertices}
        kept_vertices = list(g.vertices)
        moved = [x for x in g.edges if x.id != eid]
    else:
        keep, drop = e.tail, e.head
        relabel = {v: (keep if v == drop else v) for v in g.vertices}
        kept_vertices = [v for v in g.vertices if v != drop]
        moved = [Edge(x.id, tuple(relabel[v] for v in x.endpoints), x.length, x.kind) for x in g.edges if x.id != eid]
    degree: dict = defaultdict(int)
    for x in moved:
        for v in x.endpoints:
            degree[v] += 1
    rebuilt = [Edge(x.id, x.endpoints, x.length, infer_kind(x.endpoints, degree)) for x in moved]
    target = MetricGraph(kept_vertices, rebuilt)
    return target, EdgeCollapseMap(g, target, eid, relabel)


# ---------------------------------------------------------------------------
# distances


def _vertex_distances(g: MetricGraph, p: GraphPoint) -> dict:
    h = nx.Graph()
    h.add_nodes_from(g.vertices)
    for e in g.edges:
        if e.is_open or e.is_loop:
            continue
        w = h.get_edge_data(e.tail, e.head, {}).get("weight", INF)
        h.add_edge(e.tail, e.head, weight=min(w, e.length))
    src = ("__point__",)
    if p.is_vertex:
        h.add_edge(src, p.vertex, weight=0.0)
    else:
        e = g.edge(p.edge)
        h.add_edge(src, e.tail, weight=p.offset)
        if not e.is_open:
            if e.is_loop:
                h[src][e.tail]["weight"] = min(p.offset, e.length - p.offset)
            else:
                h.add_edge(src, e.head, weight=e.length - p.offset)
    dist = nx.single_source_dijkstra_path_length(h, src)
    dist.pop(src, None)
    return dist


def _offset_candidates(g: MetricGraph, q: GraphPoint) -> list[tuple[Hashable, float]]:
    if q.is_vertex:
        return [(q.vertex, 0.0)]
    e = g.edge(q.edge)
    out = [(e.tail, q.offset)]
    if not e.is_open:
        out.append((e.head, e.length - q.offset))
    return out


def graph_distance(g: MetricGraph, p: GraphPoint, q: GraphPoint) -> float:
    """Shortest-path length; ``inf`` for points in different components."""
    if p == q:
        return 0.0
    dist = _vertex_distances(g, p)
    best = min((dist.get(v, INF) + off for v, off in _offset_candidates(g, q)), default=INF)
    if not p.is_vertex and not q.is_vertex and p.edge == q.edge:
        best = min(best, abs(p.offset - q.offset))
    return best


# ---------------------------------------------------------------------------
# regions


Interval = tuple[float, float]


def _merge(intervals: Iterable[Interval], tol: float) -> tuple[Interval, ...]:
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if b - a <= tol:
            continue
        # open intervals that merely touch leave their common endpoint uncovered
        if out and a < out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class Region:
    """Open subset of a metric graph.

    ``intervals`` maps edge ids to sorted disjoint open intervals of offsets;
    an interval touching an edge end contains that end exactly when the
    corresponding vertex is listed in ``vertices``.
    """

    graph: MetricGraph = field(compare=False, repr=False)
    intervals: Mapping[str, tuple[Interval, ...]]
    vertices: frozenset = frozenset()

    def __post_init__(self):
        tol = TOL.merge
        clean = {}
        for eid, ivs in self.intervals.items():
            e = self.graph.edge(eid)
            hi = e.length
            ivs = [(max(0.0, float(a)), min(hi, float(b))) for a, b in ivs]
            merged = _merge(ivs, tol)
            if merged:
                clean[eid] = merged
        object.__setattr__(self, "intervals", dict(sorted(clean.items())))
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        for v in self.vertices:
            for eid, end in self.graph.half_edges(v):
                if not self._abuts(eid, end):
                    raise GraphError(f"vertex {v!r} flagged but edge {eid} has no abutting interval")

    # constructors ------------------------------------------------------------
    @classmethod
    def empty(cls, g: MetricGraph) -> "Region":
        return cls(g, {})

    @classmethod
    def from_intervals(cls, g: MetricGraph, intervals: Mapping[str, Iterable[Interval]], vertices="infer") -> "Region":
        """With ``vertices="infer"`` a vertex joins when every incident half-edge abuts it."""
        if vertices != "infer":
            return cls(g, {k: tuple(v) for k, v in intervals.items()}, frozenset(vertices))
        probe = cls(g, {k: tuple(v) for k, v in intervals.items()})
        members = [v for v in g.vertices if all(probe._abuts(eid, end) for eid, end in g.half_edges(v))]
        return cls(g, probe.intervals, frozenset(members))

    @classmethod
    def whole(cls, g: MetricGraph, open_truncation: float = INF) -> "Region":
        ivs = {e.id: ((0.0, open_truncation if e.is_open else e.length),) for e in g.edges}
        return cls(g, ivs, frozenset(g.vertices))

    # predicates --------------------------------------------------------------
    def _abuts(self, eid: str, end: int) -> bool:
        ivs = self.intervals.get(eid, ())
        if not ivs:
            return False
        tol = TOL.merge
        if end == 0:
            return ivs[0][0] <= tol
        return ivs[-1][1] >= self.graph.edge(eid).length - tol

    def is_empty(self) -> bool:
        return not self.intervals and not self.vertices

    def contains(self, p: GraphPoint) -> bool:
        if p.is_vertex:
            return p.vertex in self.vertices
        return any(a < p.offset < b for a, b in self.intervals.get(p.edge, ()))

    def in_closure(self, p: GraphPoint) -> bool:
        if p.is_vertex:
            return p.vertex in self.vertices or any(self._abuts(eid, end) for eid, end in self.graph.half_edges(p.vertex))
        return any(a <= p.offset <= b for a, b in self.intervals.get(p.edge, ()))

    def length(self) -> float:
        return sum(b - a for ivs in self.intervals.values() for a, b in ivs)

    # set algebra -------------------------------------------------------------
    def union(self, other: "Region") -> "Region":
        ivs = {k: list(v) for k, v in self.intervals.items()}
        for k, v in other.intervals.items():
            ivs.setdefault(k, []).extend(v)
        return Region(self.graph, {k: tuple(v) for k, v in ivs.items()}, self.vertices | other.vertices)

    def intersection(self, other: "Region") -> "Region":
        ivs = {}
        for k in self.intervals.keys() & other.intervals.keys():
            out = []
            for a, b in self.intervals[k]:
                for c, d in other.intervals[k]:
                    lo, hi = max(a, c), min(b, d)
                    if hi > lo:
                        out.append((lo, hi))
            ivs[k] = tuple(out)
        return Region(self.graph, ivs, self.vertices & other.vertices)

    def minus_closure(self, other: "Region") -> "Region":
        """``self - closure(other)``, which is again open."""
        ivs = {}
        for k, mine in self.intervals.items():
            cuts = other.intervals.get(k, ())
            out = []
            for a, b in mine:
                pieces = [(a, b)]
                for c, d in cuts:
                    nxt = []
                    for x, y in pieces:
                        if d <= x or c >= y:
                            nxt.append((x, y))
                            continue
                        if c > x:
                            nxt.append((x, c))
                        if d < y:
                            nxt.append((d, y))
                    pieces = nxt
                out.extend(pieces)
            ivs[k] = tuple(out)
        # open intervals already exclude their endpoints; dropping the vertex flag suffices
        closed_vertices = {v for v in self.graph.vertices if other.in_closure(GraphPoint.at_vertex(v))}
        return Region(self.graph, ivs, self.vertices - closed_vertices)

    def is_subset(self, other: "Region") -> bool:
        if not self.minus_closure(other).is_empty():
            return False
        return not any(self.contains(p) for p in other.boundary_points())

    def uncovered(self, cover: "Region") -> list[tuple[str, float, float]]:
        """Pieces of ``self`` outside ``cover`` as ``(edge, lo, hi)``; boundary points as zero-width pieces."""
        gaps = [(k, a, b) for k, ivs in self.minus_closure(cover).intervals.items() for a, b in ivs]
        for p in cover.boundary_points():
            if self.contains(p):
                if p.is_vertex:
                    gaps.append((f"vertex:{p.vertex}", 0.0, 0.0))
                else:
                    gaps.append((p.edge, p.offset, p.offset))
        return gaps

    # topology ----------------------------------------------------------------
    def _piece_graph(self) -> tuple[list, list]:
        nodes: list = [("v", v) for v in sorted(self.vertices, key=repr)]
        links: list = []
        tol = TOL.merge
        for k, ivs in self.intervals.items():
            e = self.graph.edge(k)
            for i, (a, b) in enumerate(ivs):
                node = ("i", k, i)
                nodes.append(node)
                if a <= tol and e.tail in self.vertices:
                    links.append((node, ("v", e.tail), 0))
                if not e.is_open and b >= e.length - tol and e.head in self.vertices:
                    links.append((node, ("v", e.head), 1))
        return nodes, links

    def components(self) -> list["Region"]:
        nodes, links = self._piece_graph()
        comps = _components(nodes, [(a, b) for a, b, _ in links])
        out = []
        for comp in sorted(comps, key=lambda c: sorted(map(repr, c))):
            ivs: dict = defaultdict(list)
            verts = set()
            for node in comp:
                if node[0] == "v":
                    verts.add(node[1])
                else:
                    ivs[node[1]].append(self.intervals[node[1]][node[2]])
            out.append(Region(self.graph, {k: tuple(v) for k, v in ivs.items()}, frozenset(verts)))
        return out

    def boundary_points(self) -> list[GraphPoint]:
        pts: dict = {}
        tol = TOL.merge
        for k, ivs in self.intervals.items():
            e = self.graph.edge(k)
            for a, b in ivs:
                for x in (a, b):
                    if math.isinf(x):
                        continue
                    if x <= tol:
                        p = GraphPoint.at_vertex(e.tail)
                    elif not e.is_open and x >= e.length - tol:
                        p = GraphPoint.at_vertex(e.head)
                    else:
                        p = GraphPoint(edge=k, offset=x)
                    if not self.contains(p):
                        pts[p] = None
        return list(pts)

    def to_json(self) -> dict:
        return {"intervals": {k: [list(iv) for iv in v] for k, v in self.intervals.items()}, "vertices": sorted(self.vertices, key=repr)}


def union_all(g: MetricGraph, regions: Iterable[Region]) -> Region:
    out = Region.empty(g)
    for r in regions:
        out = out.union(r)
    return out


def components(region: Region) -> list[Region]:
    return region.components()


def boundary_points(region: Region) -> list[GraphPoint]:
    return region.boundary_points()


def ball(g: MetricGraph, p: GraphPoint, r: float) -> Region:
    """Open ball ``{x : d(p, x) < r}``."""
    dist = _vertex_distances(g, p)
    ivs: dict = defaultdict(list)
    for e in g.edges:
        dt = dist.get(e.tail, INF)
        if dt < r:
            ivs[e.id].append((0.0, min(r - dt, e.length)))
        if not e.is_open:
            dh = dist.get(e.head, INF)
            if dh < r:
                ivs[e.id].append((max(0.0, e.length - (r - dh)), e.length))
        if not p.is_vertex and p.edge == e.id:
            ivs[e.id].append((max(0.0, p.offset - r), min(e.length, p.offset + r)))
    verts = frozenset(v for v, d in dist.items() if d < r and v in g._halves)
    return Region(g, {k: tuple(v) for k, v in ivs.items()}, verts)
