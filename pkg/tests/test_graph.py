import json
import math

import pytest
from hypothesis import given, strategies as st

from qgr.graph import (
    INF,
    GraphError,
    GraphPoint,
    MetricGraph,
    Region,
    ball,
    betti,
    collapse_edge,
    graph_distance,
    spanning_tree,
    union_all,
    validate,
)

from conftest import bouquet, circle, interval, line


def test_kinds_are_inferred():
    g = MetricGraph.build([0, 1, 2], [("s", (0, 1), 1.0), ("c", (1, 2), 1.0), ("l", (0, 0), 1.0), ("o", (0,), INF)])
    assert {e.id: e.kind for e in g.edges} == {"s": "segment", "c": "closed", "l": "loop", "o": "open"}
    assert g.degree(0) == 4


@pytest.mark.parametrize(
    "edges, message",
    [
        ([("a", (0, 1), -1.0)], "nonpositive length"),
        ([("a", (0, 1), 0.0)], "nonpositive length"),
        ([("a", (0, 1), 1.0, "open")], "open edge endpoint count 2"),
        ([("a", (0, 7), 1.0)], "unknown vertex"),
    ],
)
def test_validation_messages(edges, message):
    with pytest.raises(GraphError, match=message):
        MetricGraph.build([0, 1], edges)


def test_validate_on_good_graph_is_empty():
    assert validate(circle()) == []


@pytest.mark.parametrize(
    "g, expected",
    [
        (interval(), (1, 0)),
        (circle(), (1, 1)),
        (bouquet([1, 2]), (1, 2)),
        (bouquet([1, 2], 2), (1, 2)),
        (line(), (1, 0)),
    ],
)
def test_betti_of_graphs(g, expected):
    assert betti(g) == expected


def test_json_roundtrip_keeps_infinite_lengths():
    g = bouquet([1.5], 1)
    h = MetricGraph.from_json(json.dumps(g.to_json()))
    assert h.to_json() == g.to_json()
    assert math.isinf(h.edge("open0").length)


def test_point_canonicalizes_to_vertices():
    g = interval(2.0)
    assert g.point("a", 0.0) == GraphPoint.at_vertex(0)
    assert g.point("a", 2.0) == GraphPoint.at_vertex(1)
    assert g.point("a", 1.0) == GraphPoint("a", 1.0)
    with pytest.raises(GraphError):
        g.point("a", 3.0)


def test_spanning_tree_prefixes_are_trees():
    g = MetricGraph.build(range(4), [("a", (0, 1), 1), ("b", (1, 2), 1), ("c", (2, 3), 1), ("d", (3, 0), 1), ("e", (0, 2), 1)])
    order = spanning_tree(g)
    assert len(order) == 3
    reached = {g.edge(order[0]).tail}
    for eid in order:
        a, b = g.edge(eid).endpoints
        assert (a in reached) != (b in reached)
        reached |= {a, b}


def test_spanning_tree_rejects_disconnected():
    g = MetricGraph.build(range(4), [("a", (0, 1), 1), ("b", (2, 3), 1)], check=False)
    with pytest.raises(GraphError, match="disconnected graph"):
        spanning_tree(g)


def test_collapse_edge_merges_and_reclassifies():
    h, _ = collapse_edge(circle(), "e0")
    assert len(h.vertices) == 2 and betti(h) == (1, 1)
    h2, _ = collapse_edge(h, h.edges[0].id)
    assert h2.edges[0].kind == "loop"
    with pytest.raises(GraphError, match="cannot collapse open edge"):
        collapse_edge(bouquet([1], 1), "open0")


def test_graph_distance_through_vertices():
    g = circle((1.0, 1.0, 1.0))
    assert graph_distance(g, GraphPoint("e0", 0.5), GraphPoint("e1", 0.5)) == pytest.approx(1.0)
    assert graph_distance(g, GraphPoint("e0", 0.1), GraphPoint("e2", 0.9)) == pytest.approx(0.2)
    assert graph_distance(g, GraphPoint.at_vertex(0), GraphPoint.at_vertex(0)) == 0


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_distance_on_interval_is_absolute_difference(x, y):
    g = interval(1.0)
    assert graph_distance(g, GraphPoint("a", x), GraphPoint("a", y)) == pytest.approx(abs(x - y), abs=1e-12)


def test_region_vertex_inference_and_betti():
    g = circle()
    r = Region.from_intervals(g, {"e0": [(0.5, 1.0)], "e1": [(0.0, 0.5)]})
    assert r.contains(GraphPoint.at_vertex(1))
    assert betti(r) == (1, 0)
    whole = Region.from_intervals(g, {e.id: [(0.0, e.length)] for e in g.edges})
    assert betti(whole) == (1, 1)


def test_region_without_vertex_is_two_components():
    g = interval(1.0)
    r = Region(g, {"a": ((0.1, 0.4), (0.6, 0.9))}, frozenset())
    assert len(r.components()) == 2 and betti(r) == (2, 0)


def test_region_set_operations():
    g = interval(3.0)
    a = Region.from_intervals(g, {"a": [(0.5, 2.0)]})
    b = Region.from_intervals(g, {"a": [(1.5, 2.5)]})
    assert a.union(b).intervals["a"] == ((0.5, 2.5),)
    assert a.intersection(b).intervals["a"] == ((1.5, 2.0),)
    assert a.minus_closure(b).intervals["a"] == ((0.5, 1.5),)
    assert a.intersection(b).is_subset(a)
    assert a.length() == pytest.approx(1.5)


def test_uncovered_reports_gaps_and_vertices():
    g = interval(2.0)
    whole = Region.whole(g)
    cover = Region.from_intervals(g, {"a": [(0.0, 0.8), (1.0, 2.0)]})
    gaps = whole.uncovered(cover)
    assert ("a", 0.8, 1.0) in [(e, round(a, 9), round(b, 9)) for e, a, b in gaps]


@given(st.floats(0.05, 1.5))
def test_ball_on_circle_is_contractible_below_half_circumference(r):
    g = circle((1.0, 1.0, 1.0))
    b = ball(g, GraphPoint("e0", 0.3), r)
    assert betti(b) == (1, 0)
    assert b.length() == pytest.approx(2 * r, rel=1e-9)


def test_ball_wraps_to_full_circle():
    g = circle((1.0, 1.0, 1.0))
    b = ball(g, GraphPoint("e0", 0.3), 2.0)
    assert betti(b) == (1, 1)


def test_union_all_of_arcs_covers_circle():
    g = circle((1.0, 1.0, 1.0))
    arcs = [ball(g, GraphPoint(f"e{i}", 0.5), 0.7) for i in range(3)]
    assert Region.whole(g).uncovered(union_all(g, arcs)) == []
