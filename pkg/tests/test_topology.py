import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import circle, interval
from qgr.graph import GraphPoint, MetricGraph, Region, betti, components
from qgr.helmholtz import Wavenumber, solve_fundamental
from qgr.topology import (
    Cover,
    UndersampledError,
    components_via_signal,
    injectivity_margin,
    nerve,
    profile,
    refine_all,
    refine_step,
    sample_region,
    simplicial_betti,
    verify_good_cover,
)


def two_arcs():
    """Two arcs covering the circle whose overlap has two pieces."""
    g = circle()
    U = Region.from_intervals(g, {"e2": [(0.4, 0.9)], "e0": [(0.0, 1.0)], "e1": [(0.0, 0.5)]})
    W = Region.from_intervals(g, {"e1": [(0.3, 1.1)], "e2": [(0.0, 0.6)]})
    return g, U, W


def three_arcs(overlap=0.1):
    g = circle()
    arcs = [
        Region.from_intervals(g, {"e2": [(0.9 - overlap, 0.9)], "e0": [(0.0, 1.0)], "e1": [(0.0, overlap)]}),
        Region.from_intervals(g, {"e1": [(0.0, 1.1)], "e2": [(0.0, overlap)]}),
        Region.from_intervals(g, {"e2": [(0.0, 0.9)], "e0": [(0.0, overlap)]}),
    ]
    return g, arcs


def test_two_arcs_refine_to_a_four_cycle():
    g, U, W = two_arcs()
    assert len(components(U.intersection(W))) == 2
    cover = refine_all([U, W])
    assert verify_good_cover(cover) == []
    assert len(cover) == 4
    nv = nerve(cover)
    assert len(nv.of_dim(0)) == 4 and len(nv.of_dim(1)) == 4 and nv.of_dim(2) == []
    assert simplicial_betti(nv) == (1, 1)
    assert cover.union().is_subset(U.union(W)) and U.union(W).is_subset(cover.union())


@given(st.floats(0.02, 0.4))
def test_three_arcs_on_circle(overlap):
    g, arcs = three_arcs(overlap)
    cover = refine_all(arcs)
    assert verify_good_cover(cover) == []
    assert simplicial_betti(nerve(cover)) == (1, 1)


def test_disjoint_step_keeps_both():
    g = interval(4.0)
    U = Region.from_intervals(g, {"a": [(0.5, 1.0)]})
    W = Region.from_intervals(g, {"a": [(2.0, 3.0)]})
    out = refine_step(Cover(g, (U,)), W)
    assert len(out) == 2
    assert simplicial_betti(nerve(out)) == (2, 0)


def test_single_region_cover():
    g = interval(2.0)
    U = Region.from_intervals(g, {"a": [(0.2, 1.0)]})
    cover = refine_all([U])
    assert len(cover) == 1 and verify_good_cover(cover) == []


def test_bad_intersection_is_diagnosed():
    g, U, W = two_arcs()
    assert verify_good_cover(Cover(g, (U, W)))


def test_nerve_is_downward_closed():
    g, arcs = three_arcs(0.3)
    nv = nerve(refine_all(arcs))
    present = set(nv.simplices)
    for s in nv.simplices:
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            assert not face or face in present


def _fields(g, points, k):
    return [solve_fundamental(g, y, k) for y in points]


def test_profile_at_vertex_is_continuous():
    g = circle()
    fs = _fields(g, [GraphPoint("e0", 0.3), GraphPoint("e1", 0.6), GraphPoint("e2", 0.2)], Wavenumber(3.0, 0.2))
    at_v = profile(fs, GraphPoint.at_vertex(1)).value
    near = profile(fs, GraphPoint("e0", 1.0 - 1e-9)).value
    assert np.allclose(at_v, near, atol=1e-7)
    along = [profile(fs, GraphPoint("e1", x)).value for x in (0.2, 0.5)]
    assert not np.allclose(*along)


def test_profile_rejects_mixed_wavenumbers():
    g = circle()
    y = GraphPoint("e0", 0.5)
    with pytest.raises(ValueError):
        profile([solve_fundamental(g, y, Wavenumber(3.0, 0.1)), solve_fundamental(g, y, Wavenumber(2.0, 0.1))], y)


def test_injectivity_margin_errors_and_duplicates():
    g = circle()
    f = solve_fundamental(g, GraphPoint("e0", 0.5), Wavenumber(3.0, 0.1))
    s = profile([f], GraphPoint("e1", 0.5))
    with pytest.raises(ValueError):
        injectivity_margin([s], 0.1, g)
    assert injectivity_margin([s, s], 0.1, g) == math.inf


def test_connected_interval_is_one_cluster():
    g = interval(3.0)
    fs = _fields(g, [GraphPoint("a", 0.4), GraphPoint("a", 1.7), GraphPoint("a", 2.5)], Wavenumber(2.0, 0.2))
    R = Region.from_intervals(g, {"a": [(0.5, 2.0)]})
    samples = [profile(fs, p) for p in sample_region(R, 0.02)]
    assert len(components_via_signal(R, samples)) == 1


def test_two_far_intervals_are_two_clusters():
    g = interval(6.0)
    fs = _fields(g, [GraphPoint("a", 0.4), GraphPoint("a", 3.1), GraphPoint("a", 5.5)], Wavenumber(2.0, 0.2))
    R = Region.from_intervals(g, {"a": [(0.5, 1.5), (4.0, 5.0)]})
    samples = [profile(fs, p) for p in sample_region(R, 0.02)]
    assert len(components_via_signal(R, samples)) == len(components(R)) == 2


def test_overlap_of_two_arcs_splits_by_signal():
    g, U, W = two_arcs()
    V = U.intersection(W)
    fs = _fields(g, [GraphPoint("e0", 0.3), GraphPoint("e1", 0.8), GraphPoint("e2", 0.7)], Wavenumber(3.0, 0.2))
    samples = [profile(fs, p) for p in sample_region(V, 0.01)]
    assert len(components_via_signal(V, samples)) == 2


def test_sparse_samples_are_rejected():
    g = interval(3.0)
    f = solve_fundamental(g, GraphPoint("a", 0.4), Wavenumber(2.0, 0.2))
    R = Region.from_intervals(g, {"a": [(0.5, 2.0)]})
    with pytest.raises(UndersampledError):
        components_via_signal(R, [profile([f], GraphPoint("a", 1.0))])


def k4_subdivided() -> MetricGraph:
    rng = np.random.default_rng(7)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    return MetricGraph.build(range(4), [(f"e{i}", p, float(rng.uniform(0.8, 1.2))) for i, p in enumerate(pairs)])


def test_three_transmitters_embed_k4():
    g = k4_subdivided()
    k = Wavenumber(2.5, 0.2)
    fs = _fields(g, [GraphPoint("e0", 0.3), GraphPoint("e3", 0.5), GraphPoint("e5", 0.7)], k)
    pts = sample_region(Region.whole(g), 0.03)
    assert injectivity_margin([profile(fs, p) for p in pts], 0.1, g) > 0


def test_betti_of_k4():
    assert betti(k4_subdivided()) == (1, 3)
