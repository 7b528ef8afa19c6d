import cmath
import math

import pytest
from hypothesis import given, strategies as st

from conftest import TWO_PI, bouquet, circle
from qgr.graph import INF, MetricGraph
from qgr.geometry import (
    GeometryError,
    ResidueClass,
    SectionObservation,
    extract_geometry,
    merge_degree_two,
    true_endomorphisms,
    verify_section_consistency,
)
from qgr.helmholtz import Wavenumber, homogeneous_basis
from qgr.sheaf import cech_cohomology, from_quantum_graph


def tadpole_tree():
    return MetricGraph.build([0, 1, 2], [("s0", (0, 1), 1.2), ("s1", (1, 2), 0.7), ("l", (2, 2), 1.6),
                                         ("o0", (0,), INF), ("o1", (1,), INF),
                                         ("o2", (0,), INF)])


def _section(g, k, j=0):
    s = from_quantum_graph(g, k)
    res = cech_cohomology(s)
    return SectionObservation.from_section(s, res, j)


@given(st.floats(0.5, 8.0), st.floats(0.02, 0.4))
def test_lossy_roundtrip_recovers_lengths(kp, a):
    g = tadpole_tree()
    k = Wavenumber(kp, a)
    geom = extract_geometry(g, _section(g, k), k)
    for eid in ("s0", "s1", "l"):
        assert geom.lengths[eid] == pytest.approx(g.edge(eid).length, rel=1e-6)
    truth = true_endomorphisms(g, k, geom)
    assert all(abs(geom.endomorphisms[e] - truth[e]) < 1e-8 for e in truth)
    assert verify_section_consistency(g, _section(g, k), geom) < 1e-9


@given(st.floats(0.5, 8.0), st.floats(-3.0, 3.0))
def test_lossless_lengths_are_residue_classes(kp, phase):
    g = tadpole_tree()
    k = Wavenumber(kp, 0.0)
    obs = _section(g, k).scaled(cmath.exp(1j * phase) * 2.5)
    geom = extract_geometry(g, obs, k)
    for eid in ("s0", "s1", "l"):
        r = geom.lengths[eid]
        assert isinstance(r, ResidueClass) and r.modulus == pytest.approx(TWO_PI / kp)
        assert r.contains(g.edge(eid).length)


def test_field_observation_matches_section():
    g = bouquet([1.0, 1.5], open_edges=1)
    k = Wavenumber(3.0, 0.1)
    (f,) = homogeneous_basis(g, k)
    geom = extract_geometry(g, SectionObservation.from_field(f), k)
    assert geom.lengths["loop0"] == pytest.approx(1.0, rel=1e-6)
    assert geom.lengths["loop1"] == pytest.approx(1.5, rel=1e-6)


def test_zero_section_rejected():
    g = tadpole_tree()
    obs = _section(g, Wavenumber(2.0, 0.1)).scaled(0.0)
    with pytest.raises(GeometryError, match="zero section"):
        extract_geometry(g, obs, Wavenumber(2.0, 0.1))


def test_missing_observation_rejected():
    g = tadpole_tree()
    k = Wavenumber(2.0, 0.1)
    obs = _section(g, k)
    partial = SectionObservation({key: v for key, v in obs.values.items() if key[0] != 2})
    with pytest.raises(GeometryError, match="missing observation"):
        extract_geometry(g, partial, k)


def test_degree_two_vertices_merge_into_chains():
    reduced, chains, _ = merge_degree_two(circle((1.0, 1.1, 0.9)))
    assert len(reduced.edges) == 1 and reduced.edges[0].is_loop
    (chain,) = chains.values()
    assert sorted(chain) == ["e0", "e1", "e2"]
    assert reduced.edges[0].length == pytest.approx(3.0)


def test_merged_edge_length_recovered():
    g = MetricGraph.build([0, 1], [("a", (0, 1), 0.6), ("b", (1, 0), 0.9), ("o", (0,), INF)])
    k = Wavenumber(2.5, 0.2)
    geom = extract_geometry(g, _section(g, k), k)
    (eid,) = geom.endomorphisms
    assert sorted(geom.chains[eid]) == ["a", "b"]
    assert geom.lengths[eid] == pytest.approx(1.5, rel=1e-6)


def test_residue_class_membership():
    r = ResidueClass(0.25, 1.0)
    assert r.contains(3.25) and not r.contains(3.5)
    assert math.isclose(r.modulus, 1.0)
