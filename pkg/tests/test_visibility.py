import math

import pytest
from hypothesis import given, strategies as st

from conftest import circle, interval
from qgr.graph import GraphPoint, Region, betti, union_all
from qgr.helmholtz import Wavenumber, solve_fundamental
from qgr.visibility import (
    CoverGapError,
    boundary_residual,
    build_visibility_cover,
    reflection_bound,
    shared_loss,
    superlevel_region,
)


def _field(frac=0.4, kp=3.0, a=0.5):
    g = circle()
    return solve_fundamental(g, GraphPoint("e1", frac * 1.1), Wavenumber(kp, a))


@given(st.floats(0.1, 0.9), st.floats(0.05, 0.9), st.booleans())
def test_region_contains_source_and_hits_threshold(frac, rel, env):
    f = _field(frac)
    peak = abs(1 / (2 * f.k))
    vr = superlevel_region(f, rel * peak * 0.5, env)
    assert vr.region.contains(f.source)
    assert boundary_residual(vr, f) < 1e-7 * peak**2


@given(st.floats(0.05, 0.5), st.floats(1.1, 3.0))
def test_regions_shrink_as_threshold_grows(T, factor):
    f = _field()
    scale = abs(1 / (2 * f.k))
    lo = superlevel_region(f, T * scale).region
    hi = superlevel_region(f, T * factor * scale).region
    assert hi.is_subset(lo)


def test_envelope_region_contains_amplitude_region():
    f = _field(a=0.1)
    T = 0.3 * abs(1 / (2 * f.k))
    assert superlevel_region(f, T, False).region.is_subset(superlevel_region(f, T, True).region)


def test_threshold_must_be_positive():
    with pytest.raises(ValueError):
        superlevel_region(_field(), 0.0)


def test_reflection_bound_examples():
    assert reflection_bound(interval()) == pytest.approx(0.95)  # degree one: full reflection, capped
    assert reflection_bound(circle()) == 0.0


def test_shared_loss_respects_floor():
    g = circle()
    pts = [GraphPoint("e0", 0.5)]
    a = shared_loss(g, pts, 3.0)
    assert a > 0 and shared_loss(g, pts, 3.0, floor=10 * a) == 10 * a


def test_cover_of_interval_is_contractible_and_complete():
    g = interval(2.0)
    pts = [GraphPoint("a", x) for x in (0.2, 0.6, 1.0, 1.4, 1.8)]
    regs, alpha = build_visibility_cover(g, pts, Wavenumber(6.0, 0.0))
    assert alpha > 0
    assert all(betti(r.region) == (1, 0) for r in regs)
    # interior sources share one threshold, normalized by the direct wave 1/(2k)
    assert len({round(r.threshold, 15) for r in regs}) == 1
    assert all(math.isfinite(r.threshold) and r.threshold > 0 for r in regs)
    assert not Region.whole(g).uncovered(union_all(g, [r.region for r in regs]))


def test_sparse_cover_reports_gaps():
    g = interval(6.0)
    with pytest.raises(CoverGapError) as info:
        build_visibility_cover(g, [GraphPoint("a", 0.5)], Wavenumber(6.0, 0.0))
    assert info.value.gaps
