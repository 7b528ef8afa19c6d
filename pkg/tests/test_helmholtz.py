import cmath
import math

import pytest
from hypothesis import given, strategies as st

from conftest import bouquet, circle, interval, line
from qgr.graph import GraphPoint
from qgr.helmholtz import (
    SingularSystemError,
    Wavenumber,
    amplitude_sq_closed_form,
    amplitude_sq_direct,
    constraint_residual,
    envelope_minimum,
    envelope_sq,
    evaluate,
    first_sidelobe,
    homogeneous_basis,
    select_loss_and_threshold,
    solve_fundamental,
)

kprimes = st.floats(0.3, 12.0)
alphas = st.floats(0.0, 1.0)


@given(kprimes, st.floats(0.01, 1.0), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_line_green_function(kp, a, ys, xs):
    # source at offset ys on edge "a", receiver at xs on edge "b": distance ys + xs
    g = line()
    k = Wavenumber(kp, a)
    f = solve_fundamental(g, GraphPoint("a", ys), k)
    got = evaluate(f, GraphPoint("b", xs))
    want = cmath.exp(1j * k.k * (ys + xs)) / (2j * k.k)
    assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_vertex_source_on_line_matches_interior_limit():
    g = line()
    k = Wavenumber(2.0, 0.1)
    f = solve_fundamental(g, GraphPoint.at_vertex(0), k)
    x = 0.7
    assert evaluate(f, GraphPoint("a", x)) == pytest.approx(cmath.exp(1j * k.k * x) / (2j * k.k), abs=1e-12)
    assert constraint_residual(f) < 1e-9


@given(kprimes, st.floats(0.01, 1.0), st.floats(0.05, 0.95))
def test_constraint_residual_on_circle(kp, a, frac):
    g = circle()
    f = solve_fundamental(g, GraphPoint("e1", frac * 1.1), Wavenumber(kp, a))
    assert constraint_residual(f) < 1e-9


@given(kprimes, st.floats(0.01, 1.0))
def test_constraint_residual_vertex_source_with_open_edge(kp, a):
    g = bouquet([1.3], open_edges=1)
    f = solve_fundamental(g, GraphPoint.at_vertex(0), Wavenumber(kp, a))
    assert constraint_residual(f) < 1e-9


def test_resonant_interval_is_singular():
    L = 2.0
    with pytest.raises(SingularSystemError):
        solve_fundamental(interval(L), GraphPoint("a", 0.4), Wavenumber(math.pi / L, 0.0))


def test_source_must_be_interior():
    with pytest.raises(ValueError):
        solve_fundamental(interval(2.0), GraphPoint("a", 2.0), Wavenumber(1.0, 0.1))


def test_homogeneous_basis_of_resonant_loop():
    # a lone loop at k' L = 2 pi carries two independent circulating waves
    g = bouquet([1.0])
    basis = homogeneous_basis(g, Wavenumber(2 * math.pi, 0.0))
    assert len(basis) == 2
    assert all(constraint_residual(f) < 1e-9 for f in basis)
    assert homogeneous_basis(g, Wavenumber(2.0, 0.0)) == []


@given(st.floats(0.0, 5.0), st.floats(0.1, 4.0), st.floats(0.0, 0.95), kprimes, alphas)
def test_closed_form_matches_direct(x, L, Gamma, kp, a):
    k = Wavenumber(kp, a)
    assert amplitude_sq_closed_form(x, L, Gamma, k) == pytest.approx(amplitude_sq_direct(x, L, Gamma, k), rel=1e-9, abs=1e-12)


@given(st.floats(0.0, 5.0), st.floats(0.1, 4.0), st.floats(0.0, 0.95), kprimes, alphas)
def test_envelope_dominates_amplitude(x, L, Gamma, kp, a):
    k = Wavenumber(kp, a)
    assert amplitude_sq_closed_form(x, L, Gamma, k) <= envelope_sq(x, L, Gamma, k) + 1e-12


def test_envelope_minimum_is_stationary():
    k = Wavenumber(3.0, 0.4)
    L, Gamma = 2.0, 0.5
    x0 = envelope_minimum(L, Gamma, k)
    h = 1e-5
    assert envelope_sq(x0 - h, L, Gamma, k) > envelope_sq(x0, L, Gamma, k) < envelope_sq(x0 + h, L, Gamma, k)
    assert envelope_minimum(L, Gamma, Wavenumber(3.0, 0.0)) == math.inf


def test_first_sidelobe_examples():
    assert first_sidelobe(math.pi, 1.0) == pytest.approx(0.5)
    assert first_sidelobe(math.pi, 2.0) == pytest.approx(1.0)


@given(kprimes, st.floats(0.1, 4.0))
def test_first_sidelobe_is_leftmost_positive_peak(kp, L):
    x = first_sidelobe(kp, L)
    period = math.pi / kp
    assert 0 < x <= period + 1e-12
    # cos(2 k' x - k' L) = 1 there
    assert math.cos(2 * kp * x - kp * L) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.0, 0.9), st.floats(0.5, 8.0), st.floats(0.3, 3.0))
def test_selected_loss_gives_single_crossing(Gamma, kp, L):
    alpha, T = select_loss_and_threshold(Gamma, kp, L)
    assert alpha >= 1 / L
    k = Wavenumber(kp, alpha)
    assert T * T == pytest.approx(amplitude_sq_closed_form(first_sidelobe(kp, L), L, Gamma, k))
    assert T * T < amplitude_sq_closed_form(0.0, L, Gamma, k)


def test_selection_rejects_bad_reflection():
    with pytest.raises(ValueError):
        select_loss_and_threshold(1.0, 2.0, 1.0)
