"""Thresholded visibility regions and contractible transmitter covers."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .config import TOL
from .graph import GraphPoint, MetricGraph, Region, betti, union_all
from .helmholtz import (
    Wavenumber,
    WaveField,
    amplitude_sq_closed_form,
    first_sidelobe,
    select_loss_and_threshold,
    solve_fundamental,
)

log = logging.getLogger(__name__)

MIN_SAMPLES = 512


class CoverGapError(RuntimeError):
    def __init__(self, gaps):
        self.gaps = list(gaps)
        super().__init__("cover gap: " + ", ".join(f"{e}[{a:.6g}, {b:.6g}]" for e, a, b in self.gaps))


class NotContractibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class VisibilityRegion:
    source: GraphPoint
    threshold: float
    region: Region
    used_envelope: bool
    alpha: float = 0.0


def _edge_profile(f: WaveField, eid: str, use_envelope: bool):
    """Return a vectorized function of the offset giving |u|^2 or the envelope^2."""
    k = f.k
    ps = f.pieces[eid]
    bounds = np.array([p.start for p in ps[1:]])

    def fn(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        idx = np.searchsorted(bounds, xs, side="left") if len(bounds) else np.zeros(xs.shape, int)
        out = np.empty(xs.shape)
        for i, p in enumerate(ps):
            sel = idx == i
            t = xs[sel] - p.start
            fwd = p.A * np.exp(1j * k * t)
            back = p.B * (np.exp(-1j * k * t) if math.isinf(p.stop) else np.exp(1j * k * (p.length - t)))
            out[sel] = (np.abs(fwd) + np.abs(back)) ** 2 if use_envelope else np.abs(fwd + back) ** 2
        return out

    return fn


def _sample_count(f: WaveField, span: float) -> int:
    per_wave = 16
    return max(MIN_SAMPLES, int(math.ceil(per_wave * f.wavenumber.kprime * span / (2 * math.pi))) + 1)


def _open_span(f: WaveField, eid: str, fn, T2: float, truncation: float) -> float:
    span = truncation
    src = f.source
    if src is not None and src.edge == eid:
        span = max(span, src.offset + truncation)
    for _ in range(60):
        if fn([span])[0] <= T2:
            return span
        span *= 2
    return span


def _crossings(fn, lo: float, hi: float, T2: float, n: int) -> list[tuple[float, float]]:
    xs = np.linspace(lo, hi, n)
    vals = fn(xs) - T2
    above = vals > 0
    runs = []
    i = 0
    g = lambda x: float(fn([x])[0] - T2)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        a = lo if i == 0 else brentq(g, xs[i - 1], xs[i], xtol=TOL.roots)
        b = hi if j == n - 1 else brentq(g, xs[j], xs[j + 1], xtol=TOL.roots)
        runs.append((a, b))
        i = j + 1
    return runs


def superlevel_region(f: WaveField, T: float, use_envelope: bool = True, *, open_truncation: float = 1.0) -> VisibilityRegion:
    """``{x : |u(x)|^2 > T^2}`` (or the envelope), found by sampling and bisection."""
    if not T > 0:
        raise ValueError("threshold must be positive")
    g = f.graph
    T2 = T * T
    ivs = {}
    for e in g.edges:
        fn = _edge_profile(f, e.id, use_envelope)
        hi = _open_span(f, e.id, fn, T2, open_truncation) if e.is_open else e.length
        runs = _crossings(fn, 0.0, hi, T2, _sample_count(f, hi))
        if e.is_open and runs and runs[-1][1] >= hi:
            runs[-1] = (runs[-1][0], math.inf)
        ivs[e.id] = runs
    region = Region.from_intervals(g, ivs)
    return VisibilityRegion(f.source, T, region, use_envelope, f.wavenumber.alpha)


def boundary_residual(vr: VisibilityRegion, f: WaveField) -> float:
    """Worst ``| value^2 - T^2 |`` over the region's boundary points."""
    worst = 0.0
    for p in vr.region.boundary_points():
        if p.is_vertex:
            eid, end = f.graph.half_edges(p.vertex)[0]
            x = 0.0 if end == 0 else f.graph.edge(eid).length
        else:
            eid, x = p.edge, p.offset
        val = _edge_profile(f, eid, vr.used_envelope)([x])[0]
        worst = max(worst, abs(val - vr.threshold**2))
    return worst


# ---------------------------------------------------------------------------
# covers


def reflection_bound(g: MetricGraph, cap: float = 0.95) -> float:
    """Largest Kirchhoff reflection magnitude ``|2/d - 1|`` over vertices, capped below one."""
    worst = max(abs(2.0 / g.degree(v) - 1.0) for v in g.vertices)
    return min(worst, cap)


def lemma_length(g: MetricGraph) -> float:
    finite = [e.length for e in g.edges if not e.is_open]
    return min(finite) if finite else 1.0


def compact_hull(g: MetricGraph, open_truncation: float = 0.25) -> Region:
    """All finite edges, all vertices and an initial stretch of every open edge."""
    return Region.whole(g, open_truncation)


def shared_loss(g: MetricGraph, sources: Sequence[GraphPoint], kprime: float, *, floor: float = 0.0,
                Gamma: float | None = None, L: float | None = None) -> float:
    """Largest selected loss over the sources, never below ``floor``."""
    Gamma = reflection_bound(g) if Gamma is None else Gamma
    L = lemma_length(g) if L is None else L
    return max([floor] + [select_loss_and_threshold(Gamma, kprime, L)[0] for _ in sources])


def build_visibility_cover(
    g: MetricGraph,
    sources: Sequence[GraphPoint],
    k0: Wavenumber,
    compact_part: Region | None = None,
    *,
    use_envelope: bool = True,
    Gamma: float | None = None,
    L: float | None = None,
    open_truncation: float = 1.0,
) -> tuple[list[VisibilityRegion], float]:
    """One visibility region per source with a shared loss.

    Each source gets its own loss from the threshold selection with reflection
    ``Gamma`` and length ``L``.  The shared loss is the maximum, after which
    every threshold is recomputed at that loss.
    """
    if not sources:
        raise ValueError("need at least one source")
    compact_part = compact_hull(g) if compact_part is None else compact_part
    Gamma = reflection_bound(g) if Gamma is None else Gamma
    L = lemma_length(g) if L is None else L
    alpha = shared_loss(g, sources, k0.kprime, floor=k0.alpha, Gamma=Gamma, L=L)
    k = Wavenumber(k0.kprime, alpha)
    rel = math.sqrt(amplitude_sq_closed_form(first_sidelobe(k.kprime, L), L, Gamma, k))
    out = []
    for y in sources:
        f = solve_fundamental(g, y, k)
        # the selection normalizes the direct wave to unit amplitude; here it is 1/(d ik)
        d = g.degree(y.vertex) if y.is_vertex else 2
        T = rel / abs(d * k.k)
        vr = superlevel_region(f, T, use_envelope, open_truncation=open_truncation)
        if betti(vr.region) != (1, 0) or not vr.region.contains(y):
            raise NotContractibleError(f"region of source {y} has betti {betti(vr.region)}")
        out.append(vr)
    gaps = compact_part.uncovered(union_all(g, [v.region for v in out]))
    if gaps:
        raise CoverGapError(gaps)
    return out, alpha
