"""Seeded random graphs for property checks and the verification suites."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import INF, GraphPoint, MetricGraph
from .helmholtz import Wavenumber


@dataclass(frozen=True)
class Blueprint:
    """Combinatorial shape of a graph; lengths are chosen when it is realized.

    ``loops`` and ``closed`` carry a flag asking for a resonant length.
    """

    core: int
    segments: tuple[tuple[int, int], ...]
    loops: tuple[tuple[int, bool], ...]
    opens: tuple[int, ...]
    closed: tuple[tuple[int, bool], ...]


def random_blueprint(rng: np.random.Generator, *, max_count: int = 4, core: int | None = None,
                     allow_closed: bool = True, min_open: int = 0) -> Blueprint:
    """Random shape with at most ``max_count`` loops, open and closed edges each.

    The core is a random tree on ``core`` vertices, optionally with one extra
    segment closing a cycle.  Empty shapes are rejected and redrawn.
    """
    while True:
        c = int(rng.integers(1, 4)) if core is None else core
        segs = [(int(rng.integers(0, i)), i) for i in range(1, c)]
        if c >= 3 and rng.random() < 0.3:
            a, b = rng.choice(c, size=2, replace=False)
            segs.append((int(a), int(b)))
        n_loops = int(rng.integers(0, max_count + 1))
        n_open = int(rng.integers(min_open, max_count + 1))
        n_closed = int(rng.integers(0, max_count + 1)) if allow_closed else 0
        loops = tuple((int(rng.integers(0, c)), bool(rng.random() < 0.4)) for _ in range(n_loops))
        opens = tuple(int(rng.integers(0, c)) for _ in range(n_open))
        closed = tuple((int(rng.integers(0, c)), bool(rng.random() < 0.4)) for _ in range(n_closed))
        if loops or opens or closed:
            return Blueprint(c, tuple(segs), loops, opens, closed)


def realize(bp: Blueprint, k: Wavenumber, rng: np.random.Generator, *, lengths: tuple[float, float] = (0.5, 2.0)) -> MetricGraph:
    """Metric graph of ``bp``; flagged loops get ``2 pi j / k'`` and flagged closed edges ``pi j / k'``.

    Only lossless wavenumbers make those lengths resonant.
    """
    lo, hi = lengths

    def free():
        return float(rng.uniform(lo, hi))

    def tuned(period):
        j = max(1, int(math.ceil(lo / period)))
        return float(j * period)

    vertices: list = list(range(bp.core))
    edges = []
    for i, (a, b) in enumerate(bp.segments):
        edges.append((f"s{i}", (a, b), free()))
    for i, (v, res) in enumerate(bp.loops):
        edges.append((f"l{i}", (v, v), tuned(2 * math.pi / k.kprime) if res else free()))
    for i, v in enumerate(bp.opens):
        edges.append((f"o{i}", (v,), INF))
    for i, (v, res) in enumerate(bp.closed):
        leaf = f"c{i}"
        vertices.append(leaf)
        edges.append((f"c{i}", (v, leaf), tuned(math.pi / k.kprime) if res else free()))
    return MetricGraph.build(vertices, edges)


def random_wavenumber(rng: np.random.Generator, *, lossless_fraction: float = 0.5,
                      kprime: tuple[float, float] = (0.5, 10.0), alpha: tuple[float, float] = (0.01, 0.5)) -> Wavenumber:
    kp = float(rng.uniform(*kprime))
    if rng.random() < lossless_fraction:
        return Wavenumber(kp, 0.0)
    return Wavenumber(kp, float(rng.uniform(*alpha)))


def random_point(g: MetricGraph, rng: np.random.Generator, *, open_reach: float = 1.0, margin: float = 1e-3) -> GraphPoint:
    """Uniform point in the interior of a random edge."""
    e = g.edges[int(rng.integers(0, len(g.edges)))]
    hi = open_reach if e.is_open else e.length
    return GraphPoint(e.id, float(rng.uniform(margin, hi - margin)))
