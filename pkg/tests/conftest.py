import math

import numpy as np
import pytest
from hypothesis import settings

from qgr.graph import INF, MetricGraph

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def circle(lengths=(1.0, 1.1, 0.9)) -> MetricGraph:
    n = len(lengths)
    return MetricGraph.build(range(n), [(f"e{i}", (i, (i + 1) % n), L) for i, L in enumerate(lengths)])


def bouquet(lengths, open_edges=0) -> MetricGraph:
    edges = [(f"loop{i}", (0, 0), float(L)) for i, L in enumerate(lengths)]
    edges += [(f"open{i}", (0,), INF) for i in range(open_edges)]
    return MetricGraph.build([0], edges)


def interval(L=2.0) -> MetricGraph:
    return MetricGraph.build([0, 1], [("a", (0, 1), L)])


def line() -> MetricGraph:
    """Two open edges glued at one vertex: the real line."""
    return MetricGraph.build([0], [("a", (0,), INF), ("b", (0,), INF)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


TWO_PI = 2 * math.pi
