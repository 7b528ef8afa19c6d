"""Lossy Helmholtz solutions on metric graphs with Kirchhoff vertices.

On every edge ``u(x) = c_plus e^{ikx} + c_minus e^{-ikx}`` in the edge's own
orientation.  Internally finite pieces use the balanced form
``A e^{ikx} + B e^{ik(l - x)}`` so that heavy loss never overflows.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .config import TOL
from .graph import GraphError, GraphPoint, MetricGraph, is_connected


class SingularSystemError(RuntimeError):
    """The constraint matrix is numerically singular (a resonance was hit)."""


class AdmissibilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Wavenumber:
    kprime: float
    alpha: float = 0.0

    def __post_init__(self):
        if not self.kprime > 0:
            raise ValueError("kprime must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    @property
    def k(self) -> complex:
        return complex(self.kprime, self.alpha)


@dataclass(frozen=True)
class EdgeWave:
    c_plus: complex
    c_minus: complex


@dataclass(frozen=True)
class Piece:
    """Part of an edge between offsets ``start`` and ``stop``, balanced coefficients."""

    edge: str
    start: float
    stop: float  # inf for the tail of an open edge
    A: complex
    B: complex

    @property
    def length(self) -> float:
        return self.stop - self.start


@dataclass(frozen=True)
class WaveField:
    graph: MetricGraph = field(repr=False)
    wavenumber: Wavenumber
    pieces: Mapping[str, tuple[Piece, ...]]
    source: GraphPoint | None = None

    @property
    def k(self) -> complex:
        return self.wavenumber.k

    def edge_wave(self, eid: str) -> EdgeWave:
        """Coefficients in the edge frame; only defined for edges not carrying the source."""
        ps = self.pieces[eid]
        if len(ps) != 1:
            raise ValueError(f"edge {eid} is split by the source; use pieces")
        p = ps[0]
        if math.isinf(p.stop):
            return EdgeWave(p.A, p.B)
        return EdgeWave(p.A, p.B * cmath.exp(1j * self.k * p.length))

    def scaled(self, c: complex) -> "WaveField":
        return WaveField(self.graph, self.wavenumber,
                         {e: tuple(Piece(p.edge, p.start, p.stop, c * p.A, c * p.B) for p in ps) for e, ps in self.pieces.items()},
                         self.source)

    def norm(self) -> float:
        return math.sqrt(sum(abs(p.A) ** 2 + abs(p.B) ** 2 for ps in self.pieces.values() for p in ps))


def _piece_at(f: WaveField, eid: str, x: float) -> Piece:
    ps = f.pieces[eid]
    for p in ps:
        if x <= p.stop:
            return p
    return ps[-1]


def _piece_value(p: Piece, k: complex, x: float) -> complex:
    t = x - p.start
    if math.isinf(p.stop):
        return p.A * cmath.exp(1j * k * t) + p.B * cmath.exp(-1j * k * t)
    return p.A * cmath.exp(1j * k * t) + p.B * cmath.exp(1j * k * (p.length - t))


def _piece_derivative(p: Piece, k: complex, x: float) -> complex:
    t = x - p.start
    if math.isinf(p.stop):
        return 1j * k * (p.A * cmath.exp(1j * k * t) - p.B * cmath.exp(-1j * k * t))
    return 1j * k * (p.A * cmath.exp(1j * k * t) - p.B * cmath.exp(1j * k * (p.length - t)))


def evaluate(f: WaveField, p: GraphPoint) -> complex:
    if p.is_vertex:
        eid, end = f.graph.half_edges(p.vertex)[0]
        x = 0.0 if end == 0 else f.graph.edge(eid).length
        return _piece_value(_piece_at(f, eid, x), f.k, x)
    return _piece_value(_piece_at(f, p.edge, p.offset), f.k, p.offset)


def evaluate_edge(f: WaveField, eid: str, xs: np.ndarray) -> np.ndarray:
    """Vectorized evaluation along one edge."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape, dtype=complex)
    k = f.k
    bounds = [p.start for p in f.pieces[eid][1:]]
    idx = np.searchsorted(bounds, xs, side="left") if bounds else np.zeros(xs.shape, int)
    for i, p in enumerate(f.pieces[eid]):
        sel = idx == i
        t = xs[sel] - p.start
        if math.isinf(p.stop):
            out[sel] = p.A * np.exp(1j * k * t) + p.B * np.exp(-1j * k * t)
        else:
            out[sel] = p.A * np.exp(1j * k * t) + p.B * np.exp(1j * k * (p.length - t))
    return out


def derivative(f: WaveField, eid: str, x: float) -> complex:
    return _piece_derivative(_piece_at(f, eid, x), f.k, x)


# ---------------------------------------------------------------------------
# assembly


@dataclass
class _Layout:
    pieces: list  # (edge id, start, stop, tail node, head node | None)
    node_ends: dict  # node -> list of (piece index, end)


def _layout(g: MetricGraph, source: GraphPoint | None) -> _Layout:
    pieces = []
    for e in g.edges:
        head = None if e.is_open else e.head
        if source is not None and source.edge == e.id:
            s = source.offset
            pieces.append((e.id, 0.0, s, ("v", e.tail), ("src",)))
            stop = math.inf if e.is_open else e.length
            pieces.append((e.id, s, stop, ("src",), None if head is None else ("v", head)))
        else:
            stop = math.inf if e.is_open else e.length
            pieces.append((e.id, 0.0, stop, ("v", e.tail), None if head is None else ("v", head)))
    ends: dict = {}
    for i, (_, _, _, t, h) in enumerate(pieces):
        ends.setdefault(t, []).append((i, 0))
        if h is not None:
            ends.setdefault(h, []).append((i, 1))
    return _Layout(pieces, ends)


def _constraint_matrix(g: MetricGraph, k: complex, layout: _Layout, radiation: bool):
    """Rows: continuity and Kirchhoff sums (derivatives divided by ik)."""
    n = len(layout.pieces)
    ncols = 2 * n
    rows = []
    kirchhoff_rows = {}
    for node, ends in layout.node_ends.items():
        value_rows = []
        deriv = np.zeros(ncols, complex)
        for i, end in ends:
            _, a, b, _, _ = layout.pieces[i]
            length = b - a
            r = np.zeros(ncols, complex)
            if math.isinf(b):
                r[2 * i] = 1
                r[2 * i + 1] = 1
                deriv[2 * i] += 1
                deriv[2 * i + 1] -= 1
            else:
                E = cmath.exp(1j * k * length)
                if end == 0:
                    r[2 * i], r[2 * i + 1] = 1, E
                    deriv[2 * i] += 1
                    deriv[2 * i + 1] -= E
                else:
                    r[2 * i], r[2 * i + 1] = E, 1
                    deriv[2 * i] -= E
                    deriv[2 * i + 1] += 1
            value_rows.append(r)
        for r in value_rows[1:]:
            rows.append(value_rows[0] - r)
        kirchhoff_rows[node] = len(rows)
        rows.append(deriv)
    M = np.array(rows).reshape(len(rows), ncols)
    free = list(range(ncols))
    if radiation:
        free = [c for c in free if not (c % 2 == 1 and math.isinf(layout.pieces[c // 2][2]))]
    return M, free, kirchhoff_rows


def _field_from(g, wn, layout, vec, source) -> WaveField:
    out: dict = {}
    for i, (eid, a, b, _, _) in enumerate(layout.pieces):
        out.setdefault(eid, []).append(Piece(eid, a, b, complex(vec[2 * i]), complex(vec[2 * i + 1])))
    return WaveField(g, wn, {e: tuple(ps) for e, ps in out.items()}, source)


def solve_fundamental(g: MetricGraph, y: GraphPoint, k: Wavenumber) -> WaveField:
    """Field of a unit point source at ``y``, an interior point or a vertex.

    Outgoing derivatives at ``y`` sum to one; open edges radiate.
    """
    if not is_connected(g):
        raise GraphError("disconnected graph")
    if y.is_vertex:
        if y.vertex not in g.vertices:
            raise ValueError(f"unknown vertex {y.vertex!r}")
        layout = _layout(g, None)
        node = ("v", y.vertex)
    else:
        e = g.edge(y.edge)
        if not (0 < y.offset and (e.is_open or y.offset < e.length)):
            raise ValueError("source offset must be interior to its edge")
        layout = _layout(g, y)
        node = ("src",)
    M, free, krows = _constraint_matrix(g, k.k, layout, radiation=True)
    A = M[:, free]
    rhs = np.zeros(M.shape[0], complex)
    rhs[krows[node]] = 1 / (1j * k.k)
    if A.shape[0] != A.shape[1]:
        raise AssertionError("fundamental system is not square")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] < TOL.rcond * s[0]:
        raise SingularSystemError("singular system")
    lu = scipy.linalg.lu_factor(A)
    sol = scipy.linalg.lu_solve(lu, rhs)
    vec = np.zeros(M.shape[1], complex)
    vec[free] = sol
    return _field_from(g, k, layout, vec, y)


def homogeneous_basis(g: MetricGraph, k: Wavenumber) -> list[WaveField]:
    """Source-free solutions; both coefficients on open edges are free."""
    layout = _layout(g, None)
    M, _, _ = _constraint_matrix(g, k.k, layout, radiation=False)
    from .sheaf import numerical_rank

    rank, _ = numerical_rank(M)
    _, _, vh = np.linalg.svd(M)
    return [_field_from(g, k, layout, vh[i].conj(), None) for i in range(rank, M.shape[1])]


def constraint_residual(f: WaveField) -> float:
    """Largest violation of continuity, Kirchhoff and the source jump, relative to the field norm."""
    g = f.graph
    k = f.k
    worst = 0.0
    scale = max(f.norm(), 1e-300)
    nodes: dict = {}
    for eid, ps in f.pieces.items():
        for i, p in enumerate(ps):
            tail = ("v", g.edge(eid).tail) if i == 0 else ("src",)
            nodes.setdefault(tail, []).append((_piece_value(p, k, p.start), _piece_derivative(p, k, p.start)))
            if not math.isinf(p.stop):
                head = ("v", g.edge(eid).head) if i == len(ps) - 1 else ("src",)
                nodes.setdefault(head, []).append((_piece_value(p, k, p.stop), -_piece_derivative(p, k, p.stop)))
    for node, vals in nodes.items():
        v0 = vals[0][0]
        for v, _ in vals[1:]:
            worst = max(worst, abs(v - v0) / scale)
        src = f.source
        at_source = node == ("src",) or (src is not None and src.is_vertex and node == ("v", src.vertex))
        target = 1.0 if at_source else 0.0
        total = sum(d for _, d in vals) / (1j * k)
        worst = max(worst, abs(total - target / (1j * k)) / scale)
    return worst


# ---------------------------------------------------------------------------
# interference on a single reflecting edge


def amplitude_sq_closed_form(x: float, L: float, Gamma: float, k: Wavenumber) -> float:
    a, kp = k.alpha, k.kprime
    c = Gamma * math.exp(-a * L)
    return math.exp(-2 * a * x) + c * c * math.exp(2 * a * (x - L)) + 2 * c * math.exp(-a * L) * math.cos(2 * kp * x - kp * L)


def amplitude_sq_direct(x: float, L: float, Gamma: float, k: Wavenumber) -> float:
    """``|e^{ikx} + c e^{-ik(x - L)}|^2`` evaluated in complex arithmetic."""
    kc = k.k
    c = Gamma * math.exp(-k.alpha * L)
    return abs(cmath.exp(1j * kc * x) + c * cmath.exp(-1j * kc * (x - L))) ** 2


def envelope_sq(x: float, L: float, Gamma: float, k: Wavenumber) -> float:
    a = k.alpha
    c = Gamma * math.exp(-a * L)
    return math.exp(-2 * a * x) + c * c * math.exp(2 * a * (x - L)) + 2 * c * math.exp(-a * L)


def envelope_minimum(L: float, Gamma: float, k: Wavenumber) -> float:
    """Minimizer of the two decaying terms of the envelope."""
    a = k.alpha
    c = Gamma * math.exp(-a * L)
    if a == 0 or c == 0:
        return math.inf
    # e^{-2ax} = c^2 e^{2a(x-L)} at the stationary point
    return L / 2 - math.log(c) / (2 * a)


def first_sidelobe(kprime: float, L: float) -> float:
    """Leftmost positive point where the interference term peaks."""
    if kprime <= 0 or L <= 0:
        raise ValueError("kprime and L must be positive")
    period = math.pi / kprime
    n = math.floor(-L / 2 / period) + 1
    x = L / 2 + n * period
    if x <= 0:
        x += period
    return x


def _superlevel_ok(L: float, Gamma: float, k: Wavenumber, T: float, samples: int) -> bool:
    xs = np.linspace(0.0, L, samples)
    a, kp = k.alpha, k.kprime
    c = Gamma * math.exp(-a * L)
    amp = np.exp(-2 * a * xs) + c * c * np.exp(2 * a * (xs - L)) + 2 * c * math.exp(-a * L) * np.cos(2 * kp * xs - kp * L)
    above = amp > T * T
    if not above[0]:
        return False
    flips = np.count_nonzero(above[1:] != above[:-1])
    return flips <= 1


def select_loss_and_threshold(Gamma: float, kprime: float, L: float, *, samples: int = 10_000, max_doublings: int = 60) -> tuple[float, float]:
    """Smallest sampled-admissible α on the doubling ladder from ``1/L``, and ``T = |u(x_FSL)|``."""
    if not (0 <= Gamma < 1):
        raise ValueError("Gamma must lie in [0, 1)")
    if kprime <= 0 or L <= 0:
        raise ValueError("kprime and L must be positive")
    x_fsl = first_sidelobe(kprime, L)
    alpha = 1.0 / L
    for _ in range(max_doublings + 1):
        k = Wavenumber(kprime, alpha)
        T2 = amplitude_sq_closed_form(x_fsl, L, Gamma, k)
        T = math.sqrt(T2) if T2 > 0 else 0.0
        if T > 0 and T2 < amplitude_sq_closed_form(0.0, L, Gamma, k) and _superlevel_ok(L, Gamma, k, T, samples):
            return alpha, T
        alpha *= 2
    raise AdmissibilityError("no admissible alpha within budget")
