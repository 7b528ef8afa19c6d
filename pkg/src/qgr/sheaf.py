"""Transmission-line sheaves and their Čech cohomology.

Section coordinates are departure-referenced.  The star over a vertex ``v``
stores one value ``z_h`` per incident half-edge ``h``.  That value is the
amplitude that left the far end of the edge heading toward ``v``, so the wave
arriving at ``v`` is ``E_h z_h``.  The Kirchhoff coding gives the amplitude
leaving ``v`` along ``h``:

    phi_h(z) = (2/n) sum_j E_j z_j - E_h z_h

An edge interval stores the pair (leaving the tail, leaving the head).  Open
edges use ``E = 1`` unless told otherwise, and their single interval stores
(outgoing, incoming).  Loops get two intervals ``K`` and ``H`` that overlap
in the middle.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np
import sympy

from .config import TOL
from .graph import MetricGraph, collapse_edge


class SheafError(ValueError):
    pass


def complex_k(k) -> complex:
    """Accept a complex number or an object with ``kprime``/``alpha``."""
    if hasattr(k, "kprime"):
        return complex(k.kprime, k.alpha)
    return complex(k)


@dataclass(frozen=True)
class TransmissionLineSheaf:
    graph: MetricGraph
    endomorphisms: Mapping[str, complex]
    k: complex | None = None

    def __post_init__(self):
        full = {}
        for e in self.graph.edges:
            value = self.endomorphisms.get(e.id, 1 if e.is_open else None)
            if value is None:
                raise SheafError(f"edge {e.id}: missing endomorphism")
            if value == 0:
                raise SheafError(f"edge {e.id}: zero endomorphism")
            full[e.id] = value
        object.__setattr__(self, "endomorphisms", full)

    def E(self, eid: str):
        return self.endomorphisms[eid]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction, sympy.Rational)) for v in self.endomorphisms.values())


def from_quantum_graph(g: MetricGraph, k) -> TransmissionLineSheaf:
    """Edge endomorphisms ``exp(i k L)``; open edges carry the identity."""
    kc = complex_k(k)
    ends = {e.id: (1.0 + 0j if e.is_open else cmath.exp(1j * kc * e.length)) for e in g.edges}
    return TransmissionLineSheaf(g, ends, kc)


def with_endomorphisms(g: MetricGraph, values: Mapping[str, complex]) -> TransmissionLineSheaf:
    return TransmissionLineSheaf(g, dict(values))


# ---------------------------------------------------------------------------
# resonance bookkeeping


def is_resonant(E, tol: float | None = None) -> bool:
    tol = TOL.resonance if tol is None else tol
    return abs(complex(E) - 1) <= tol


def is_closed_resonant(E, tol: float | None = None) -> bool:
    tol = TOL.resonance if tol is None else tol
    E = complex(E)
    return abs(E - 1 / E) <= tol


@dataclass(frozen=True)
class EdgeCounts:
    l: int  # closed edges
    lprime: int  # closed edges with E = E^-1
    m: int  # open edges
    n: int  # resonant loops
    nonresonant_loops: int


def classify(s: TransmissionLineSheaf) -> EdgeCounts:
    l = lp = m = n = other = 0
    for e in s.graph.edges:
        E = s.E(e.id)
        if e.kind == "closed":
            l += 1
            lp += is_closed_resonant(E)
        elif e.kind == "open":
            m += 1
        elif e.kind == "loop":
            if is_resonant(E):
                n += 1
            else:
                other += 1
    return EdgeCounts(l, lp, m, n, other)


def predicted_dims(l: int, lprime: int, m: int, n: int) -> tuple[int, int]:
    """Case table for ``(H^0, H^1)`` from the edge counts, transcribed as published."""
    if min(l, lprime, m, n) < 0 or lprime > l:
        raise ValueError("need 0 <= lprime <= l and nonnegative counts")
    if l == m == n == 0:
        raise ValueError("degenerate graph")
    corr = min(0, lprime - 1)
    if l == 0 and m == 0:
        return n + 1, n + 1
    if l == 0:
        return n + m, n
    if m == 0:
        return n + 1 + corr, n + 1 + corr
    return n + m + corr, n + corr


# ---------------------------------------------------------------------------
# Čech complex


@dataclass(frozen=True)
class CechComplex:
    matrix: object  # numpy array, or sympy Matrix in exact mode
    c0_labels: tuple
    c1_labels: tuple
    star_columns: Mapping  # (vertex, (eid, end)) -> column

    @property
    def c0_dim(self) -> int:
        return len(self.c0_labels)

    @property
    def c1_dim(self) -> int:
        return len(self.c1_labels)

    @property
    def exact(self) -> bool:
        return isinstance(self.matrix, sympy.MatrixBase)


@dataclass(frozen=True)
class CohomologyResult:
    h0: int
    h1: int
    global_sections: np.ndarray  # columns span the kernel of the coboundary
    complex: CechComplex = field(repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.h0, self.h1

    @property
    def euler(self) -> int:
        return self.h0 - self.h1


def _coding_entries(s: TransmissionLineSheaf, v, h, exact: bool):
    """Sparse row of ``phi_h`` over the star columns of ``v``."""
    halves = s.graph.half_edges(v)
    n = len(halves)
    two_n = sympy.Rational(2, n) if exact else 2.0 / n
    row: dict = {}
    for hh in halves:
        row[hh] = row.get(hh, 0) + two_n * s.E(hh[0])
    row[h] = row.get(h, 0) - s.E(h[0])
    return row


def _rational(v):
    if isinstance(v, Fraction):
        return sympy.Rational(v.numerator, v.denominator)
    return sympy.Rational(v)


def cech_complex(s: TransmissionLineSheaf, exact: bool | None = None) -> CechComplex:
    g = s.graph
    if not g.edges:
        raise SheafError("empty graph")
    exact = s.is_exact if exact is None else exact
    if exact and not s.is_exact:
        raise SheafError("exact mode needs rational endomorphisms")
    if exact:
        s = TransmissionLineSheaf(g, {k: _rational(v) for k, v in s.endomorphisms.items()}, s.k)

    c0: list = []
    star_col: dict = {}
    for v in g.vertices:
        for h in g.half_edges(v):
            star_col[(v, h)] = len(c0)
            c0.append(("star", v, h))
    interval_col: dict = {}
    for e in g.edges:
        parts = ("K", "H") if e.is_loop else ("I",)
        for part in parts:
            for comp in (0, 1):
                interval_col[(e.id, part, comp)] = len(c0)
                c0.append(("interval", e.id, part, comp))

    rows: list[dict] = []
    labels: list = []

    def phi(v, h):
        return {star_col[(v, hh)]: c for hh, c in _coding_entries(s, v, h, exact).items()}

    def proj(v, h):
        return {star_col[(v, h)]: 1}

    def emit(label, from_star: dict, icol: int):
        row = dict(from_star)
        row[icol] = row.get(icol, 0) - 1
        rows.append(row)
        labels.append(label)

    for e in g.edges:
        if e.is_open:
            v, h = e.tail, (e.id, 0)
            emit((e.id, "out"), phi(v, h), interval_col[(e.id, "I", 0)])
            emit((e.id, "in"), proj(v, h), interval_col[(e.id, "I", 1)])
        elif e.is_loop:
            v = e.tail
            emit((e.id, "K", 0), phi(v, (e.id, 0)), interval_col[(e.id, "K", 0)])
            emit((e.id, "K", 1), proj(v, (e.id, 0)), interval_col[(e.id, "K", 1)])
            for comp in (0, 1):
                emit((e.id, "KH", comp), {interval_col[(e.id, "K", comp)]: 1}, interval_col[(e.id, "H", comp)])
            emit((e.id, "H", 0), proj(v, (e.id, 1)), interval_col[(e.id, "H", 0)])
            emit((e.id, "H", 1), phi(v, (e.id, 1)), interval_col[(e.id, "H", 1)])
        else:
            a, b = e.endpoints
            emit((e.id, "tail", 0), phi(a, (e.id, 0)), interval_col[(e.id, "I", 0)])
            emit((e.id, "tail", 1), proj(a, (e.id, 0)), interval_col[(e.id, "I", 1)])
            emit((e.id, "head", 0), proj(b, (e.id, 1)), interval_col[(e.id, "I", 0)])
            emit((e.id, "head", 1), phi(b, (e.id, 1)), interval_col[(e.id, "I", 1)])

    ncols = len(c0)
    if exact:
        M = sympy.zeros(len(rows), ncols)
        for i, row in enumerate(rows):
            for j, c in row.items():
                M[i, j] += c
    else:
        M = np.zeros((len(rows), ncols), dtype=complex)
        for i, row in enumerate(rows):
            for j, c in row.items():
                M[i, j] += complex(c)
    return CechComplex(M, tuple(c0), tuple(labels), star_col)


def numerical_rank(M: np.ndarray, tol: float | None = None) -> tuple[int, np.ndarray]:
    """Rank by singular-value cutoff; also returns the singular values.

    The cutoff is relative to the largest singular value but never below the
    unit scale of the matrix entries, so a matrix that is zero up to rounding
    has rank zero.
    """
    tol = TOL.rank if tol is None else tol
    if M.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1.0))), s


def cech_cohomology(s: TransmissionLineSheaf, exact: bool | None = None) -> CohomologyResult:
    cx = cech_complex(s, exact)
    M = cx.matrix
    if cx.exact:
        rank = M.rank()
        basis = M.nullspace()
        sections = np.array([[complex(x) for x in col] for col in basis], dtype=complex).T if basis else np.zeros((cx.c0_dim, 0), complex)
    else:
        rank, _ = numerical_rank(M)
        _, _, vh = np.linalg.svd(M)
        sections = vh[rank:].conj().T
    return CohomologyResult(cx.c0_dim - rank, cx.c1_dim - rank, sections, cx)


def cohomology_dims(s: TransmissionLineSheaf) -> tuple[int, int]:
    return cech_cohomology(s).dims


def coboundary_residual(result: CohomologyResult) -> float:
    M = result.complex.matrix
    if result.complex.exact:
        M = np.array(M.tolist(), dtype=complex)
    if result.global_sections.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(M @ result.global_sections, axis=0)))


def star_values(s: TransmissionLineSheaf, result: CohomologyResult, column) -> dict:
    """Map ``(vertex, (eid, end)) -> z`` for one section (index or vector)."""
    vec = result.global_sections[:, column] if np.ndim(column) == 0 else np.asarray(column)
    return {key: complex(vec[c]) for key, c in result.complex.star_columns.items()}


def arriving_amplitudes(s: TransmissionLineSheaf, result: CohomologyResult, column) -> dict:
    """Amplitude arriving at each vertex along each half-edge, ``E_h z_h``."""
    return {key: s.E(key[1][0]) * z for key, z in star_values(s, result, column).items()}


# ---------------------------------------------------------------------------
# edge collapses


def collapse_tl_edge(s: TransmissionLineSheaf, eid: str, side: str = "tail") -> TransmissionLineSheaf:
    """Collapse a segment, composing its endomorphism onto one side.

    With ``side="tail"`` every other half-edge at the tail vertex picks up a
    factor ``L``; with ``side="head"`` the head-side half-edges pick up
    ``L^-1``.  A loop at the composed vertex leaves and returns through the
    same side, so the factors cancel and its endomorphism is kept.
    """
    g = s.graph
    e = g.edge(eid)
    if e.kind != "segment":
        if e.kind == "closed":
            raise SheafError("degree-1 endpoint")
        raise SheafError(f"cannot collapse {e.kind} edge as a segment")
    if g.degree(e.tail) < 2 or g.degree(e.head) < 2:
        raise SheafError("degree-1 endpoint")
    if side not in ("tail", "head"):
        raise ValueError("side must be 'tail' or 'head'")
    L = s.E(eid)
    pivot, factor = (e.tail, L) if side == "tail" else (e.head, 1 / L)
    new_E = {}
    for x in g.edges:
        if x.id == eid:
            continue
        hit = pivot in x.endpoints and not x.is_loop
        new_E[x.id] = s.E(x.id) * factor if hit else s.E(x.id)
    target, _ = collapse_edge(g, eid)
    return TransmissionLineSheaf(target, new_E, s.k)


def collapse_nonresonant_loop(s: TransmissionLineSheaf, eid: str) -> TransmissionLineSheaf:
    g = s.graph
    e = g.edge(eid)
    if not e.is_loop:
        raise SheafError("not a loop")
    if is_resonant(s.E(eid)):
        raise SheafError("resonant loop")
    if len(g.edges) == 1:
        raise SheafError("degenerate graph")
    target, _ = collapse_edge(g, eid)
    return TransmissionLineSheaf(target, {k: v for k, v in s.endomorphisms.items() if k != eid}, s.k)


def collapse_to_bouquet(s: TransmissionLineSheaf) -> TransmissionLineSheaf:
    """Remove nonresonant loops, then collapse a spanning tree of segments.

    Loops that appear along the way are removed too when nonresonant, as
    long as at least one edge remains.
    """
    from .graph import spanning_tree

    def strip(sh):
        changed = True
        while changed:
            changed = False
            for x in sh.graph.edges:
                if x.is_loop and not is_resonant(sh.E(x.id)) and len(sh.graph.edges) > 1:
                    sh = collapse_nonresonant_loop(sh, x.id)
                    changed = True
                    break
        return sh

    s = strip(s)
    while True:
        seg = [x for x in spanning_tree(s.graph, exclude_closed=True) if s.graph.edge(x).kind == "segment"]
        if not seg:
            return s
        s = strip(collapse_tl_edge(s, seg[0]))


def euler_invariant(s: TransmissionLineSheaf) -> dict:
    """Dims plus the Euler and loop-count checks, for graphs without closed edges."""
    if any(e.kind == "closed" for e in s.graph.edges):
        raise SheafError("closed edges present")
    from .graph import betti

    h0, h1 = cohomology_dims(s)
    m = s.graph.counts()["open"]
    b1 = betti(s.graph)[1]
    return {"h0": h0, "h1": h1, "chi": h0 - h1, "m": m, "b1": b1, "chi_equals_m": h0 - h1 == m, "h1_le_b1": h1 <= b1}
