"""Scenario files and the end-to-end pipeline stages."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .config import TOL
from .graph import GraphPoint, MetricGraph, Region, betti
from .helmholtz import Wavenumber, evaluate_edge, solve_fundamental
from .sheaf import cech_cohomology, classify, coboundary_residual, from_quantum_graph, predicted_dims
from .topology import nerve, refine_all, simplicial_betti, verify_good_cover
from .visibility import build_visibility_cover, compact_hull, superlevel_region

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: MetricGraph
    transmitters: tuple[GraphPoint, ...]
    kprime: float
    alpha: float | str  # number or "auto"
    thresholds: str | tuple[float, ...]
    compact_part: Region
    seed: int
    synthetic: bool
    raw: Mapping = field(repr=False, compare=False)
    lemma_length: float | None = None
    open_truncation: float = 0.25

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


def _auto_transmitters(g: MetricGraph, spec: Mapping, rng: np.random.Generator) -> list[GraphPoint]:
    """Evenly spaced points on every edge, jittered by the seed, optionally plus every vertex."""
    spacing = float(spec["spacing"])
    jitter = float(spec.get("jitter", 0.0)) * spacing
    margin = float(spec.get("margin", 0.05))
    pts = []
    for e in g.edges:
        length = float(spec.get("open_reach", spacing)) if e.is_open else e.length
        n = max(1, int(math.ceil(length / spacing)))
        for i in range(n):
            x = (i + 0.5) * length / n + rng.uniform(-jitter, jitter)
            x = min(max(x, margin), length - margin) if not e.is_open else max(x, margin)
            pts.append(GraphPoint(e.id, float(x)))
    if spec.get("at_vertices", False):
        pts.extend(GraphPoint.at_vertex(v) for v in g.vertices)
    return pts


def load_scenario(source: str | Path | Mapping, seed: int | None = None) -> Scenario:
    if isinstance(source, Mapping):
        raw = dict(source)
    else:
        raw = json.loads(Path(source).read_text())
    g = MetricGraph.from_json(raw["graph"])
    seed = int(raw.get("seed", 0) if seed is None else seed)
    rng = np.random.default_rng(seed)
    tx = raw.get("transmitters", [])
    if isinstance(tx, Mapping):
        transmitters = _auto_transmitters(g, tx, rng)
    else:
        transmitters = [GraphPoint.at_vertex(t["vertex"]) if "vertex" in t else g.point(t["edge"], float(t["offset"])) for t in tx]
    wn = raw.get("wavenumber", {"kprime": 1.0, "alpha": "auto"})
    thresholds = raw.get("thresholds", "auto")
    truncation = float(raw.get("open_truncation", 0.25))
    cp = raw.get("compact_part", "all-vertices-hull")
    if cp == "all-vertices-hull":
        compact = compact_hull(g, truncation)
    else:
        compact = Region.from_intervals(g, {k: [tuple(iv) for iv in v] for k, v in cp["intervals"].items()})
    return Scenario(
        name=str(raw.get("name", "scenario")),
        graph=g,
        transmitters=tuple(transmitters),
        kprime=float(wn["kprime"]),
        alpha=wn.get("alpha", "auto"),
        thresholds=thresholds if thresholds == "auto" else tuple(float(x) for x in thresholds),
        compact_part=compact,
        seed=seed,
        synthetic=bool(raw.get("synthetic", True)),
        raw={**raw, "seed": seed},
        lemma_length=raw.get("lemma_length"),
        open_truncation=truncation,
    )


def bundled(name: str) -> Path:
    return Path(str(resources.files("qgr") / "scenarios" / f"{name}.json"))


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("qgr").joinpath("scenarios").iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------------------
# stages


def _round(x: float, digits: int = 12) -> float:
    return float(f"{x:.{digits}g}")


def _region_json(r: Region) -> dict:
    return {"intervals": {k: [[_round(a), "inf" if math.isinf(b) else _round(b)] for a, b in v] for k, v in r.intervals.items()},
            "vertices": [str(v) for v in sorted(r.vertices, key=repr)]}


def visibility_stage(sc: Scenario):
    g = sc.graph
    if sc.thresholds == "auto":
        k0 = Wavenumber(sc.kprime, 0.0 if sc.alpha == "auto" else float(sc.alpha))
        regs, alpha = build_visibility_cover(g, sc.transmitters, k0, sc.compact_part, L=sc.lemma_length,
                                             open_truncation=max(1.0, sc.open_truncation))
        return [r.region for r in regs], alpha
    if sc.alpha == "auto":
        raise ValueError("explicit thresholds need an explicit alpha")
    if len(sc.thresholds) != len(sc.transmitters):
        raise ValueError("one threshold per transmitter")
    k = Wavenumber(sc.kprime, float(sc.alpha))
    regions = [superlevel_region(solve_fundamental(g, y, k), T).region for y, T in zip(sc.transmitters, sc.thresholds)]
    return regions, float(sc.alpha)


def topology_report(sc: Scenario) -> dict:
    regions, alpha = visibility_stage(sc)
    cover = refine_all(regions)
    problems = verify_good_cover(cover)
    nv = nerve(cover)
    b = simplicial_betti(nv)
    out = {
        "alpha": _round(alpha),
        "transmitters": len(sc.transmitters),
        "cover_size": len(cover),
        "good_cover_diagnostics": problems,
        "nerve_simplices": [list(s) for s in nv.simplices],
        "betti": list(b),
    }
    if sc.synthetic:
        truth = betti(sc.graph)
        out["ground_truth_betti"] = list(truth)
        out["matches_ground_truth"] = tuple(b) == truth
    return out


def cohomology_report(sc: Scenario) -> dict:
    alpha = 0.0 if sc.alpha == "auto" else float(sc.alpha)
    k = Wavenumber(sc.kprime, alpha)
    s = from_quantum_graph(sc.graph, k)
    res = cech_cohomology(s)
    c = classify(s)
    out = {"kprime": sc.kprime, "alpha": alpha, "h0": res.h0, "h1": res.h1,
           "counts": {"l": c.l, "lprime": c.lprime, "m": c.m, "n": c.n, "nonresonant_loops": c.nonresonant_loops},
           "coboundary_residual_ok": coboundary_residual(res) < TOL.residual * max(1.0, math.sqrt(res.h0))}
    try:
        pred = predicted_dims(c.l, c.lprime, c.m, c.n)
        out["predicted"] = list(pred)
        out["matches_prediction"] = (res.h0, res.h1) == pred
    except ValueError as exc:
        out["predicted"] = None
        out["prediction_error"] = str(exc)
    return out


def simulate_traces(sc: Scenario, alpha: float, samples: int = 512) -> list[str]:
    """One CSV per transmitter with columns ``edge,offset,amp_sq``."""
    k = Wavenumber(sc.kprime, alpha)
    out = []
    for y in sc.transmitters:
        f = solve_fundamental(sc.graph, y, k)
        lines = ["edge,offset,amp_sq"]
        for e in sc.graph.edges:
            hi = sc.open_truncation if e.is_open else e.length
            if e.is_open and y.edge == e.id:
                hi = max(hi, y.offset + sc.open_truncation)
            xs = np.linspace(0.0, hi, samples)
            vals = np.abs(evaluate_edge(f, e.id, xs)) ** 2
            lines += [f"{e.id},{x:.12g},{v:.12g}" for x, v in zip(xs, vals)]
        out.append("\n".join(lines) + "\n")
    return out
