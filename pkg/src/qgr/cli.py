"""Command line entry point ``qgr``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import TOL
from .geometry import GeometryError, ResidueClass, SectionObservation, extract_geometry, verify_section_consistency
from .helmholtz import Wavenumber, solve_fundamental
from .resonance import ScanError, recover_loop_lengths, resonance_scan
from .scenario import (
    SCHEMA_VERSION,
    Scenario,
    _round,
    bundled,
    bundled_names,
    cohomology_report,
    load_scenario,
    simulate_traces,
    topology_report,
)
from .sheaf import cech_cohomology, from_quantum_graph
from .suites import SUITES, run_suite
from .visibility import CoverGapError, NotContractibleError, shared_loss

log = logging.getLogger("qgr")


class CommandError(RuntimeError):
    pass


def _header(command: str, sc: Scenario | None) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": command, "tolerances": TOL.as_dict()}
    if sc is not None:
        out.update(scenario=sc.name, scenario_hash=sc.digest, seed=sc.seed)
    return out


def _emit(report: dict, out: Path | None, extra: dict[str, str] | None = None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        for name, body in (extra or {}).items():
            (out / name).write_text(body)


def _point_json(p) -> dict:
    return {"vertex": str(p.vertex)} if p.is_vertex else {"edge": p.edge, "offset": _round(p.offset)}


def _alpha_for(sc: Scenario) -> float:
    if sc.alpha != "auto":
        return float(sc.alpha)
    return shared_loss(sc.graph, sc.transmitters, sc.kprime, L=sc.lemma_length)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(sc: Scenario, args) -> tuple[dict, dict]:
    alpha = _alpha_for(sc)
    traces = simulate_traces(sc, alpha)
    files = {f"trace_{i:03d}.csv": body for i, body in enumerate(traces)}
    k = Wavenumber(sc.kprime, alpha)
    sources = []
    for (name, _), y in zip(files.items(), sc.transmitters):
        f = solve_fundamental(sc.graph, y, k)
        sources.append({"source": _point_json(y), "trace": name, "field_norm": _round(f.norm())})
    return {"alpha": _round(alpha), "kprime": sc.kprime, "transmitters": sources}, files


def cmd_topology(sc: Scenario, args) -> tuple[dict, dict]:
    try:
        return topology_report(sc), {}
    except CoverGapError as exc:
        raise CommandError(str(exc)) from exc
    except NotContractibleError as exc:
        raise CommandError(f"not contractible: {exc}") from exc


def cmd_cohomology(sc: Scenario, args) -> tuple[dict, dict]:
    out = cohomology_report(sc)
    files = {}
    if args.scan is not None:
        k_lo, k_hi, grid = float(args.scan[0]), float(args.scan[1]), int(args.scan[2])
        scan = resonance_scan(sc.graph, (k_lo, k_hi), grid)
        files["scan.csv"] = scan.to_csv()
        m = out["counts"]["m"]
        entry = {"grid": grid, "spacing": _round(scan.spacing), "baseline_h1": scan.baseline,
                 "resonances": [[_round(kp), p] for kp, p in scan.resonances]}
        try:
            entry["loop_lengths"] = [_round(x) for x in recover_loop_lengths(scan, m)]
        except ScanError as exc:
            entry["error"] = str(exc)
        out["scan"] = entry
    return out, files


def _length_json(x) -> dict:
    if isinstance(x, ResidueClass):
        return {"residue": _round(x.base), "modulus": _round(x.modulus)}
    return {"length": _round(x)}


def cmd_geometry(sc: Scenario, args) -> tuple[dict, dict]:
    alpha = 0.0 if sc.alpha == "auto" else float(sc.alpha)
    k = Wavenumber(sc.kprime, alpha)
    s = from_quantum_graph(sc.graph, k)
    res = cech_cohomology(s)
    if res.h0 == 0:
        raise CommandError("zero section: no nonzero global solution at this wavenumber")
    recovered = []
    for j in range(res.h0):
        obs = SectionObservation.from_section(s, res, j)
        try:
            geom = extract_geometry(sc.graph, obs, k)
        except GeometryError as exc:
            recovered.append({"section": j, "error": str(exc)})
            continue
        recovered.append({"section": j, "geom": geom, "residual": verify_section_consistency(sc.graph, obs, geom)})
    good = [r for r in recovered if "geom" in r]
    if not good:
        raise CommandError("; ".join(r["error"] for r in recovered))
    first = good[0]["geom"]
    spread = 0.0
    for r in good[1:]:
        for eid, E in r["geom"].endomorphisms.items():
            spread = max(spread, abs(E - first.endomorphisms[eid]))
    edges = {}
    for eid in sorted(first.endomorphisms):
        E = first.endomorphisms[eid]
        edges[eid] = {"chain": list(first.chains[eid]), "endomorphism": [_round(E.real), _round(E.imag)],
                      **_length_json(first.lengths[eid])}
    return {"kprime": sc.kprime, "alpha": alpha, "h0": res.h0, "edges": edges,
            "sections_used": len(good), "cross_section_spread": _round(spread),
            "consistency_residual": _round(max(r["residual"] for r in good)),
            "diagnostics": sorted(set(d for r in good for d in r["geom"].diagnostics)
                                  | {f"section {r['section']}: {r['error']}" for r in recovered if "error" in r})}, {}


COMMANDS = {"simulate": cmd_simulate, "topology": cmd_topology, "cohomology": cmd_cohomology, "geometry": cmd_geometry}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [run_suite(n, seed=args.seed or 0) for n in names]
    for r in results:
        print(r.line(), file=sys.stderr)
    report = _header("verify", None)
    report.update(suite=args.suite, passed=all(r.passed for r in results), results=[r.to_json() for r in results])
    _emit(json.loads(json.dumps(report, default=_json_default)), args.out)
    return 0 if report["passed"] else 1


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return str(x)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgr", description="Quantum graph simulation, topology and geometry recovery.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="directory for report.json and CSV files")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("-v", "--verbose", action="store_true")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--scenario", required=True, help="scenario JSON file or bundled scenario name")
        if name == "cohomology":
            sp.add_argument("--scan", nargs=3, metavar=("K_LO", "K_HI", "GRID"), help="lossless wavenumber scan")
    vp = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    vp.add_argument("suite", choices=sorted(SUITES) + ["all"])
    vp.add_argument("--scenario", help="accepted for interface symmetry; suites use bundled scenarios")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    source = args.scenario
    if not Path(source).exists() and source in bundled_names():
        source = bundled(source)
    try:
        sc = load_scenario(source, args.seed)
    except (OSError, ValueError, KeyError) as exc:
        print(f"qgr: cannot load scenario: {exc}", file=sys.stderr)
        return 2
    report = _header(args.command, sc)
    try:
        body, files = COMMANDS[args.command](sc, args)
    except CommandError as exc:
        report["error"] = str(exc)
        _emit(report, args.out)
        print(f"qgr: {exc}", file=sys.stderr)
        return 1
    report.update(body)
    _emit(report, args.out, files)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
