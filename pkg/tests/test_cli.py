import json
import os
import subprocess
import sys

import pytest

from qgr.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_topology_matches_ground_truth(capsys, tmp_path):
    code, out = run(capsys, "topology", "--scenario", "circle", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out.out)
    assert rep["betti"] == rep["ground_truth_betti"] == [1, 1]
    assert rep["good_cover_diagnostics"] == []
    assert json.loads((tmp_path / "report.json").read_text()) == rep


def test_reports_are_deterministic(capsys):
    _, a = run(capsys, "topology", "--scenario", "interval", "--seed", "3")
    _, b = run(capsys, "topology", "--scenario", "interval", "--seed", "3")
    assert a.out == b.out
    assert json.loads(a.out)["seed"] == 3


def test_simulate_writes_traces(capsys, tmp_path):
    code, out = run(capsys, "simulate", "--scenario", "tlexample", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out.out)
    assert len(rep["transmitters"]) == 1
    lines = (tmp_path / "trace_000.csv").read_text().splitlines()
    assert lines[0] == "edge,offset,amp_sq" and len(lines) > 100


def test_cohomology_with_scan(capsys, tmp_path):
    code, out = run(capsys, "cohomology", "--scenario", "bouquet", "--scan", "0", "20", "4000", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out.out)
    assert sorted(rep["scan"]["loop_lengths"]) == pytest.approx([1.0, 2**0.5], rel=1e-6)
    assert (tmp_path / "scan.csv").exists()


def test_geometry_recovers_loop(capsys):
    code, out = run(capsys, "geometry", "--scenario", "tlexample")
    assert code == 0
    rep = json.loads(out.out)
    assert rep["edges"]["p"]["length"] == pytest.approx(1.0, rel=1e-6)


def test_geometry_without_sections_fails(capsys, tmp_path):
    sc = {"name": "lossy", "graph": {"vertices": [0, 1, 2], "edges": [
        {"id": "a", "v": [0, 1], "length": 1.0}, {"id": "b", "v": [1, 2], "length": 1.1},
        {"id": "c", "v": [2, 0], "length": 0.9}]},
        "transmitters": [{"edge": "a", "offset": 0.5}], "wavenumber": {"kprime": 2.0, "alpha": 0.3}}
    path = tmp_path / "lossy.json"
    path.write_text(json.dumps(sc))
    code, out = run(capsys, "geometry", "--scenario", str(path))
    assert code == 1
    assert "zero section" in json.loads(out.out)["error"]


def test_missing_scenario_file(capsys):
    code, out = run(capsys, "topology", "--scenario", "/nonexistent/file.json")
    assert code == 2 and "cannot load" in out.err


def test_verify_exit_codes(capsys):
    code, out = run(capsys, "verify", "collapse")
    assert code == 0 and "[PASS]" in out.err
    code, out = run(capsys, "verify", "euler")
    assert code == 1 and "[FAIL]" in out.err
    with pytest.raises(SystemExit) as info:
        main(["verify", "nonsense"])
    assert info.value.code == 2


def test_tolerance_overrides_reach_reports():
    env = dict(os.environ, QGR_TOL_OVERRIDES=json.dumps({"rank": 1e-8}))
    proc = subprocess.run([sys.executable, "-m", "qgr.cli", "cohomology", "--scenario", "tlexample"],
                          capture_output=True, text=True, env=env, check=True)
    assert json.loads(proc.stdout)["tolerances"]["rank"] == 1e-8


def test_unknown_tolerance_key_is_rejected():
    env = dict(os.environ, QGR_TOL_OVERRIDES=json.dumps({"bogus": 1}))
    proc = subprocess.run([sys.executable, "-m", "qgr.cli", "cohomology", "--scenario", "tlexample"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode != 0 and "unknown tolerance keys" in proc.stderr
