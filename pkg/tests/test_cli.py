import json
import math
import subprocess
import sys

import pytest

from lengthlab.cli import EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dist(capsys):
    code, out, _ = run(capsys, "dist", "--space", "flat_disk", "--from", "0,0", "--to", "0.3,0.4")
    assert code == EXIT_OK and float(out) == 0.5


def test_dist_named_points_sphere(capsys):
    code, out, _ = run(capsys, "dist", "--space", "unit_sphere", "--from", "n", "--to", "e")
    assert code == EXIT_OK and abs(float(out) - math.pi / 2) < 1e-9


def test_input_errors(capsys):
    code, _, err = run(capsys, "dist", "--space", "nosuch", "--from", "0", "--to", "1")
    assert code == EXIT_INPUT and "unknown space" in err
    code, _, err = run(capsys, "dist", "--space", "flat_disk", "--from", "7,7", "--to", "0,0")
    assert code == EXIT_INPUT
    code, _, err = run(capsys, "ab-constants", "--T0", "0.1", "--bogus", "1")
    assert code == EXIT_INPUT


def test_radii_pinned_sector(capsys):
    code, out, _ = run(capsys, "radii", "--space", "pinned_sector", "--point", "p1", "--horizon", "10",
                       "--no-ult-conj")
    assert code == EXIT_OK
    header, row = out.strip().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert abs(float(rec["FirstInj"]) - math.pi) < 2e-2
    assert rec["MinRad"] == ">=10"
    assert rec["UltConj"] == "skipped"


def test_klingenberg_with_builder_params(capsys):
    code, out, _ = run(capsys, "klingenberg", "--space", "circle_chord", "--r0", "1", "--chord", "1")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["branch"] == "loop" and abs(rec["loop_length"] - 2.0) < 1e-3


def test_violation_and_inconclusive_codes(capsys):
    code, out, _ = run(capsys, "ab-constants", "--T0", "2.0")
    assert code == EXIT_VIOLATION and json.loads(out)["ok"] is False
    # a counterexample against an unclaimed bound is a finding, not a violation
    code, out, _ = run(capsys, "rauch", "--space", "flat_plane", "--mode", "triangles", "--kappa", "-1",
                       "--count", "10")
    rec = json.loads(out)
    assert code == EXIT_OK and rec["claimed_cba"] is False and not rec["ok"]
    code, out, _ = run(capsys, "homotopy", "--fixture", "equator-rotate", "--ult-bound", "4", "--S", "16",
                       "--T", "8")
    assert code == EXIT_VIOLATION and json.loads(out)["status"] == "ult_bound_violation"
    # the branch count on line_pile explodes long before length 40
    code, _, _ = run(capsys, "geodesics", "--space", "line_pile", "--from", "p", "--to", "q", "--lmax", "40")
    assert code == EXIT_INCONCLUSIVE


def test_outputs_are_deterministic_and_manifest(tmp_path, capsys):
    outs = []
    for i in range(2):
        out, man = tmp_path / f"g{i}.csv", tmp_path / f"m{i}.json"
        code = main(["geodesics", "--space", "flat_torus", "--from", "0.2,0.3", "--to", "0.7,0.8",
                     "--lmax", "0.75", "--out", str(out), "--manifest", str(man)])
        assert code == EXIT_OK
        outs.append((out.read_bytes(), man.read_bytes()))
    assert outs[0][0] == outs[1][0]
    m0, m1 = json.loads(outs[0][1]), json.loads(outs[1][1])
    assert m0["space_hash"] == m1["space_hash"]
    assert m0["command"] == "geodesics"
    assert len(outs[0][0].decode().splitlines()) == 5


def test_rauch_meridian_json(capsys):
    code, out, _ = run(capsys, "rauch", "--space", "unit_sphere", "--mode", "meridian")
    recs = [json.loads(x) for x in out.splitlines()]
    assert code == EXIT_OK and len(recs) == 3
    assert all(r["holds"] for r in recs)


def test_fan_and_space(capsys):
    code, out, _ = run(capsys, "fan", "--space", "flat_torus", "--random", "2")
    assert code == EXIT_OK and all(json.loads(x)["length_check"] for x in out.splitlines())
    code, out, _ = run(capsys, "space", "describe", "--space", "unit_sphere")
    assert code == EXIT_OK and json.loads(out)["cba_kappa"] == 1.0


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("LENGTHLAB_THREADS", "x")
    code, _, err = run(capsys, "radii", "--space", "circle", "--point", "0", "--horizon", "1", "--no-ult-conj")
    assert code == EXIT_INPUT and "LENGTHLAB_THREADS" in err


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "lengthlab.cli", "dist", "--space", "circle", "--from", "0",
                        "--to", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and abs(float(r.stdout) - 1.0) < 1e-12
