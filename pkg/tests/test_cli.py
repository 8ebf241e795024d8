import json
import subprocess
import sys

import numpy as np
import pytest

from spaceform_widths.cli import (EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, OUT_ENV, ConfigError,
                                  _parser, build_config, export_fixture, main, read_config,
                                  run_suite)
from spaceform_widths.stability import SurfaceMesh, check_minimality
from spaceform_widths.suites import Check, RunConfig
from spaceform_widths.varifold import DiscreteVarifold


def test_widths_suite_passes(tmp_path, capsys):
    assert main(["--suite", "widths", "--out", str(tmp_path)]) == EXIT_PASS
    rep = json.loads((tmp_path / "widths.json").read_text())
    assert rep["passed"] and rep["counts"]["fail"] == 0
    assert (tmp_path / "widths.csv").read_text().startswith("name,status,measured")
    assert "[PASS] widths" in capsys.readouterr().out


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["--suite", "widths,isoperimetric", "--seed", "7", "--out", str(d)]) == 0
    for name in ("widths.json", "widths.csv", "isoperimetric.json", "isoperimetric.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_parallel_matches_sequential(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--suite", "widths,isoperimetric", "--out", str(a)])
    main(["--suite", "widths,isoperimetric", "--out", str(b), "--jobs", "2"])
    assert (a / "widths.json").read_bytes() == (b / "widths.json").read_bytes()


def test_failing_check_sets_exit_code_and_names_anchor(tmp_path, capsys):
    code = main(["--suite", "isoperimetric", "--tolerance-scale", "1e-9", "--out", str(tmp_path)])
    assert code == EXIT_FAIL
    out = capsys.readouterr().out
    assert "FAIL divergence identity equality" in out
    assert "measured" in out and "vs expected" in out
    rep = json.loads((tmp_path / "isoperimetric.json").read_text())
    failed = [c for c in rep["checks"] if c["status"] == "fail"]
    assert failed and all(c["anchor"] for c in failed)


@pytest.mark.parametrize("argv", [
    ["--suite", "nonsense"],
    ["--suite", "widths", "--tolerance-scale", "0"],
    ["--suite", "widths", "--seed", "abc"],
    ["export", "no-such-fixture", "--path", "x"],
])
def test_configuration_errors(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path)] if argv[0] != "export" else [])) == EXIT_CONFIG


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsuite = isoperimetric\nseed = 3  # trailing\ntolerance-scale = 2.5\n")
    assert read_config(cfg) == {"suite": "isoperimetric", "seed": 3, "tolerance_scale": 2.5}
    args = _parser().parse_args(["--config", str(cfg), "--seed", "9"])
    c = build_config(args, environ={})
    assert (c.suite, c.seed, c.tolerance_scale) == ("isoperimetric", 9, 2.5)


@pytest.mark.parametrize("text", ["bogus = 1\n", "seed = x\n", "no equals sign\n"])
def test_config_file_errors(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    with pytest.raises(ConfigError):
        read_config(cfg)
    assert main(["--config", str(cfg)]) == EXIT_CONFIG


def test_environment_overrides_config_but_not_flag(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("out = from-config\n")
    env = {OUT_ENV: "from-env"}
    assert build_config(_parser().parse_args(["--config", str(cfg)]), env).out == "from-env"
    args = _parser().parse_args(["--config", str(cfg), "--out", "from-flag"])
    assert build_config(args, env).out == "from-flag"


def test_environment_variable_end_to_end(tmp_path):
    out = tmp_path / "envout"
    proc = subprocess.run([sys.executable, "-m", "spaceform_widths", "--suite", "widths"],
                          cwd=tmp_path, env={**__import__("os").environ, OUT_ENV: str(out)},
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "widths.json").exists()


def test_run_suite_stability_lambda_negative():
    rep = run_suite("stability", RunConfig(suite="stability", resolution=8))
    lam = [c for c in rep["checks"] if "lambda_1 < 0" in c["name"]]
    assert len(lam) == 4 and all(c["status"] == "pass" for c in lam)


def test_run_suite_unknown():
    with pytest.raises(ConfigError):
        run_suite("nope", RunConfig())


def test_check_relations():
    assert Check("a", 1.0, 1.0, 0.0, "abs", "p", "x").status == "pass"
    assert Check("a", 0.5, 1.0, 0.1, "ge", "p", "x").failed
    assert Check("a", 2.0, 1.0, 0.0, "le", "p", "x", gate=False).status == "info-fail"
    assert not Check("a", 2.0, 1.0, 0.0, "le", "p", "x", gate=False).failed
    assert Check("a", float("nan"), 1.0, 1.0, "abs", "p", "x").failed
    with pytest.raises(ValueError):
        Check("a", 1.0, 1.0, 0.0, "near", "p", "x")


def test_export_varifold(tmp_path):
    p = export_fixture("equatorial-disk", 30, tmp_path / "disk.jsonl")
    V = DiscreteVarifold.from_jsonl(p)
    assert len(V) == pytest.approx(np.pi * 30**2, rel=0.02)
    assert V.w.sum() == pytest.approx(np.pi)


def test_export_catenoid_mesh(tmp_path):
    assert main(["export", "critical-catenoid", "--resolution", "64",
                 "--path", str(tmp_path / "cat.off")]) == EXIT_PASS
    mesh = SurfaceMesh.from_off(tmp_path / "cat.off")
    assert check_minimality(mesh) <= 1e-3


def test_export_hyperbolic_disk(tmp_path):
    mesh = SurfaceMesh.from_off(export_fixture("geodesic-disk-hyperbolic", 12, tmp_path / "h.off"))
    assert mesh.K == -1.0
    assert np.max(np.abs(mesh.radii()[mesh.boundary_vertices] - 1.0)) <= 1e-8
