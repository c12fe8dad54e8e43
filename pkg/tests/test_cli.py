import logging

import numpy as np
import pytest

from polyheat import kernels
from polyheat.cli import main


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path / "out"), "--cache-dir", str(tmp_path / "cache")])


def _props(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_kernel_sidecar_and_cache_hit(tmp_path, caplog, monkeypatch):
    monkeypatch.setenv("POLYHEAT_CACHE", str(tmp_path / "env_cache"))
    monkeypatch.setattr(kernels, "_memory_cache", {})
    with caplog.at_level(logging.INFO, logger="polyheat"):
        assert run(tmp_path, "kernel", "--kind", "stable", "--theta", "1") == 0
    assert any("cache: miss" in r.message for r in caplog.records)
    props = _props(tmp_path / "out" / "kernel_stable_1_N1.props")
    assert abs(float(props["mass"]) - 1) < 1e-6
    assert float(props["value_at_origin"]) == pytest.approx(1 / np.pi, rel=1e-10)
    caplog.clear()
    with caplog.at_level(logging.INFO, logger="polyheat"):
        monkeypatch.setattr(kernels, "_memory_cache", {})
        assert run(tmp_path, "kernel", "--kind", "stable", "--theta", "1") == 0
    assert list((tmp_path / "env_cache").iterdir())
    assert any("cache: hit" in r.message for r in caplog.records)
    assert _props(tmp_path / "out" / "kernel_stable_1_N1.props")["checksum"] == props["checksum"]


def test_classify_dirac(tmp_path, capsys):
    assert run(tmp_path, "classify", "--data", "kind=dirac mass=1") == 0
    assert capsys.readouterr().out.strip() == "EXISTS_BY thm1.3"
    lines = (tmp_path / "out" / "classify.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "criterion,verdict,quantity,threshold,gamma,note"


def test_classify_supercritical_dirac(tmp_path, capsys):
    assert run(tmp_path, "classify", "--p", "6", "--data", "kind=dirac mass=1") == 0
    assert capsys.readouterr().out.strip() == "NONEXISTENCE_BY cor1.2"


def test_solve_zero_data(tmp_path, capsys):
    assert run(tmp_path, "solve", "--n", "64", "--L", "8") == 0
    assert "status=converged" in capsys.readouterr().out
    out = tmp_path / "out"
    assert (out / "solve_report.csv").exists() and (out / "norm_history.csv").exists()
    assert len(list((out / "snapshots").glob("snap_*.txt"))) == 33


def test_solve_then_diagnose(tmp_path, capsys):
    args = ["--data", "kind=dirac mass=0.02", "--n", "512", "--nt", "128", "--tol", "1e-6"]
    assert run(tmp_path, "solve", *args) == 0
    assert run(tmp_path, "diagnose", *args) == 0
    assert capsys.readouterr().out.strip().endswith("flagged=false")
    lines = (tmp_path / "out" / "diagnose.csv").read_text().splitlines()
    assert lines[1] == "R,m_R,LHS,RHS,ratio" and len(lines) == 6


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "solve", "--n", "100") == 2
    assert run(tmp_path, "classify", "--set", "bogus=1") == 2
    assert run(tmp_path, "solve", "--n", "64", "--L", "8", "--data", "kind=dirac mass=5") == 4
    assert run(tmp_path, "solve", "--n", "16", "--L", "8", "--nt", "32", "--force", "--max-iter", "200",
               "--data", "kind=constant c=2") == 3
    err = capsys.readouterr().err
    assert "error: config:" in err and "error: no_contraction:" in err
    assert run(tmp_path, "diagnose", "--snapshots", str(tmp_path / "missing")) == 2


def test_config_file_and_set_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("data.kind=dirac\ndata.mass=1\np=2\n")
    assert main(["classify", "--config", str(cfg), "--set", "p=1.5", "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "classify.csv").read_text()
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 0
    assert text.splitlines()[0] != (tmp_path / "o2" / "classify.csv").read_text().splitlines()[0]


def test_csvs_byte_identical_across_runs(tmp_path):
    args = ["solve", "--data", "kind=gaussian c=0.01 width=1", "--n", "64", "--L", "8", "--nt", "32"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("norm_history.csv", "solve_report.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sa = sorted((tmp_path / "a" / "snapshots").iterdir())
    sb = sorted((tmp_path / "b" / "snapshots").iterdir())
    assert [f.read_bytes() for f in sa] == [f.read_bytes() for f in sb]
