import csv
import json

import numpy as np
import pytest

from dswave.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from dswave.raster import read_csv_grid


def _diag(path):
    with open(path) as fh:
        return np.array(list(csv.reader(fh))[1:], dtype=float)


def test_usage_errors():
    assert main(["bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["run", "preset:nope"]) == EXIT_USAGE
    assert main(["certify", "preset:dry", "--center", "0.5,0.5,0.5"]) == EXIT_USAGE
    assert main(["check", "preset:dry", "--k-ladder", "0"]) == EXIT_USAGE


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "none.toml")]) == EXIT_USAGE


def test_run_dry_stays_dry(tmp_path):
    assert main(["run", "preset:dry", "--out", str(tmp_path)]) == EXIT_OK
    snaps = sorted((tmp_path / "snapshots").glob("snap_*_v.csv"))
    assert snaps and all(np.all(read_csv_grid(p) == 0.0) for p in snaps)
    d = _diag(tmp_path / "diagnostics.csv")
    assert np.all(d[:, 2] == 0.0) and np.all(d[:, 3] == 0.0)


def test_lake_at_rest_is_still(tmp_path):
    assert main(["run", "preset:lake_at_rest", "--out", str(tmp_path)]) == EXIT_OK
    d = _diag(tmp_path / "diagnostics.csv")
    assert np.max(np.abs(d[:, 4] - d[0, 4])) <= 1e-12
    assert np.max(np.abs(d[:, 2] - d[0, 2])) <= 1e-12 * d[0, 2]


def test_certify_dry_and_reused_snapshots(tmp_path):
    assert main(["run", "preset:dry", "--out", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "cert.json"
    code = main(
        ["certify", "preset:dry", "--center", "0.5,0.5,0.5", "--rho", "0.25",
         "--snapshots", str(tmp_path / "snapshots"), "--out", str(out)]
    )
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["bound_satisfied"] and rep["measured_sup"] == 0.0
    assert main(["certify", "preset:dry", "--center", "0.5,0.5,0.5", "--rho", "0.9", "--out", str(out)]) == EXIT_USAGE


def test_corrupted_snapshot_is_a_usage_error(tmp_path):
    main(["run", "preset:dry", "--out", str(tmp_path)])
    (tmp_path / "snapshots" / "snap_00002_v.csv").write_text("garbage\n")
    code = main(["check", "preset:dry", "--snapshots", str(tmp_path / "snapshots"), "--out", str(tmp_path / "r.json")])
    assert code == EXIT_USAGE


def test_check_writes_report(tmp_path):
    main(["run", "preset:bump", "--out", str(tmp_path)])
    out = tmp_path / "report.json"
    code = main(["check", "preset:bump", "--snapshots", str(tmp_path / "snapshots"), "--out", str(out)])
    payload = json.loads(out.read_text())
    assert code == EXIT_OK and payload["passed"]
    assert len(payload["energy_reports"]) == 5
    lhs = [r["lhs_total"] for r in payload["energy_reports"]]
    assert all(b <= a for a, b in zip(lhs, lhs[1:]))


def test_certify_violation_exits_one(tmp_path, monkeypatch):
    import dswave.cli as cli
    from dswave.degiorgi import CertificateReport

    def fake(*args, **kwargs):
        return CertificateReport(1.0, [(0, 1.0)], True, 2.0, False, 1.0)

    monkeypatch.setattr(cli, "certify", fake)
    args = ["certify", "preset:dry", "--center", "0.5,0.5,0.5", "--rho", "0.25", "--out", str(tmp_path / "c.json")]
    assert main(args) == EXIT_FAIL


def test_lemmas(tmp_path, capsys):
    assert main(["lemmas", "--seed", "2", "--out", str(tmp_path / "l.json")]) == EXIT_OK
    assert capsys.readouterr().out.count("PASS") == 4


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("DSW_THREADS", "zero")
    assert main(["lemmas"]) == EXIT_USAGE
    monkeypatch.setenv("DSW_THREADS", "1")
    assert main(["lemmas"]) == EXIT_OK
