import json

import numpy as np

from shellrig import cli

FAST_SWEEP = [
    "--num-h", "4", "--h-min", "1e-2", "--nt", "4", "--ntheta", "32", "--nz", "24",
]


def run(argv):
    return cli.main(argv)


def test_show_config_prints_defaults(capsys):
    assert run(["show-config"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["sweep"]["p"] == 2.0
    assert data["sweep"]["field"] == "ansatz"


def test_sweep_writes_exactly_four_files(tmp_path):
    out = tmp_path / "run"
    assert run(["sweep", *FAST_SWEEP, "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.json", "fit.json", "sweep.csv", "verdict.txt"]
    fit = json.loads((out / "fit.json").read_text())
    assert abs(fit["alpha_hat"]) <= 0.2
    assert fit["config_echo"]["field"] == "ansatz"
    assert "PASS" in (out / "verdict.txt").read_text()


def test_sweep_refuses_nonempty_dir_without_force(tmp_path):
    out = tmp_path / "run"
    out.mkdir()
    (out / "stale.txt").write_text("old")
    assert run(["sweep", *FAST_SWEEP, "--out", str(out)]) == 2


def test_force_rerun_is_bit_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run(["sweep", *FAST_SWEEP, "--out", str(out1)]) == 0
    assert run(["sweep", *FAST_SWEEP, "--out", str(out2), "--force"]) == 0
    for name in ("config.json", "fit.json", "sweep.csv", "verdict.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_p_one_rejected_with_exit_2(tmp_path, capsys):
    status = run(["sweep", "--p", "1", "--out", str(tmp_path / "x")])
    assert status == 2
    assert "1 < p < infinity" in capsys.readouterr().err


def test_unknown_flag_rejected():
    assert run(["sweep", "--does-not-exist"]) == 2


def test_config_file_merging_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"num_h": 4, "h_min": 1e-2, "nt": 4, "ntheta": 32, "nz": 24, "field": "random:1"}))
    out = tmp_path / "run"
    assert run(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    echo = json.loads((out / "config.json").read_text())
    assert echo["field"] == "random:1"
    out2 = tmp_path / "run2"
    assert run(["sweep", "--config", str(cfg), "--field", "rigid:0", "--out", str(out2)]) == 0
    echo2 = json.loads((out2 / "config.json").read_text())
    assert echo2["field"] == "rigid:0"  # explicit flag wins


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert run(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_korn_sweep_runs(tmp_path):
    out = tmp_path / "korn"
    assert run(["korn-sweep", *FAST_SWEEP, "--out", str(out)]) == 0
    assert "korn-sharpness" in (out / "verdict.txt").read_text()


def test_trace_writes_artifacts(tmp_path):
    out = tmp_path / "trace"
    assert (
        run(
            [
                "trace", "--h", "3e-2", "--field", "random:1", "--amplitude", "1e-3",
                "--out", str(out),
            ]
        )
        == 0
    )
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.json", "trace.csv", "trace.json", "verdict.txt"]
    summary = json.loads((out / "trace.json").read_text())
    assert summary["count"] >= 4
    assert np.isfinite(summary["c_balance"])


def test_trace_bump_profile_includes_passage(tmp_path):
    out = tmp_path / "traceb"
    assert (
        run(
            [
                "trace", "--h", "3e-2", "--profile", "bump", "--field", "random:2",
                "--amplitude", "1e-3", "--out", str(out),
            ]
        )
        == 0
    )
    summary = json.loads((out / "trace.json").read_text())
    assert "shell_to_domain" in summary
    assert 0 < summary["shell_to_domain"]["ratio"] < 2


def test_check_gradient_quick(capsys):
    assert run(["check-gradient", "--points", "20"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_dist_so3_selftest_quick(capsys):
    assert run(["dist-so3", "--selftest", "--matrices", "20", "--rotations", "60000"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_doubling_quick(tmp_path):
    out = tmp_path / "dbl"
    assert (
        run(
            [
                "doubling", "--surface", "plate", "--centers", "2", "--num-r", "2",
                "--budget", "40000", "--out", str(out),
            ]
        )
        == 0
    )
    summary = json.loads((out / "doubling.json").read_text())
    assert summary["sigma_hat"] < 0.35


def test_default_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTDIR, str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert run(["sweep", *FAST_SWEEP]) == 0
    assert (tmp_path / "envout" / "sweep" / "verdict.txt").exists()
