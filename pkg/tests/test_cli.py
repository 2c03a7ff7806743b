import json

import pytest

from sbc.cli import main


@pytest.fixture
def tiny_config(tmp_path):
    config = {
        "model": {"kind": "normal-normal"},
        "sampler": {"kind": "exact-conjugate"},
        "N": 40,
        "L": 19,
        "master_seed": 77,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_run_and_report_end_to_end(tiny_config, tmp_path, capsys):
    run_dir = tmp_path / "artifact"
    assert main(["run", "--config", str(tiny_config), "--out", str(run_dir)]) == 0
    assert (run_dir / "ranks.csv").exists()
    assert (run_dir / "meta.json").exists()
    assert (run_dir / "sha256sums.txt").exists()
    out = capsys.readouterr().out
    assert "mu" in out

    report_dir = tmp_path / "report"
    code = main(["report", "--run", str(run_dir), "--quantity", "mu",
                 "--bins", "10", "--format", "svg,json", "--out", str(report_dir)])
    assert code == 0
    assert (report_dir / "mu_hist.svg").exists()
    assert (report_dir / "summary.json").exists()
    assert not (report_dir / "summary.csv").exists()


def test_seed_override_changes_ranks(tiny_config, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["run", "--config", str(tiny_config), "--out", str(a)])
    main(["run", "--config", str(tiny_config), "--seed", "78", "--out", str(b)])
    main(["run", "--config", str(tiny_config), "--seed", "77", "--out", str(c)])
    assert (a / "ranks.csv").read_bytes() != (b / "ranks.csv").read_bytes()
    assert (a / "ranks.csv").read_bytes() == (c / "ranks.csv").read_bytes()


def test_workers_env_var(tiny_config, tmp_path, monkeypatch):
    serial = tmp_path / "serial"
    main(["run", "--config", str(tiny_config), "--out", str(serial)])
    monkeypatch.setenv("SBC_WORKERS", "2")
    parallel = tmp_path / "parallel"
    assert main(["run", "--config", str(tiny_config), "--out", str(parallel)]) == 0
    assert (serial / "ranks.csv").read_bytes() == (parallel / "ranks.csv").read_bytes()


def test_config_errors_exit_2(tmp_path):
    missing = tmp_path / "missing.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2

    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert main(["run", "--config", str(bad_json), "--out", str(tmp_path / "o")]) == 2

    unknown_key = tmp_path / "unknown.json"
    unknown_key.write_text(json.dumps({
        "model": {"kind": "normal-normal"},
        "sampler": {"kind": "exact-conjugate"},
        "replications": 5}))
    assert main(["run", "--config", str(unknown_key), "--out", str(tmp_path / "o")]) == 2


def test_failure_rate_exit_3(tmp_path):
    config = tmp_path / "failing.json"
    config.write_text(json.dumps({
        "model": {"kind": "normal-normal"},
        "sampler": {"kind": "exact-conjugate"},
        "corruption": {"kind": "shift", "amount": 1.0, "target_quantity": "zeta"},
        "N": 20,
        "L": 9,
        "master_seed": 1}))
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "o")]) == 3


def test_report_errors_exit_4(tiny_config, tmp_path):
    assert main(["report", "--run", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "r")]) == 4

    run_dir = tmp_path / "artifact"
    main(["run", "--config", str(tiny_config), "--out", str(run_dir)])
    assert main(["report", "--run", str(run_dir), "--quantity", "zeta",
                 "--out", str(tmp_path / "r")]) == 4
    assert main(["report", "--run", str(run_dir), "--bins", "7",
                 "--out", str(tmp_path / "r")]) == 4
    assert main(["report", "--run", str(run_dir), "--format", "png",
                 "--out", str(tmp_path / "r")]) == 4


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    listing = json.loads(capsys.readouterr().out)
    assert set(listing) == {"normal-normal", "lin-reg", "eight-schools"}
    assert "prior_sd" in listing["normal-normal"]


def test_list_samplers(capsys):
    assert main(["list-samplers"]) == 0
    listing = json.loads(capsys.readouterr().out)
    assert "exact-conjugate" in listing["kinds"]
    assert "step_size" in listing["config_schema"]
