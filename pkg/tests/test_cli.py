from pathlib import Path

import pytest

from netslice import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv):
    return cli.main([str(a) for a in argv])


def files(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.suffix in (".csv", ".svg")}


def test_usage_errors(tmp_path, capsys):
    assert run("nope") == 1
    assert run("single-service", "--out", tmp_path) == 1
    assert run("single-service", "--config", tmp_path / "missing.cfg", "--out", tmp_path) == 1
    assert run("validate", "--seed", "-3") == 1
    assert run("validate", "--seed", str(2**64)) == 1


def test_bad_config_reports_field(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text((CONFIGS / "fig4.cfg").read_text().replace("eps_b=1e-3", "eps_b=1e-6"))
    assert run("embb-urllc-region", "--config", bad, "--out", tmp_path / "o") == 1
    assert "eps_u must be < eps_b" in capsys.readouterr().err


def test_too_few_trials_is_usage_error(tmp_path):
    assert run("single-service", "--config", CONFIGS / "fig4.cfg", "--trials", "1000", "--out", tmp_path) == 1


def test_urllc_region_files_and_determinism(tmp_path):
    args = ["embb-urllc-region", "--config", CONFIGS / "fig4.cfg", "--fast", "--trials", "200000",
            "--points", "5", "--plots", "--seed", "17"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b", "--workers", "2") == 0
    assert run(*args, "--out", tmp_path / "c", "--workers", "8") == 0
    a = files(tmp_path / "a")
    assert set(a) == {"oma.csv", "noma_sic.csv", "noma_puncture.csv", "appendix_a_lb.csv", "region.svg"}
    assert a == files(tmp_path / "b") == files(tmp_path / "c")
    head = a["oma.csv"].decode()
    assert "# seed=17" in head and "# trials=200000" in head and "# config eps_u=0.001" in head
    assert (tmp_path / "a" / "manifest.json").exists()


def test_header_reconstructs_config(tmp_path):
    from netslice.config import parse_config, load_config

    assert run("single-service", "--config", CONFIGS / "fig7.cfg", "--fast", "--trials", "100000",
               "--out", tmp_path) == 0
    text = (tmp_path / "single_service.csv").read_text()
    echo = "\n".join(l[len("# config "):] for l in text.splitlines() if l.startswith("# config "))
    assert parse_config(echo) == load_config(CONFIGS / "fig7.cfg").fast_variant()


def test_infeasible_urllc_scenario_warns(tmp_path, capsys):
    cfg = tmp_path / "inf.cfg"
    cfg.write_text((CONFIGS / "fig4.cfg").read_text().replace("a_u=0.1", "a_u=1").replace("s=5", "s=1"))
    out = tmp_path / "o"
    assert run("embb-urllc-region", "--config", cfg, "--fast", "--trials", "100000", "--points", "3",
               "--out", out) == 0
    assert "WARN" in capsys.readouterr().err
    sic = (out / "noma_sic.csv").read_text().splitlines()
    assert sic[-1].startswith("r_b_sum,r_u")


def test_infeasible_mmtc_scenario_warns(tmp_path, capsys):
    cfg = tmp_path / "inf.cfg"
    cfg.write_text((CONFIGS / "fig7.cfg").read_text().replace("r_m=0.04", "r_m=3"))
    assert run("embb-mmtc-region", "--config", cfg, "--trials", "2000", "--points", "3",
               "--out", tmp_path / "o") == 0
    assert "WARN" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a):
        raise FloatingPointError("overflow")

    monkeypatch.setitem(cli.RUNNERS, "single-service", boom)
    assert run("single-service", "--config", CONFIGS / "fig4.cfg", "--out", tmp_path) == 2


def test_validate(capsys):
    assert run("validate", "--trials", "200000", "--seed", "3") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(l.startswith("PASS ") for l in lines)
