import json

import pytest

from vortexlab import builtins as bi
from vortexlab.cli import main, parse_config_text, resolve_config
from vortexlab.io import config_hash, read_csv


def _run(tmp_path, *args):
    return main(["run", *args, "--out", str(tmp_path)])


def test_modulus_prints_frozen_values(tmp_path, capsys):
    assert _run(tmp_path, "modulus", "--theta", "constant", "--r", "1e-4") == 0
    out = capsys.readouterr().out
    assert "mu = 0.000921034" in out
    _, cols, rows = read_csv(tmp_path / "modulus.csv")
    row = dict(zip(cols, rows[0]))
    assert float(row["mu"]) == pytest.approx(9.21034e-4, abs=1e-9)
    assert float(row["M"]) == pytest.approx(1.1430, abs=5e-4)
    assert float(row["nu"]) == pytest.approx(0.3189, abs=5e-4)


def test_picard_zero_converges_in_one_iteration(tmp_path):
    assert _run(tmp_path, "picard", "--set", "spec.name=zero", "--t_end", "1", "--dt", "0.1") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"]
    assert summary["result"]["iterations"] == 1


def test_simulate_pair_returns_after_one_period(tmp_path):
    cfg = tmp_path / "pair.cfg"
    cfg.write_text("[spec]\nname = corotating-pair\n[solver]\nt_end = 2*pi**2\ndt = 1e-3\n"
                   "[check]\nreturn_tol = 1e-3\n")
    assert main(["run", "simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["result"]["return_error"] <= 1e-3


def test_failed_check_exits_two(tmp_path):
    assert _run(tmp_path, "simulate", "--spec", "corotating-pair", "--t_end", "1", "--dt", "0.01",
                "--return_tol", "1e-6") == 2


def test_unknown_key_lists_valid_keys(tmp_path, capsys):
    assert _run(tmp_path, "simulate", "--set", "solver.dtt=1") == 1
    err = capsys.readouterr().err
    assert "unknown config key" in err and "solver.dt" in err


def test_missing_config_exits_one(tmp_path, capsys):
    assert main(["run", "simulate", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_unknown_spec_and_bad_value_exit_one(tmp_path):
    assert _run(tmp_path, "simulate", "--spec", "no-such-spec") == 1
    assert _run(tmp_path, "simulate", "--dt", "fast") == 1
    assert main(["run", "nonsense"]) == 1


def test_config_formats_agree():
    ini = parse_config_text("# comment\nseed = 3\n[solver]\ndt = 1e-2  # inline\n[spec]\nname = gaussian\n")
    js = parse_config_text('{"seed": 3, "solver": {"dt": 0.01}, "spec": {"name": "gaussian"}}')
    a = resolve_config("simulate", ini, {})
    b = resolve_config("simulate", js, {})
    assert a == b
    assert a["solver.dt"] == 0.01 and a["seed"] == 3 and a["spec.name"] == "gaussian"


def test_overrides_win_and_bare_keys_resolve():
    cfg = resolve_config("simulate", {"solver.dt": "0.1"}, {"dt": "0.2"}, seed=5)
    assert cfg["solver.dt"] == 0.2 and cfg["seed"] == 5
    assert resolve_config("modulus", {}, {"theta": "linear"})["theta.name"] == "linear"


def test_outputs_are_byte_identical_and_headed(tmp_path):
    args = ["simulate", "--spec", "three-vortex", "--t_end", "0.5", "--dt", "0.01", "--every", "10"]
    assert _run(tmp_path / "a", *args) == 0
    assert _run(tmp_path / "b", *args) == 0
    for name in ("final_positions.csv", "trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, cols, _ = read_csv(tmp_path / "a" / "trajectory.csv")
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert header[0].startswith("vortexlab ")
    assert header[1] == f"config_hash {config_hash(summary['config'])}"
    assert header[2] == "seed 0"
    assert cols[:2] == ["time", "label_id"]


def test_seed_changes_the_hash(tmp_path):
    assert _run(tmp_path / "a", "modulus", "--seed", "1") == 0
    assert _run(tmp_path / "b", "modulus", "--seed", "2") == 0
    ha = read_csv(tmp_path / "a" / "modulus.csv")[0]
    hb = read_csv(tmp_path / "b" / "modulus.csv")[0]
    assert ha[1] != hb[1] and ha[2] == "seed 1"


def test_catalog_contents_and_order(capsys):
    cat = bi.list_builtins()
    names = [s["name"] for s in cat["specs"]]
    assert names == sorted(names)
    for must in ("patch", "gaussian", "corotating-pair", "single-vortex-tracers", "logspike"):
        assert must in names
    thetas = {t["name"]: t for t in cat["thetas"]}
    assert {"constant", "powerlog", "linear"} <= set(thetas)
    assert "non-osgood" in thetas["linear"]["tags"]
    assert cat == bi.list_builtins()
    assert main(["list"]) == 0
    assert "corotating-pair" in capsys.readouterr().out


def test_kernel_audit_command(tmp_path):
    assert _run(tmp_path, "kernel-audit", "--domain", "plane", "--n_samples", "2000", "--checks", "200") == 0
    _, cols, rows = read_csv(tmp_path / "kernel_audit.csv")
    assert cols == ["sample_id", "|x-y|", "|K|", "bound_ratio"] and rows
