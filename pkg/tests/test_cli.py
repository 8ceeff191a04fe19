import json
import math

import numpy as np
import pytest

from sgarz.cli import blob_sha1, main
from sgarz.config import bundled_config, load_config, parse_text
from sgarz.errors import ConfigError
from sgarz.reference import StatSummary, Target

BUNDLED = ["rarefaction.cfg", "shock.cfg", "relaxation_sweep.cfg", "relaxation_sweep_shock.cfg"]


def edit(text, **repl):
    lines = []
    for line in text.splitlines():
        key = line.split("=")[0].strip()
        if key in repl:
            line = f"{key} = {repl[key]}" if repl[key] is not None else ""
        lines.append(line)
    return "\n".join(lines) + "\n"


def write_cfg(tmp_path, name="rarefaction.cfg", **repl):
    path = tmp_path / f"edited_{name}"
    path.write_text(edit(bundled_config(name).read_text(), **repl))
    return path


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_round_trip(name):
    cfg = load_config(bundled_config(name))
    assert parse_text(cfg.to_text()) == cfg


def test_bundled_config_values():
    rare = load_config(bundled_config("rarefaction.cfg"))
    assert rare.level == 3 and rare.grid.dx == 0.005 and rare.solver.cfl == 0.45
    assert rare.taus == (math.inf,) and not rare.is_sweep
    assert rare.solver.snapshot_times == (0.0, 0.5, 1.0)
    sweep = load_config(bundled_config("relaxation_sweep.cfg"))
    assert sweep.taus == (1.0, 0.1, 0.01, 0.0) and sweep.target is Target.LWR_EQUILIBRIUM


@pytest.mark.parametrize("repl,match", [
    ({"seed": None}, "missing reference.seed"),
    ({"cells": "many"}, "cells"),
    ({"relaxation": "-1"}, "relaxation"),
    ({"relaxation": "inf"}, "relaxation"),
    ({"closure": "cubic"}, "closure"),
    ({"target": "euler"}, "target"),
    ({"cfl": "2"}, "cfl"),
    ({"rho_left_low": "0.9"}, "rho_left"),
])
def test_config_errors(tmp_path, repl, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write_cfg(tmp_path, **repl))


def test_unknown_key_and_missing_file(tmp_path):
    path = tmp_path / "x.cfg"
    path.write_text(bundled_config("shock.cfg").read_text() + "\n[extra]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_check_exit_codes(tmp_path, capsys):
    assert main(["check", "--level", "0"]) == 0
    assert main(["check", "--level", "3"]) == 0
    out = capsys.readouterr().out
    assert "A1" in out and "FAIL" not in out
    cache = tmp_path / "b.bin"
    assert main(["basis", "--level", "2", "--basis-cache", str(cache)]) == 0
    assert main(["check", "--level", "2", "--basis-cache", str(cache)]) == 0
    cache.write_bytes(cache.read_bytes()[:100])
    assert main(["check", "--level", "2", "--basis-cache", str(cache)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["check"])
    assert exc.value.code == 2


def read_manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_simulate_rarefaction_outputs_and_manifest(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(bundled_config("rarefaction.cfg")), "--out", str(out)]) == 0
    snaps = sorted(p.name for p in out.glob("snapshot_*.csv"))
    assert snaps == ["snapshot_t0.000000.csv", "snapshot_t0.500000.csv", "snapshot_t1.000000.csv"]
    man = read_manifest(out)
    assert man["level"] == 3 and man["seed"] == 7 and man["duration_s"] > 0
    listed = {e["path"]: e for e in man["outputs"]}
    assert set(listed) == set(snaps) | {"diagnostics.csv", "statistics.csv"}
    for name, entry in listed.items():
        data = (out / name).read_bytes()
        assert entry["bytes"] == len(data) and entry["sha1"] == blob_sha1(data)
    assert parse_text(man["config"]) == load_config(bundled_config("rarefaction.cfg"))
    stats = StatSummary.read_csv(out / "statistics.csv")
    assert stats.x.size == 400


def test_blob_hash_matches_git():
    assert blob_sha1(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert blob_sha1(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_simulate_is_byte_reproducible(tmp_path):
    cfg = str(bundled_config("shock.cfg"))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    ha = {e["path"]: e["sha1"] for e in read_manifest(tmp_path / "a")["outputs"]}
    hb = {e["path"]: e["sha1"] for e in read_manifest(tmp_path / "b")["outputs"]}
    assert ha == hb


def test_simulate_sweep(tmp_path):
    out = tmp_path / "sweep"
    args = ["simulate", "--config", str(bundled_config("relaxation_sweep.cfg")), "--out", str(out), "--samples", "5000"]
    assert main(args) == 0
    assert sorted(p.name for p in out.iterdir() if p.is_dir()) == ["tau_0.0", "tau_0.01", "tau_0.1", "tau_1.0"]
    rows = np.loadtxt(out / "sweep_summary.csv", delimiter=",", skiprows=1)
    assert rows.shape == (4, 4)
    assert np.array_equal(rows[:, 0], [1.0, 0.1, 0.01, 0.0])
    assert all((out / d / "statistics.csv").exists() for d in ("tau_0.0", "tau_1.0"))


def test_simulate_numerical_failure(tmp_path, capsys):
    cfg = write_cfg(tmp_path, rho_left_low="0.01", rho_left_high="0.9", rho_right="0.05",
                    v_left="0.0", v_right="1.0", cfl="1.0")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "not positive definite" in capsys.readouterr().err


def test_simulate_config_error(tmp_path):
    cfg = write_cfg(tmp_path, cells="2")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_reference_reproducible_and_degenerate(tmp_path):
    cfg = str(bundled_config("rarefaction.cfg"))
    common = ["reference", "--config", cfg, "--samples", "10000", "--seed", "7"]
    assert main(common + ["--out", str(tmp_path / "a")]) == 0
    assert main(common + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    assert (tmp_path / "a" / "reference.csv").read_bytes() == (tmp_path / "b" / "reference.csv").read_bytes()
    deg = write_cfg(tmp_path, rho_left_high="0.55", target="lwr_equilibrium")
    assert main(["reference", "--config", str(deg), "--samples", "2000", "--out", str(tmp_path / "d")]) == 0
    s = StatSummary.read_csv(tmp_path / "d" / "reference.csv")
    assert np.all(s.std == 0)


def test_reference_rejects_unsupported_closure(tmp_path):
    cfg = write_cfg(tmp_path, gamma="2")
    assert main(["reference", "--config", str(cfg), "--samples", "10", "--out", str(tmp_path / "o")]) == 2


def test_compare_exit_codes(tmp_path, capsys):
    grid_x = (np.arange(400) + 0.5) * 0.005
    a = StatSummary(grid_x, 0.5 + 0.1 * np.sin(grid_x), np.full(400, 0.05))
    a.write_csv(tmp_path / "a.csv")
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "a.csv")]) == 0
    assert "0.000000e+00" in capsys.readouterr().out
    StatSummary(grid_x, a.mean + 0.05, a.std).write_csv(tmp_path / "shift.csv")
    assert main(["compare", str(tmp_path / "shift.csv"), str(tmp_path / "a.csv")]) == 3
    assert main(["compare", str(tmp_path / "shift.csv"), str(tmp_path / "a.csv"), "--mean-threshold", "0.2",
                 "--band-threshold", "0.2"]) == 0
    StatSummary(grid_x[:-1], a.mean[:-1], a.std[:-1]).write_csv(tmp_path / "short.csv")
    assert main(["compare", str(tmp_path / "short.csv"), str(tmp_path / "a.csv")]) == 2
    assert main(["compare", str(tmp_path / "missing.csv"), str(tmp_path / "a.csv")]) == 2


def test_compare_acceptance_run(tmp_path):
    cfg = str(bundled_config("rarefaction.cfg"))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "sg")]) == 0
    assert main(["reference", "--config", cfg, "--samples", "20000", "--out", str(tmp_path / "mc")]) == 0
    assert main(["compare", str(tmp_path / "sg" / "statistics.csv"), str(tmp_path / "mc" / "reference.csv")]) == 0
