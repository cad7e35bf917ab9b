import csv
import hashlib
import json

import numpy as np
import pytest

from krflab.cli import dump_config, load_config, main, run, validate_config
from krflab.errors import ConfigError
from krflab.presets import PRESETS, get_preset, list_presets

NAMES = ["example-5-1", "lelong-decay", "comparison-sweep", "c0-c2-suite",
         "capacity-decay", "stability-sweep", "zero-convergence", "h-f-convergence"]


def small_example():
    # the dt halving test needs the fine grid, so only j and the times shrink
    cfg = get_preset("example-5-1")
    cfg["initial_data"]["j_values"] = [10]
    cfg["params"]["times"] = [0.25]
    return cfg


def test_registry_has_exactly_the_presets():
    assert sorted(list_presets()) == sorted(NAMES)
    assert sorted(PRESETS) == sorted(NAMES)


@pytest.mark.parametrize("name", NAMES)
def test_presets_validate_and_round_trip(name):
    cfg = get_preset(name)
    validate_config(cfg)
    text = dump_config(cfg)
    assert load_config(text) == cfg
    assert dump_config(load_config(text)) == text


@pytest.mark.parametrize("mutate,msg", [
    (lambda c: c["checks"].append("no_such_check"), "unknown checks"),
    (lambda c: c.update(pipeline="nope"), "unknown pipeline"),
    (lambda c: c["geometry"]["grid"].update(n_points=2), "invalid config"),
    (lambda c: c["flow"].update(dt_policy="sometimes"), "invalid config"),
    (lambda c: c.update(extra=1), "invalid config"),
    (lambda c: c["geometry"]["grid"].update(s_min=20.0), "s_min < s_max"),
])
def test_invalid_configs(mutate, msg):
    cfg = get_preset("example-5-1")
    mutate(cfg)
    with pytest.raises(ConfigError, match=msg):
        validate_config(cfg)


def test_missing_profile_file():
    cfg = {"geometry": {"grid": {"s_min": -5.0, "s_max": 5.0, "n_points": 41}},
           "initial_data": {"kind": "profile_file", "path": "/nonexistent.csv"}}
    with pytest.raises(ConfigError, match="not found"):
        validate_config(cfg)


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    outcome, manifest = run(small_example(), out)
    assert manifest["status"] == "ok"
    for rel in ("manifest.json", "reports/exact_regression.json", "reports/summary.csv",
                "tables/exact_errors.csv", "figures/exact_errors.png"):
        assert (out / rel).is_file(), rel
    assert (out / "figures/exact_errors.png").read_bytes()[:4] == b"\x89PNG"
    m = json.loads((out / "manifest.json").read_text())
    assert m["timings"]["compute"] > 0
    for rel, digest in m["csv_sha256"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert m["verdicts"] == {"exact_regression": "pass", "tmax_obstruction": "pass"}


def test_csv_full_precision(tmp_path):
    run(small_example(), tmp_path)
    with open(tmp_path / "tables/exact_errors.csv") as fh:
        rows = list(csv.DictReader(fh))
    err = rows[0]["sup_error"]
    assert float(repr(float(err))) == float(err) and len(err) > 12


def test_rerun_is_bit_identical(tmp_path):
    cfg = get_preset("capacity-decay")
    cfg["params"]["nested_pairs"] = 3
    _, m1 = run(cfg, tmp_path / "a")
    _, m2 = run(cfg, tmp_path / "b")
    assert m1["csv_sha256"] == m2["csv_sha256"]
    assert m1["config_sha256"] == m2["config_sha256"]


def test_seed_changes_random_sweep(tmp_path):
    cfg = get_preset("capacity-decay")
    cfg["params"]["nested_pairs"] = 3
    _, m1 = run(cfg, tmp_path / "a")
    cfg["seed"] = 7
    _, m2 = run(cfg, tmp_path / "b")
    key = "tables/nested_pairs.csv"
    assert m1["csv_sha256"][key] != m2["csv_sha256"][key]


def test_empty_checks_gives_trajectories_only(tmp_path):
    cfg = {"geometry": {"V": 2.0, "grid": {"s_min": -10.0, "s_max": 10.0, "n_points": 101}},
           "initial_data": {"kind": "example", "j": 10},
           "params": {"times": [0.1, 0.2]}, "checks": []}
    outcome, _ = run(cfg, tmp_path)
    assert outcome.reports == []
    assert not (tmp_path / "reports").exists() or not any((tmp_path / "reports").iterdir())
    data = np.loadtxt(tmp_path / "trajectories/flow.csv", delimiter=",", skiprows=1)
    assert data.shape == (3 * 101, 5)


def test_profile_file_input(tmp_path):
    s = np.linspace(-10, 10, 101)
    f = tmp_path / "p.csv"
    np.savetxt(f, np.column_stack([s, 0.3 * np.tanh(s)]), delimiter=",", header="s,value",
               comments="")
    cfg = {"geometry": {"grid": {"s_min": -10.0, "s_max": 10.0, "n_points": 101}},
           "initial_data": {"kind": "profile_file", "path": str(f)},
           "params": {"times": [0.1]}, "checks": ["upper_bound"]}
    outcome, _ = run(cfg, tmp_path / "out")
    assert outcome.report("upper_bound").holds


def test_failure_leaves_marker(tmp_path):
    cfg = {"geometry": {"grid": {"s_min": -10.0, "s_max": 10.0, "n_points": 101}},
           "initial_data": {"kind": "example", "j": 10},
           "params": {"times": [1.5]}}
    with pytest.raises(Exception):
        run(cfg, tmp_path)
    marker = (tmp_path / "FAILED").read_text()
    assert "stage: compute" in marker
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "failed" and m["failed_stage"] == "compute"


def test_main_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == NAMES


def test_main_exit_codes(tmp_path, capsys):
    cfg = small_example()
    good = tmp_path / "good.json"
    good.write_text(dump_config(cfg))
    assert main(["run", str(good), "--out", str(tmp_path / "g")]) == 0
    cfg["params"]["error_tol"] = 1e-12
    bad = tmp_path / "bad.json"
    bad.write_text(dump_config(cfg))
    assert main(["run", str(bad), "--out", str(tmp_path / "b")]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert main(["preset", "no-such-preset"]) == 2


def test_main_grid_refine(tmp_path):
    cfg = small_example()
    f = tmp_path / "c.json"
    f.write_text(dump_config(cfg))
    assert main(["--grid-refine", "2", "run", str(f), "--out", str(tmp_path / "r")]) == 0
    m = json.loads((tmp_path / "r/manifest.json").read_text())
    assert m["grid_refine"] == 2
    data = np.loadtxt(tmp_path / "r/trajectories/example_j10.csv", delimiter=",", skiprows=1)
    assert len(np.unique(data[:, 1])) == 4097


def test_main_preset_with_seed(tmp_path):
    assert main(["preset", "stability-sweep", "--out", str(tmp_path), "--seed", "3"]) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config"]["seed"] == 3
