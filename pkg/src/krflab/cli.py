"""Command-line entry point: presets, config runs and artifact emission.

A run directory contains ``manifest.json``, ``reports/*.json``,
``reports/summary.csv``, ``tables/*.csv``, ``trajectories/*.csv`` and
``figures/*.png``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import traceback
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError
from .experiments import CHECK_IDS, PIPELINES, Outcome
from .presets import CONFIG_SCHEMA, get_preset, list_presets


def validate_config(cfg: dict) -> dict:
    """Schema validation plus cross-field checks. Returns ``cfg`` unchanged."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    name = cfg.get("pipeline", "trajectory")
    if name not in PIPELINES:
        raise ConfigError(f"unknown pipeline {name!r}")
    unknown = set(cfg.get("checks", [])) - set(CHECK_IDS[name])
    if unknown:
        raise ConfigError(f"unknown checks for {name}: {sorted(unknown)}")
    g = cfg["geometry"]["grid"]
    if not g["s_min"] < g["s_max"]:
        raise ConfigError("grid needs s_min < s_max")
    path = cfg["initial_data"].get("path")
    if path is not None and not Path(path).is_file():
        raise ConfigError(f"profile file {path} not found")
    return cfg


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2)


def load_config(text: str) -> dict:
    return validate_config(json.loads(text))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_table(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def render_figure(spec: dict, table, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ys = spec["y"] if isinstance(spec["y"], list) else [spec["y"]]
    x = table.column(spec["x"])
    if "group" in spec:
        groups = table.column(spec["group"])
        for gval in sorted(set(groups)):
            sel = [i for i, v in enumerate(groups) if v == gval]
            for y in ys:
                yv = table.column(y)
                ax.plot([x[i] for i in sel], [yv[i] for i in sel], "o",
                        label=f"{y}, {spec['group']}={gval}")
    else:
        for y in ys:
            ax.plot(x, table.column(y), "o-", label=y)
    if spec.get("logx"):
        ax.set_xscale("log")
    if spec.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(spec["x"])
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def emit(outcome: Outcome, out: Path, cfg: dict, manifest: dict) -> None:
    """Write reports, tables, trajectories and figures; fill the manifest."""
    opts = cfg.get("output", {})
    hashes = manifest.setdefault("csv_sha256", {})
    (out / "reports").mkdir(parents=True, exist_ok=True)
    (out / "tables").mkdir(exist_ok=True)
    summary = []
    for rep in outcome.reports:
        (out / "reports" / f"{rep.theorem}.json").write_text(
            json.dumps(rep.to_dict(), indent=2, sort_keys=True))
        summary.append([rep.theorem, rep.status, rep.margin, rep.refinement_stable,
                        rep.reason])
    if outcome.reports:
        p = out / "reports" / "summary.csv"
        write_table(p, ["theorem", "status", "margin", "refinement_stable", "reason"], summary)
        hashes["reports/summary.csv"] = _sha(p)
    for name, tab in outcome.tables.items():
        p = out / "tables" / f"{name}.csv"
        write_table(p, tab.columns, tab.rows)
        hashes[f"tables/{name}.csv"] = _sha(p)
    if opts.get("trajectories", True) and outcome.trajectories:
        (out / "trajectories").mkdir(exist_ok=True)
        for name, tr in outcome.trajectories.items():
            p = out / "trajectories" / f"{name}.csv"
            tr.export_csv(p)
            hashes[f"trajectories/{name}.csv"] = _sha(p)
    if opts.get("figures", True) and outcome.figures:
        (out / "figures").mkdir(exist_ok=True)
        figs = []
        for spec in outcome.figures:
            if spec["table"] in outcome.tables:
                p = out / "figures" / f"{spec['name']}.png"
                render_figure(spec, outcome.tables[spec["table"]], p)
                figs.append(str(p.relative_to(out)))
        manifest["figures"] = figs


def run(cfg: dict, out: Path, refine: int = 1) -> tuple[Optional[Outcome], dict]:
    """Run a validated config into ``out``. Returns the outcome and manifest.

    On error the failing stage is named, artifacts written so far are kept and
    a ``FAILED`` marker file is created.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    failed = out / "FAILED"
    if failed.exists():
        failed.unlink()
    manifest = {"version": __version__, "config": cfg, "config_sha256": config_hash(cfg),
                "grid_refine": refine, "timings": {}, "status": "running"}
    stage = "validate"
    outcome = None
    try:
        validate_config(cfg)
        stage = "compute"
        t0 = time.perf_counter()
        outcome = PIPELINES[cfg.get("pipeline", "trajectory")](cfg, refine)
        manifest["timings"]["compute"] = time.perf_counter() - t0
        stage = "emit"
        t0 = time.perf_counter()
        emit(outcome, out, cfg, manifest)
        manifest["timings"]["emit"] = time.perf_counter() - t0
        manifest["verdicts"] = {r.theorem: r.status for r in outcome.reports}
        manifest["status"] = "ok"
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["failed_stage"] = stage
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        failed.write_text(f"stage: {stage}\n{traceback.format_exc()}")
        raise
    finally:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                                      default=str))
    return outcome, manifest


def exit_code(outcome: Outcome) -> int:
    return 1 if any(r.status == "fail" for r in outcome.reports) else 0


def _print_verdicts(outcome: Outcome) -> None:
    for r in outcome.reports:
        extra = f"  ({r.reason})" if r.reason else ""
        print(f"{r.status.upper():8s} {r.theorem}{extra}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="krflab", description=__doc__.splitlines()[0])
    ap.add_argument("--grid-refine", type=int, default=1,
                    help="global grid refinement multiplier (dt shrinks with it)")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_pre = sub.add_parser("preset", help="run a named preset")
    p_pre.add_argument("name")
    p_pre.add_argument("--out", default=None)
    p_pre.add_argument("--seed", type=int, default=None)
    sub.add_parser("list-presets", help="list preset names")
    args = ap.parse_args(argv)
    if args.grid_refine < 1:
        ap.error("--grid-refine must be >= 1")

    if args.cmd == "list-presets":
        for name, desc in list_presets().items():
            print(f"{name:18s} {desc}")
        return 0
    try:
        if args.cmd == "run":
            cfg = load_config(Path(args.config).read_text())
            default_out = cfg.get("output", {}).get("directory", "krflab-run")
        else:
            cfg = get_preset(args.name)
            if args.seed is not None:
                cfg["seed"] = args.seed
            default_out = f"krflab-{args.name}"
        out = Path(args.out or default_out)
        outcome, _ = run(cfg, out, args.grid_refine)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    _print_verdicts(outcome)
    print(f"artifacts in {out}")
    return exit_code(outcome)


if __name__ == "__main__":
    sys.exit(main())
