"""Command-line entry point.

Subcommands: run (one trial), bench (Monte-Carlo matrix), render (SVG
snapshot from a trajectory CSV), validate (check a config and print the
resolved defaults). All outputs are written atomically and are
byte-identical across repeated invocations with the same inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Optional

import numpy as np

from . import backends
from .bench import (
    evaluate_gates,
    load_scenario,
    run_matrix,
    scenario_from_dict,
    summaries_csv,
    summaries_json,
    summaries_markdown,
)
from .config import (
    ConfigError,
    apply_overrides,
    config_from_dict,
    config_to_dict,
)
from .core import vec2
from .engine import (
    PlacementError,
    label_history_csv,
    result_json,
    run_trial,
    trajectory_csv,
)
from .svg import render_snapshot


def _write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _load_config_doc(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None


def _resolve_config(path: str, overrides: list[str]):
    doc = apply_overrides(_load_config_doc(path), overrides)
    return config_from_dict(doc)


def cmd_run(args) -> int:
    cfg = _resolve_config(args.config, args.set)
    result = run_trial(cfg, record_trajectory=args.trajectory)
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "result.json"), result_json(result, cfg))
    if result.trajectory is not None:
        _write_atomic(
            os.path.join(args.out, "trajectory.csv"), trajectory_csv(result.trajectory)
        )
    if result.label_history:
        _write_atomic(
            os.path.join(args.out, "labels.csv"), label_history_csv(result.label_history)
        )
    print(f"success={str(result.success).lower()} steps={result.steps_used}")
    return 0


def cmd_bench(args) -> int:
    doc = apply_overrides(_load_config_doc(args.config), args.set)
    spec = scenario_from_dict(doc)
    progress = print if args.verbose else None
    summaries = run_matrix(spec, jobs=args.jobs, progress=progress)
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "summary.csv"), summaries_csv(summaries))
    _write_atomic(os.path.join(args.out, "summary.json"), summaries_json(spec, summaries))
    _write_atomic(os.path.join(args.out, "summary.md"), summaries_markdown(spec, summaries))
    print(summaries_markdown(spec, summaries))
    if args.gate:
        failed = False
        for g in evaluate_gates(spec, summaries):
            mark = "PASS" if g.passed else "FAIL"
            print(f"[{mark}] {g.description}: {g.detail}")
            failed = failed or not g.passed
        if failed:
            return 1
    return 0


def _read_trajectory_step(path: str, k: int):
    try:
        f = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise ConfigError(f"trajectory file not found: {path}") from None
    sheep: dict[int, tuple[float, float]] = {}
    shepherd: Optional[tuple[float, float]] = None
    labels: dict[int, str] = {}
    max_k = -1
    with f:
        reader = csv.DictReader(f)
        for row in reader:
            rk = int(row["k"])
            max_k = max(max_k, rk)
            if rk != k:
                continue
            if row["role"] == "sheep":
                i = int(row["agent_id"])
                sheep[i] = (float(row["x"]), float(row["y"]))
                if row["label"]:
                    labels[i] = row["label"]
            elif row["role"] == "shepherd":
                shepherd = (float(row["x"]), float(row["y"]))
    if max_k < 0:
        raise ConfigError(f"{path} contains no agents")
    if shepherd is None or not sheep:
        raise ConfigError(f"step {k} not found in {path} (max recorded step is {max_k})")
    n = max(sheep) + 1
    pos = np.zeros((n, 2))
    for i, xy in sheep.items():
        pos[i] = xy
    lab = None
    if labels:
        lab = np.array([labels.get(i) == "variant" for i in range(n)])
    return pos, np.array(shepherd), lab


def cmd_render(args) -> int:
    cfg = _resolve_config(args.config, args.set)
    pos, shepherd, labels = _read_trajectory_step(args.trajectory, args.step)
    if pos.shape[0] != cfg.n_sheep:
        raise ConfigError(
            f"trajectory has {pos.shape[0]} sheep but the config declares {cfg.n_sheep}"
        )
    svg = render_snapshot(
        sheep_pos=pos,
        shepherd_pos=shepherd,
        goal_center=cfg.goal(),
        goal_radius=cfg.goal_radius,
        kinds=cfg.kinds(),
        labels=labels,
        step=args.step,
    )
    out_path = args.out
    if os.path.isdir(out_path) or out_path.endswith(os.sep):
        os.makedirs(out_path, exist_ok=True)
        out_path = os.path.join(out_path, f"snapshot_k{args.step}.svg")
    else:
        parent = os.path.dirname(out_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
    _write_atomic(out_path, svg)
    print(out_path)
    return 0


def cmd_validate(args) -> int:
    cfg = _resolve_config(args.config, args.set)
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    print(f"# backend: {backends.active.name}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="herdsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override (repeatable)")

    p_run = sub.add_parser("run", help="run one trial")
    common(p_run)
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--trajectory", action="store_true", help="record per-step positions")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run a Monte-Carlo scenario matrix")
    common(p_bench)
    p_bench.add_argument("--out", default="out", help="output directory")
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_bench.add_argument("--gate", action="store_true", help="evaluate scenario gates")
    p_bench.add_argument("--verbose", action="store_true", help="per-cell progress")
    p_bench.set_defaults(func=cmd_bench)

    p_render = sub.add_parser("render", help="render an SVG snapshot of a recorded step")
    common(p_render)
    p_render.add_argument("--trajectory", required=True, help="trajectory CSV from `run`")
    p_render.add_argument("--step", type=int, required=True, help="time index to draw")
    p_render.add_argument("--out", default="out", help="output file or directory")
    p_render.set_defaults(func=cmd_render)

    p_val = sub.add_parser("validate", help="check a config and print resolved values")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlacementError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
