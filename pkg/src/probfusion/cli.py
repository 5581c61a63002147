"""Command-line interface.

Subcommands:
  simulate         scene spec -> sequence directory (with ground truth)
  fuse             sequence directory -> trajectories + report
  benchmark-shapes labeled cluster files -> benchmark registry
  evaluate         trajectories + ground truth -> report

Exit codes: 0 success, 1 input error, 2 config error, 3 internal
invariant violation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import load_pipeline_config, write_pipeline_config
from .errors import ConfigError, EmptySequence, FusionError
from .io import read_ground_truth, write_report
from .metrics import mae_axis
from .shape import BenchmarkShapeRegistry, build_benchmark, compute_descriptor
from . import sim as simmod
from .pipeline import run_sequence

EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


@click.group()
def main():
    """Probabilistic LiDAR-camera fusion tools."""


@main.command()
@click.option("--scene", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Scene spec JSON; default overtaking fixture.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--ideal", is_flag=True,
              help="Skip error injection (zero-error oracle sequence).")
def simulate(scene, seed, out, ideal):
    """Generate a synthetic sequence directory with ground truth."""
    try:
        if scene is not None:
            spec = simmod.load_scene_spec(scene)
            if seed:
                spec = simmod.scene_spec_from_json(
                    {**simmod.scene_spec_to_json(spec), "rng_seed": seed})
        else:
            spec = simmod.overtaking_scene(rng_seed=seed)
    except (FusionError, json.JSONDecodeError, KeyError, TypeError) as exc:
        click.echo(f"invalid scene spec: {exc}", err=True)
        sys.exit(EXIT_INPUT)

    calib = simmod.default_calibration()
    err = None if ideal else simmod.DEFAULT_ERROR_MODEL
    frames = simmod.simulate_sequence(spec, calib, err)

    from .io import dump_simulated_sequence
    out = Path(out)
    dump_simulated_sequence(out, frames, calib, spec)

    registry = BenchmarkShapeRegistry(
        shapes=simmod.reference_benchmarks(),
        sample_counts={})
    registry.save(out / "benchmarks.json")
    write_pipeline_config(
        out / "config.json",
        calibration="calibration.json",
        benchmark_registry="benchmarks.json",
        rng_seed=seed,
        enlarge_ratios={"default": {"left": 1.0, "right": 1.0,
                                    "up": 0.5, "down": 0.5}},
        guarantee={"t1": 1.0, "t2": 0.9, "t1_fraction": 0.2},
        target_object_ids=[obj.object_id for obj in spec.objects[:1]],
    )
    click.echo(f"wrote {len(frames)} frames to {out}")


@main.command()
@click.argument("sequence_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=None,
              help="Override the config rng_seed.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--baseline-only", is_flag=True)
@click.option("--no-smoother", is_flag=True)
def fuse(sequence_dir, config_path, seed, out, baseline_only, no_smoother):
    """Run the fusion pipeline over a sequence directory."""
    try:
        cfg = load_pipeline_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    try:
        report = run_sequence(sequence_dir, cfg, out_dir=out,
                              baseline_only=baseline_only,
                              no_smoother=no_smoother)
    except (EmptySequence, OSError, ValueError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except FusionError as exc:
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)
    agg = report.get("evaluation", {}).get("aggregate", {})
    if "baseline_tpr_mean" in agg:
        click.echo(f"baseline TPR {agg['baseline_tpr_mean']:.3f}  "
                   f"p-fusion TPR {agg['fusion_tpr_mean']:.3f}")
    click.echo(f"report written for {report['n_frames']} frames")


@main.command("benchmark-shapes")
@click.argument("cluster_files", nargs=-1,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--min-samples", type=int, default=10, show_default=True)
def benchmark_shapes(cluster_files, out, min_samples):
    """Build a benchmark registry from labeled cluster files.

    Each input is a JSON file {"class": ..., "points": [[u, v], ...]}.
    """
    if not cluster_files:
        click.echo("no cluster files given", err=True)
        sys.exit(EXIT_INPUT)
    by_class: dict = {}
    for path in cluster_files:
        try:
            with open(path) as fh:
                rec = json.load(fh)
            desc = compute_descriptor(np.asarray(rec["points"], dtype=float))
            by_class.setdefault(rec["class"], []).append(desc)
        except (KeyError, ValueError, FusionError, json.JSONDecodeError) as exc:
            click.echo(f"bad cluster file {path}: {exc}", err=True)
            sys.exit(EXIT_INPUT)
    registry = BenchmarkShapeRegistry(
        shapes={cls: build_benchmark(descs, min_samples=min_samples)
                for cls, descs in by_class.items()},
        sample_counts={cls: len(descs) for cls, descs in by_class.items()})
    registry.save(out)
    click.echo(f"wrote benchmarks for {sorted(by_class)} to {out}")


@main.command()
@click.argument("trajectory_csvs", nargs=-1,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--ground-truth", type=click.Path(exists=True, dir_okay=False),
              required=True, help="ground_truth.jsonl of the sequence.")
@click.option("--frame-rate", type=float, default=10.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def evaluate(trajectory_csvs, ground_truth, frame_rate, out):
    """Compare trajectory CSVs against ground truth (MAE per axis)."""
    import csv as csvmod
    if not trajectory_csvs:
        click.echo("no trajectories given", err=True)
        sys.exit(EXIT_INPUT)
    gt = read_ground_truth(ground_truth)
    report = {}
    for path in trajectory_csvs:
        obj_id = int(Path(path).stem.split("_")[-1])
        est = {}
        with open(path, newline="") as fh:
            for row in csvmod.DictReader(fh):
                est[round(float(row["t"]), 9)] = (float(row["x"]),
                                                  float(row["y"]))
        ex, ey, gx, gy = [], [], [], []
        for frame_id, objs in gt.items():
            if obj_id not in objs:
                continue
            key = round(frame_id / frame_rate, 9)
            if key in est:
                ex.append(est[key][0])
                ey.append(est[key][1])
                gx.append(objs[obj_id]["x"])
                gy.append(objs[obj_id]["y"])
        if ex:
            report[str(obj_id)] = {"mae_x": mae_axis(ex, gx),
                                   "mae_y": mae_axis(ey, gy),
                                   "n": len(ex)}
    write_report(out, report)
    click.echo(f"evaluation written to {out}")


if __name__ == "__main__":
    main()
