"""Command-line interface.

Subcommands cover each stage of the pipeline independently:

* ``gen-dataset`` — sample benchmark instances to a JSONL file.
* ``simulate``    — run one ``.mech`` file and dump its target trace.
* ``eval``        — score a trace against a task (ICP-aligned Chamfer).
* ``run``         — one full synthesis loop for one task.
* ``ablate``      — the full-factorial grid, with reports.
* ``report``      — re-aggregate saved run records into a results table.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (partial
outputs are left in place).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, curves, dsl, orchestrator
from .agents import backend_from_config
from .geometry import DegenerateGeometryError, Trajectory, chamfer_distance, icp_align
from .linkage import simulate as simulate_mechanism
from .memory import MemoryRepo


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{what} not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} is not valid JSON ({path}): {exc}")


def _load_tasks(path, task_id=None):
    try:
        instances = curves.read_dataset(path)
    except FileNotFoundError:
        raise ConfigError(f"task file not found: {path}")
    if not instances:
        raise ConfigError(f"no tasks in {path}")
    if task_id is None:
        if len(instances) > 1:
            raise ConfigError(
                f"{path} holds {len(instances)} tasks; pick one with --task-id"
            )
        return instances[0]
    for inst in instances:
        if inst.id == task_id:
            return inst
    raise ConfigError(f"task id {task_id!r} not found in {path}")


def _cmd_gen_dataset(args) -> int:
    families = tuple(f.strip() for f in args.families.split(",")) if args.families else curves.FAMILIES
    for fam in families:
        if fam not in curves.FAMILIES:
            raise ConfigError(f"unknown family {fam!r} (choose from {', '.join(curves.FAMILIES)})")
    instances = curves.generate_dataset(
        seed=args.seed,
        families=families,
        instances_per_family=args.instances,
        n_points=args.points,
        param_mode=args.param_mode,
    )
    curves.write_dataset(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.mech) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"mechanism file not found: {args.mech}")
    result = dsl.parse(text)
    if not result.ok:
        for err in result.errors:
            print(f"{args.mech}:{err}", file=sys.stderr)
        return 2
    sim = simulate_mechanism(result.spec, args.steps)
    if sim.success:
        print(f"simulated {sim.steps} steps; target traced {len(sim.trajectory)} points")
    else:
        print(f"simulation failed: {sim.failure.reason}")
    if args.out:
        payload = {
            "success": sim.success,
            "steps": sim.steps,
            "points": [] if sim.trajectory is None else sim.trajectory.points.tolist(),
            "failure": None if sim.failure is None else sim.failure.reason,
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh)
        print(f"trace written to {args.out}")
    return 0


def _load_trace(path) -> Trajectory:
    data = _load_json(path, "trace file")
    points = data["points"] if isinstance(data, dict) else data
    if not points:
        raise ConfigError(f"trace {path} has no points")
    return Trajectory(np.asarray(points, dtype=np.float64))


def _cmd_eval(args) -> int:
    trace = _load_trace(args.trace)
    task = _load_tasks(args.task, args.task_id)
    reference = curves.sample_points(task.curve, args.eval_points, seed=0, mode="uniform")
    try:
        result = icp_align(trace, reference)
        chamfer = result.chamfer
        note = f" (ICP-aligned, rotation {np.rad2deg(result.transform.angle):.2f} deg)"
    except (DegenerateGeometryError, ValueError):
        chamfer = chamfer_distance(trace, reference)
        note = " (unaligned: trace too small for ICP)"
    print(f"task {task.id}: chamfer {chamfer:.6g}{note}")
    return 0


def _loop_config_from_args(args, overrides: dict) -> orchestrator.LoopConfig:
    merged = dict(overrides)
    for key, attr in [
        ("b", "b"),
        ("r_max", "r_max"),
        ("epsilon", "epsilon"),
        ("num_examples", "num_examples"),
        ("mem_k", "mem"),
        ("feedback_enabled", "feedback"),
        ("sfb_enabled", "sfb"),
    ]:
        val = getattr(args, attr, None)
        if val is not None:
            merged[key] = val
    try:
        return orchestrator.LoopConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad loop configuration: {exc}")


def _select_backend(config: dict, name):
    backends = config.get("backends")
    if not backends:
        raise ConfigError("config has no 'backends' section")
    if name is None:
        name = next(iter(backends))
    if name not in backends:
        raise ConfigError(f"backend {name!r} not in config (have: {', '.join(backends)})")
    cfg = dict(backends[name])
    cfg.setdefault("name", name)
    try:
        return backend_from_config(cfg)
    except (KeyError, ValueError, FileNotFoundError) as exc:
        raise ConfigError(f"bad backend config {name!r}: {exc}")


def _cmd_run(args) -> int:
    config = _load_json(args.config, "config file")
    task = _load_tasks(args.task, args.task_id)
    backend = _select_backend(config, args.backend)
    cfg = _loop_config_from_args(args, config.get("loop", {}))
    record = orchestrator.run_task(task, cfg, backend, MemoryRepo())
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"{task.id}.jsonl")
    orchestrator.save_run(record, out_path)
    best = "none" if record.best is None else f"{record.best['chamfer']:.6g}"
    print(
        f"task {task.id}: terminated by {record.terminated_by} after "
        f"{len(record.iterations)} iterations; best chamfer {best}; "
        f"semantic success {record.semantic_success:.3f}"
    )
    print(f"record written to {out_path}")
    return 0


def _cmd_ablate(args) -> int:
    config = _load_json(args.grid_config, "grid config")
    if "backends" not in config or not config["backends"]:
        raise ConfigError("grid config must define at least one backend")
    grid_cfg = config.get("grid", {})
    ds_cfg = config.get("dataset", {})
    os.makedirs(args.out, exist_ok=True)
    runs_dir = os.path.join(args.out, "runs")
    os.makedirs(runs_dir, exist_ok=True)

    seed = args.seed if args.seed is not None else ds_cfg.get("seed", grid_cfg.get("seed", 0))
    shapes = tuple(grid_cfg.get("shapes", curves.FAMILIES))
    instances_per_shape = int(grid_cfg.get("instances_per_shape", 5))
    if "path" in ds_cfg:
        dataset = curves.read_dataset(ds_cfg["path"])
    else:
        dataset = curves.generate_dataset(
            seed=seed,
            families=shapes,
            instances_per_family=instances_per_shape,
            n_points=int(ds_cfg.get("n_points", 4)),
            param_mode=ds_cfg.get("param_mode", "uniform"),
        )
    curves.write_dataset(dataset, os.path.join(args.out, "dataset.jsonl"))

    grid = bench.AblationGrid(
        backends=config["backends"],
        shapes=shapes,
        num_examples_levels=tuple(grid_cfg.get("num_examples_levels", (2, 3))),
        mem_levels=tuple(grid_cfg.get("mem_levels", (0, 2))),
        feedback_levels=tuple(grid_cfg.get("feedback_levels", (False, True))),
        sfb_levels=tuple(grid_cfg.get("sfb_levels", (False, True))),
        instances_per_shape=instances_per_shape,
        seed=seed,
        loop_overrides=grid_cfg.get("loop", {}),
    )
    stats, results = bench.run_ablation(grid, dataset, jobs=args.jobs)
    for i, (job, record) in enumerate(results):
        fname = (
            f"{job['backend']}_{job['shape']}_ex{job['num_examples']}"
            f"_fb{int(job['feedback'])}_sfb{int(job['sfb'])}_mem{job['mem']}"
            f"_{record.task_id}.jsonl"
        )
        orchestrator.save_run(record, os.path.join(runs_dir, fname))
    bench.emit_report(stats, "csv", os.path.join(args.out, "results.csv"))
    bench.emit_report(stats, "markdown", os.path.join(args.out, "results.md"))
    print(f"{len(results)} runs, {len(stats)} condition rows -> {args.out}")

    views = [bench.view_from_record(rec, job["backend"], job["shape"]) for job, rec in results]
    wr = bench.paired_feedback_test(views)
    if wr is not None:
        print(
            f"paired Wilcoxon (feedback vs none) on best chamfer: "
            f"W={wr.statistic:.1f}, p={wr.p_value:.4g}, n={wr.n}"
        )
    return 0


def _cmd_report(args) -> int:
    paths = []
    for target in args.records:
        if os.path.isdir(target):
            paths.extend(
                os.path.join(target, f) for f in sorted(os.listdir(target)) if f.endswith(".jsonl")
            )
        else:
            paths.append(target)
    if not paths:
        raise ConfigError("no run records found")
    views = []
    for path in paths:
        try:
            views.append(bench.view_from_summary(orchestrator.load_run_summary(path)))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read run record {path}: {exc}")
    stats = bench.aggregate(views)
    bench.emit_report(stats, args.format, args.out)
    print(f"wrote {len(stats)} condition rows to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mechsynth", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="sample benchmark instances to JSONL")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="dataset.jsonl")
    p.add_argument("--families", default=None, help="comma-separated subset of families")
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--param-mode", choices=("uniform", "random"), default="uniform")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("simulate", help="simulate a .mech file")
    p.add_argument("mech")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", default=None, help="write the target trace as JSON")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("eval", help="score a trace against a task")
    p.add_argument("trace")
    p.add_argument("task")
    p.add_argument("--task-id", default=None)
    p.add_argument("--eval-points", type=int, default=128)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="run the synthesis loop on one task")
    p.add_argument("task")
    p.add_argument("--task-id", default=None)
    p.add_argument("--config", required=True, help="JSON config with a 'backends' section")
    p.add_argument("--backend", default=None)
    p.add_argument("--out", default="runs")
    p.add_argument("--b", type=int, default=None)
    p.add_argument("--r-max", dest="r_max", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--num-examples", dest="num_examples", type=int, default=None)
    p.add_argument("--mem", type=int, default=None)
    p.add_argument("--feedback", dest="feedback", type=lambda s: s.lower() in ("1", "yes", "true"), default=None)
    p.add_argument("--sfb", dest="sfb", type=lambda s: s.lower() in ("1", "yes", "true"), default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ablate", help="run the full-factorial ablation grid")
    p.add_argument("grid_config")
    p.add_argument("--out", default="ablation")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("report", help="aggregate saved run records")
    p.add_argument("records", nargs="+", help="run record files or directories")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
