"""Command-line harness: dataset generation, episodes, batches, and plots.

Exit codes are stable API: 0 success (run: converged), 1 run did not
converge, 2 invalid configuration or flags, 3 write failure or unreadable
log, 4 numeric fault during an episode.  Every command takes an explicit
``--seed``; there is no wall-clock default.  Each output gets a sibling
``<output>.manifest.json`` recording the resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from . import simulator
from .dataset import write_dataset
from .errors import ClfReachError, ConfigError, FaultError
from .kinematics import chain_from_dict, ur5_chain

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FAULT = 4


def _episode_config(rc: cfgmod.ResolvedConfig, seed: int, source: str,
                    schedule=()) -> simulator.EpisodeConfig:
    return simulator.EpisodeConfig(
        chain=rc.chain, camera=rc.camera, grid=rc.grid, seed=seed,
        scene=rc.fixed_scene, scene_config=rc.scene_config, clf=rc.clf,
        arbitrator=rc.arbitrator, source=source, noise=rc.noise,
        dt=rc.dt, max_time=rc.max_time, schedule=schedule,
    )


def cmd_gen_dataset(args) -> int:
    try:
        rc = cfgmod.load_config(args.config)
        ds_cfg = cfgmod.dataset_config(rc)
        if args.n < 1:
            raise ConfigError("--n must be >= 1")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        n = write_dataset(args.out, ds_cfg, args.n, args.seed)
        cfgmod.write_manifest(
            str(args.out) + ".manifest.json",
            cfgmod.manifest("gen-dataset", args.seed, rc,
                            {"n": args.n, "out": str(args.out)}))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {n} samples to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        rc = cfgmod.load_config(args.config)
        schedule = ()
        if args.schedule:
            schedule = cfgmod.load_schedule(args.schedule, rc.categories)
        ep = _episode_config(rc, args.seed, args.source, schedule)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records, outcome = simulator.run_episode(ep)
    except FaultError as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    if outcome.reason == "Fault":
        print("fault: episode aborted on non-finite numerics", file=sys.stderr)
        return EXIT_FAULT
    try:
        simulator.write_log(args.log, records)
        with open(str(args.log) + ".outcome.json", "w") as f:
            json.dump(simulator.outcome_to_dict(outcome), f, indent=2)
            f.write("\n")
        cfgmod.write_manifest(
            str(args.log) + ".manifest.json",
            cfgmod.manifest("run", args.seed, rc,
                            {"source": args.source, "log": str(args.log)}))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{outcome.reason.lower()}: success={outcome.success} "
          f"steps={len(records)} time_to_grasp={outcome.time_to_grasp}")
    return EXIT_OK if outcome.success else EXIT_NOT_CONVERGED


def cmd_batch(args) -> int:
    try:
        rc = cfgmod.load_config(args.config)
        instance_counts = [int(x) for x in args.instances.split(",") if x.strip()]
        if not instance_counts:
            raise ConfigError("--instances must name at least one count")
        if args.episodes < 1:
            raise ConfigError("--episodes must be >= 1")
        template = _episode_config(rc, seed=0, source=args.source)
        result = simulator.run_batch(
            template, rc.categories, rc.batch_categories, instance_counts,
            args.episodes, args.seed, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = result.to_text()
    print(text, end="")
    if args.out:
        try:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "batch_table.json", "w") as f:
                json.dump(result.to_dict(), f, indent=2)
                f.write("\n")
            with open(out / "batch_table.txt", "w") as f:
                f.write(text)
            cfgmod.write_manifest(
                out / "batch.manifest.json",
                cfgmod.manifest("batch", args.seed, rc, {
                    "episodes": args.episodes, "instances": instance_counts,
                    "categories": rc.batch_categories, "workers": args.workers,
                    "source": args.source}))
        except OSError as exc:
            print(f"error: cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _chain_for_log(log_path):
    """Chain for tool-point reconstruction: sibling manifest, else UR5."""
    manifest_path = Path(str(log_path) + ".manifest.json")
    if manifest_path.exists():
        try:
            with open(manifest_path) as f:
                data = json.load(f)
            return chain_from_dict(data["config"]["chain"])
        except (OSError, KeyError, ValueError, json.JSONDecodeError):
            pass
    return ur5_chain()


def cmd_plot(args) -> int:
    logs = []
    chains = []
    for path in args.log:
        try:
            records = simulator.read_log(path)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"error: cannot read log {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        if not records:
            print(f"error: log {path} is empty", file=sys.stderr)
            return EXIT_IO
        logs.append(records)
        chains.append(_chain_for_log(path))
    from . import plotting  # deferred: pulls in matplotlib

    fig = plotting.trajectory_figure(logs, chains)
    try:
        plotting.save_svg(fig, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out} ({len(logs)} trajectories)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clfreach",
        description="Lyapunov-guided multi-instance reaching simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="write a labeled dataset (JSON lines)")
    p.add_argument("--config", required=True, help="config JSON path")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--n", required=True, type=int, help="sample count")
    p.add_argument("--seed", required=True, type=int, help="master seed")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("run", help="run a single closed-loop episode")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--schedule", default=None, help="perturbation schedule JSON")
    p.add_argument("--source", choices=("oracle", "noisy"), default="oracle")
    p.add_argument("--log", required=True, help="trajectory log output (JSONL)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run a success-rate experiment table")
    p.add_argument("--config", required=True)
    p.add_argument("--episodes", required=True, type=int)
    p.add_argument("--instances", required=True,
                   help="comma list of simultaneous instance counts, e.g. 1,2,3,4")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--source", choices=("oracle", "noisy"), default="oracle")
    p.add_argument("--out", default=None, help="directory for table files")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("plot", help="render trajectory logs to an SVG figure")
    p.add_argument("--log", required=True, nargs="+", help="trajectory log path(s)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ClfReachError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
