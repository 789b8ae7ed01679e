"""Command-line entry point: ``frenet-racer <subcommand> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError, SweepSpec
from .vehicle import MismatchSpec


def _add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required, metavar="PATH",
                   help="run configuration (JSON, validated against the shipped schema)")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frenet-racer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train", help="train agents and write checkpoints plus a JSONL log")
    _add_common(p, True)
    p.add_argument("--replicas", type=int, default=1, help="independent agents, seeds seed..seed+N-1")
    p.add_argument("--steps", type=int, default=None, help="override the training step budget")

    p = sub.add_parser("eval", help="evaluate a checkpoint over a number of laps")
    _add_common(p, False)
    p.add_argument("--checkpoint", required=True, metavar="PATH", help="checkpoint file")
    p.add_argument("--track", default=None, help="track id or CSV path (default: training track)")
    p.add_argument("--laps", type=int, default=None, help="evaluation episodes (default 100)")
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    p.add_argument("--mu", type=float, default=None, help="friction coefficient override")
    p.add_argument("--trajectories", action="store_true",
                   help="also write one trajectory CSV per episode")

    p = sub.add_parser("sweep", help="evaluate a checkpoint over a grid of model mismatches")
    _add_common(p, False)
    p.add_argument("--checkpoint", required=True, metavar="PATH", help="checkpoint file")
    p.add_argument("--kind", choices=harness.SWEEP_KINDS, default=None, help="sweep variable")
    p.add_argument("--values", type=float, nargs="+", default=None, help="grid values")
    p.add_argument("--positions", type=float, nargs="+", default=None,
                   help="added-mass positions from the rear axle in m (mass sweep)")
    p.add_argument("--laps", type=int, default=None, help="episodes per cell")
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes")

    p = sub.add_parser("export", help="convert a results file to CSV or JSON")
    p.add_argument("--input", required=True, metavar="PATH", help="results file written by eval or sweep")
    p.add_argument("--format", choices=("csv", "json"), required=True, help="output format")
    p.add_argument("--out", required=True, metavar="PATH", help="output file")

    p = sub.add_parser("validate-config", help="check a configuration file and exit")
    p.add_argument("--config", required=True, metavar="PATH", help="configuration to check")
    return parser


def _config(args) -> harness.RunConfig | None:
    if args.config is None:
        return None
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _cmd_train(args) -> int:
    cfg = _config(args)
    if args.steps is not None:
        cfg = dataclasses.replace(cfg, total_steps=args.steps)
    out = Path(args.out or cfg.out)
    results = harness.train_replicas(cfg, args.replicas, out)
    for r in results:
        print(f"{r.checkpoint}: {r.episodes} episodes, crash-free fraction {r.crash_free_fraction:.3f}")
    return 0


def _eval_settings(args, cfg):
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    workers = args.workers or (cfg.eval.workers if cfg else 1)
    return seed, workers


def _cmd_eval(args) -> int:
    cfg = _config(args)
    seed, workers = _eval_settings(args, cfg)
    laps = args.laps or (cfg.eval.laps if cfg else 100)
    out = Path(args.out or "eval_out")
    mismatch = MismatchSpec(mu_override=args.mu) if args.mu is not None else MismatchSpec()
    report = harness.evaluate(args.checkpoint, args.track, mismatch, laps, seed, workers,
                              out / "trajectories" if args.trajectories else None,
                              cfg.env if cfg else None)
    harness.export(report, "json", out / "eval.json")
    harness.export(report, "csv", out / "episodes.csv")
    print(json.dumps(harness.json_safe(report.summary()), sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    seed, workers = _eval_settings(args, cfg)
    base = cfg.sweep if cfg and cfg.sweep else None
    kind = args.kind or (base.kind if base else None)
    values = args.values or (base.values if base else None)
    if kind is None or values is None:
        raise ConfigError("sweep needs --kind and --values, or a config with a sweep block")
    positions = args.positions or (base.positions if base else ())
    laps = args.laps or (base.laps if base else 100)
    spec = SweepSpec(kind, tuple(values), tuple(positions), laps)
    out = Path(args.out or "sweep_out")
    result = harness.sweep(args.checkpoint, spec, seed, workers)
    harness.export(result, "json", out / f"sweep_{kind}.json")
    harness.export(result, "csv", out / f"sweep_{kind}.csv")
    for row in result.rows:
        print(json.dumps(harness.json_safe(row), sort_keys=True))
    return 0


def _cmd_export(args) -> int:
    results = harness.import_results(args.input)
    harness.export(results, args.format, args.out)
    print(args.out)
    return 0


def _cmd_validate(args) -> int:
    harness.load_config(args.config)
    print(f"{args.config}: ok")
    return 0


COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "sweep": _cmd_sweep,
            "export": _cmd_export, "validate-config": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
