"""Command-line entry point: train, evaluate, sweep, ablate, export-trajectories.

Every run writes its fully-resolved configuration next to its outputs so the
run can be reproduced bit-for-bit from the same seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .core import (
    HyperParams,
    ScenarioConfig,
    dump_config,
    load_config,
    with_overrides,
)
from .env import FormationEnv, write_records
from .evaluation import (
    AblationVariant,
    apply_ablation,
    evaluate,
    format_metrics_table,
    rollout_episode,
    sensitivity_sweep,
)
from .intrinsic import IntrinsicConfig
from .marl import Trainer, load_policy

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class UsageError(Exception):
    pass


def _load_configs(args) -> tuple[ScenarioConfig, HyperParams]:
    if args.config:
        if not os.path.exists(args.config):
            raise UsageError(f"config file not found: {args.config}")
        scenario, hp = load_config(args.config)
    else:
        scenario, hp = ScenarioConfig(), HyperParams()
    scenario = with_overrides(scenario, num_pedestrians=args.scenario)
    return scenario, hp


def _prepare_out(args, scenario, hp) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    dump_config(scenario, hp, os.path.join(out, "resolved_config.json"))
    return out


def _ablation_config(name: str | None) -> IntrinsicConfig:
    if not name:
        return IntrinsicConfig()
    try:
        variant = AblationVariant[name.upper()]
    except KeyError:
        raise UsageError(
            f"unknown ablation {name!r}; choose from "
            f"{[v.name for v in AblationVariant]}"
        )
    return apply_ablation(variant, IntrinsicConfig())


def cmd_train(args) -> int:
    scenario, hp = _load_configs(args)
    out = _prepare_out(args, scenario, hp)
    trainer = Trainer(
        scenario,
        hp,
        args.seed,
        intrinsic_config=_ablation_config(args.ablation),
        out_dir=out,
    )
    trainer.train(args.episodes, metrics_path=os.path.join(out, "metrics.jsonl"))
    ckpt = os.path.join(out, "final.npz")
    trainer.save(ckpt)
    print(f"trained {args.episodes} episodes; checkpoint at {ckpt}")
    return 0


def cmd_evaluate(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    bundle = load_policy(args.checkpoint)
    scenario = with_overrides(bundle.scenario, num_pedestrians=args.scenario)
    rng = np.random.default_rng(args.seed)
    metrics = evaluate(bundle, scenario, args.episodes, rng)
    print(format_metrics_table([{"label": f"peds={scenario.num_pedestrians}", **metrics.as_dict()}]))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "evaluation.json"), "w") as f:
            json.dump(metrics.as_dict(), f, indent=2)
    return 0


def cmd_sweep(args) -> int:
    scenario, hp = _load_configs(args)
    out = _prepare_out(args, scenario, hp)
    values = [float(v) for v in args.values.split(",") if v]
    if not values:
        raise UsageError("--values must list at least one number")
    rows = sensitivity_sweep(
        args.param, values, scenario, hp, args.seed, args.episodes, args.eval_episodes
    )
    print(format_metrics_table(rows))
    with open(os.path.join(out, "sweep.jsonl"), "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return 0


def cmd_ablate(args) -> int:
    scenario, hp = _load_configs(args)
    out = _prepare_out(args, scenario, hp)
    trainer = Trainer(
        scenario,
        hp,
        args.seed,
        intrinsic_config=_ablation_config(args.ablation),
        out_dir=out,
    )
    trainer.train(args.episodes, metrics_path=os.path.join(out, "metrics.jsonl"))
    ckpt = os.path.join(out, "final.npz")
    trainer.save(ckpt)
    rng = np.random.default_rng(args.seed + 1)
    metrics = evaluate(trainer.bundle(), scenario, args.eval_episodes, rng)
    label = (args.ablation or "full").lower()
    print(format_metrics_table([{"label": label, **metrics.as_dict()}]))
    with open(os.path.join(out, "ablation.json"), "w") as f:
        json.dump({"ablation": label, **metrics.as_dict()}, f, indent=2)
    return 0


def cmd_export(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    bundle = load_policy(args.checkpoint)
    scenario = with_overrides(bundle.scenario, num_pedestrians=args.scenario)
    env = FormationEnv(scenario)
    rng = np.random.default_rng(args.seed)
    records = []
    for ep in range(args.episodes):
        summary = rollout_episode(
            bundle, env, rng, episode_id=ep, deterministic=True, collect_records=True
        )
        records.extend(summary.records)
    out_dir = os.path.dirname(os.path.abspath(args.trajectories_out))
    os.makedirs(out_dir, exist_ok=True)
    write_records(args.trajectories_out, records)
    print(f"wrote {len(records)} records to {args.trajectories_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formnav", description="Formation navigation training and evaluation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--config", help="JSON config file (scenario + hyperparams)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory")
        p.add_argument(
            "--scenario", type=int, choices=(5, 7, 9), help="pedestrian count override"
        )
        if checkpoint:
            p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("train", help="train a policy")
    common(p)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--ablation", help="intrinsic-reward variant name")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    common(p, checkpoint=True)
    p.add_argument("--episodes", type=int, default=200)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="sensitivity sweep over alpha or lambda")
    common(p)
    p.add_argument("--param", required=True, choices=("alpha", "lambda"))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--episodes", type=int, default=500, help="training budget per value")
    p.add_argument("--eval-episodes", type=int, default=100)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="train + evaluate one ablation variant")
    common(p)
    p.add_argument("--ablation", required=True)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--eval-episodes", type=int, default=100)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export-trajectories", help="roll out and export trajectories")
    common(p, checkpoint=True)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument(
        "--trajectories-out", required=True, help="output JSONL path for the rollout records"
    )
    p.set_defaults(func=cmd_export)
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; our contract says 1.
        return 0 if exc.code == 0 else USAGE_ERROR
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"runtime failure: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
