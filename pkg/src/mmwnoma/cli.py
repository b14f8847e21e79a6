"""Command-line front end: train | eval | sweep-snr | sweep-minrate | oracle-check."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .harness import ConfigError, ExperimentConfig


def _parse_float_list(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwnoma",
        description=(
            "Link-level simulator and DDPG solver for a two-user mmWave NOMA "
            "downlink, with TDMA and grid-oracle comparators."
        ),
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="experiment config file (key = value lines)")
        p.add_argument("--seed", type=int, help="override the experiment seed")
        p.add_argument("--out", type=Path, help="output directory (default: runs)")
        p.add_argument("--checkpoint", type=Path, help="existing checkpoint to load")
        p.add_argument("--episodes", type=int, help="override training episode count")

    p_train = sub.add_parser("train", help="train a policy; writes metrics and checkpoints")
    common(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on fresh draws")
    common(p_eval)

    p_snr = sub.add_parser("sweep-snr", help="compare methods across SNR points")
    common(p_snr)
    p_snr.add_argument(
        "--snr-db", type=_parse_float_list, required=True, help="comma-separated SNR list in dB"
    )

    p_rate = sub.add_parser("sweep-minrate", help="compare methods across rate floors")
    common(p_rate)
    p_rate.add_argument(
        "--min-rate", type=_parse_float_list, required=True, help="comma-separated floors in bps/Hz"
    )

    p_oracle = sub.add_parser("oracle-check", help="policy/TDMA gap to the grid oracle (N <= 4)")
    common(p_oracle)
    return parser


def _configure(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        config = harness.load_config(args.config)
    else:
        config = ExperimentConfig()
    config = replace(config, mode=args.mode)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    if args.checkpoint is not None:
        config = replace(config, checkpoint=args.checkpoint)
    if args.episodes is not None:
        config = replace(config, agent=replace(config.agent, episodes=args.episodes))
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _configure(args)
        if args.mode == "train":
            outputs = harness.run_train(config)
            final_score = outputs.result.episode_scores[-1]
            print(f"trained {config.agent.episodes} episodes; final score {final_score:.4f}")
            print(f"metrics: {outputs.metrics_path}")
            print(f"checkpoints: {outputs.final_checkpoint} (final), {outputs.best_checkpoint} (best)")
        elif args.mode == "eval":
            pol, path = harness.run_eval(config)
            print(
                f"evaluated {config.eval_draws} draws: mean sum-rate {pol.sum_rate.mean():.4f}, "
                f"mean reward {pol.reward.mean():.4f}, feasible {1.0 - pol.alpha.mean():.3f}"
            )
            print(f"per-draw table: {path}")
        elif args.mode == "sweep-snr":
            path = harness.run_sweep_snr(config, args.snr_db)
            print(f"SNR sweep over {args.snr_db} written to {path}")
        elif args.mode == "sweep-minrate":
            path = harness.run_sweep_minrate(config, args.min_rate)
            print(f"minimum-rate sweep over {args.min_rate} written to {path}")
        elif args.mode == "oracle-check":
            report, path = harness.run_oracle_check(config)
            print(
                f"oracle gap over {report.n_draws} draws "
                f"({report.n_oracle_feasible} oracle-feasible): "
                f"DDPG/oracle {report.ddpg_oracle_ratio:.4f}, "
                f"TDMA/oracle {report.tdma_oracle_ratio:.4f}"
            )
            print(f"report: {path}")
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown mode {args.mode!r}")
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
