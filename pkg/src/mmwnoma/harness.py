"""Experiment drivers: configuration file, metrics persistence, training and
evaluation runs, SNR / minimum-rate sweeps, and the oracle gap check.

All randomness is derived from the experiment seed through stable hashes, so
re-running any mode with the same config and seed reproduces identical result
columns. Sweep points share one evaluation channel set (common random
numbers), and every method within a point is scored on those same draws.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import ddpg, neural, noma
from .channel import ChannelRealization, MultipathSpec, SteeringConfig, sample_ordered_pair
from .ddpg import AgentConfig, TrainResult
from .env import EpisodeConfig, flatten_state, project_action
from .neural import MlpParams
from .noma import InfeasibleOnGridError, LinkBudget

ORACLE_MAX_ANTENNAS = 4

METRICS_HEADER = (
    "run_id",
    "episode",
    "step",
    "reward",
    "score",
    "rate1",
    "rate2",
    "alpha",
    "timestamp",
)


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


# Flat dotted-key schema; angles cross the boundary in degrees.
CONFIG_SCHEMA = {
    "seed": int,
    "run.eval_draws": int,
    "run.oracle_grid": int,
    "run.train_missing": _parse_bool,
    "steering.n_antennas": int,
    "channel.n_paths": int,
    "channel.dominant_gain_var": float,
    "channel.secondary_gain_var": float,
    "channel.aod_low_deg": float,
    "channel.aod_high_deg": float,
    "budget.snr_db": float,
    "budget.noise_var": float,
    "budget.min_rate_1": float,
    "budget.min_rate_2": float,
    "agent.gamma": float,
    "agent.actor_lr": float,
    "agent.critic_lr": float,
    "agent.tau": float,
    "agent.batch_size": int,
    "agent.buffer_capacity": int,
    "agent.hidden_width": int,
    "agent.episodes": int,
    "agent.steps_per_episode": int,
    "agent.noise_kind": str,
    "agent.noise_sigma_start": float,
    "agent.noise_sigma_end": float,
    "agent.ou_theta": float,
}


@dataclass
class ExperimentConfig:
    """One experiment: mode is set by the CLI subcommand, the rest by the
    config file (defaults follow the reference protocol: N=16, SNR 30 dB,
    unit rate floors, 1000 episodes of 250 steps)."""

    mode: str = "train"
    seed: int = 1
    out_dir: Path = Path("runs")
    checkpoint: Path | None = None
    eval_draws: int = 1000
    oracle_grid: int = 41
    train_missing: bool = True
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    channel_spec: MultipathSpec = field(default_factory=MultipathSpec)
    snr_db: float = 30.0
    noise_var: float = 1.0
    min_rates: tuple[float, float] = (1.0, 1.0)
    agent: AgentConfig = field(default_factory=AgentConfig)
    steps_per_episode: int = 250

    def budget(self) -> LinkBudget:
        return LinkBudget.from_snr_db(self.snr_db, self.min_rates, self.noise_var)

    def episode_config(self, fixed_channels: ChannelRealization | None = None) -> EpisodeConfig:
        return EpisodeConfig(
            steps_per_episode=self.steps_per_episode,
            budget=self.budget(),
            spec=self.channel_spec,
            steering=self.steering,
            fixed_channels=fixed_channels,
        )


def parse_config_text(text: str) -> dict[str, object]:
    """Parse `key = value` lines; '#' starts a comment, keys are validated."""
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw_val = line.partition("=")
        key = key.strip()
        raw_val = raw_val.strip()
        if not sep or not key or not raw_val:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = CONFIG_SCHEMA[key](raw_val)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return values


def config_from_values(values: dict[str, object]) -> ExperimentConfig:
    """Build an ExperimentConfig from schema-keyed values (defaults fill gaps)."""
    unknown = set(values) - set(CONFIG_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = ExperimentConfig()

    def get(key: str, fallback):
        return values.get(key, fallback)

    steering = SteeringConfig(n_antennas=get("steering.n_antennas", base.steering.n_antennas))
    spec = MultipathSpec(
        n_paths=get("channel.n_paths", base.channel_spec.n_paths),
        dominant_gain_var=get("channel.dominant_gain_var", base.channel_spec.dominant_gain_var),
        secondary_gain_var=get("channel.secondary_gain_var", base.channel_spec.secondary_gain_var),
        aod_low=math.radians(get("channel.aod_low_deg", math.degrees(base.channel_spec.aod_low))),
        aod_high=math.radians(get("channel.aod_high_deg", math.degrees(base.channel_spec.aod_high))),
    )
    agent = AgentConfig(
        gamma=get("agent.gamma", base.agent.gamma),
        actor_lr=get("agent.actor_lr", base.agent.actor_lr),
        critic_lr=get("agent.critic_lr", base.agent.critic_lr),
        tau=get("agent.tau", base.agent.tau),
        batch_size=get("agent.batch_size", base.agent.batch_size),
        buffer_capacity=get("agent.buffer_capacity", base.agent.buffer_capacity),
        hidden_width=get("agent.hidden_width", base.agent.hidden_width),
        episodes=get("agent.episodes", base.agent.episodes),
        noise_kind=get("agent.noise_kind", base.agent.noise_kind),
        noise_sigma_start=get("agent.noise_sigma_start", base.agent.noise_sigma_start),
        noise_sigma_end=get("agent.noise_sigma_end", base.agent.noise_sigma_end),
        ou_theta=get("agent.ou_theta", base.agent.ou_theta),
    )
    return ExperimentConfig(
        seed=get("seed", base.seed),
        eval_draws=get("run.eval_draws", base.eval_draws),
        oracle_grid=get("run.oracle_grid", base.oracle_grid),
        train_missing=get("run.train_missing", base.train_missing),
        steering=steering,
        channel_spec=spec,
        snr_db=get("budget.snr_db", base.snr_db),
        noise_var=get("budget.noise_var", base.noise_var),
        min_rates=(
            get("budget.min_rate_1", base.min_rates[0]),
            get("budget.min_rate_2", base.min_rates[1]),
        ),
        agent=agent,
        steps_per_episode=get("agent.steps_per_episode", base.steps_per_episode),
    )


def load_config(path) -> ExperimentConfig:
    return config_from_values(parse_config_text(Path(path).read_text()))


def _stable_seed(*parts) -> int:
    """Platform-stable 64-bit seed derived from the given labels."""
    text = "|".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class TrainOutputs:
    result: TrainResult
    metrics_path: Path
    episodes_path: Path
    final_checkpoint: Path
    best_checkpoint: Path


def run_train(
    config: ExperimentConfig,
    episode_config: EpisodeConfig | None = None,
    tag: str = "",
) -> TrainOutputs:
    """Train per the config; persist step metrics, episode summaries, and the
    final plus best-score checkpoints."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = f"_{tag}" if tag else ""
    run_id = f"train{suffix}-s{config.seed}"
    ep_cfg = episode_config if episode_config is not None else config.episode_config()

    metrics_path = out / f"metrics{suffix}.csv"
    episodes_path = out / f"episodes{suffix}.csv"
    final_path = out / f"final{suffix}.ckpt"
    best_path = out / f"best{suffix}.ckpt"

    with open(metrics_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_HEADER)

        def sink(rec: ddpg.StepRecord) -> None:
            writer.writerow(
                (
                    run_id,
                    rec.episode,
                    rec.step,
                    rec.reward,
                    rec.score,
                    rec.rate1,
                    rec.rate2,
                    rec.alpha,
                    _timestamp(),
                )
            )

        result = ddpg.train(ep_cfg, config.agent, _stable_seed(config.seed, "train", tag), sink)

    per_episode = result.rewards.reshape(config.agent.episodes, ep_cfg.steps_per_episode)
    with open(episodes_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("run_id", "episode", "score", "mean_reward"))
        for ep in range(config.agent.episodes):
            writer.writerow((run_id, ep, result.episode_scores[ep], per_episode[ep].mean()))

    neural.save_checkpoint(final_path, {"actor": result.actor, "critic": result.critic})
    neural.save_checkpoint(best_path, {"actor": result.best_actor, "critic": result.best_critic})
    return TrainOutputs(
        result=result,
        metrics_path=metrics_path,
        episodes_path=episodes_path,
        final_checkpoint=final_path,
        best_checkpoint=best_path,
    )


def draw_eval_channels(config: ExperimentConfig, n_draws: int) -> list[ChannelRealization]:
    """Shared evaluation draws; identical for every sweep point under one seed."""
    rng = np.random.default_rng(_stable_seed(config.seed, "eval-channels"))
    return [
        sample_ordered_pair(config.channel_spec, config.steering, rng) for _ in range(n_draws)
    ]


@dataclass
class PolicyEval:
    sum_rate: np.ndarray
    reward: np.ndarray
    rate1: np.ndarray
    rate2: np.ndarray
    alpha: np.ndarray


def evaluate_policy(
    actor: MlpParams,
    channels_list: list[ChannelRealization],
    budget: LinkBudget,
) -> PolicyEval:
    """Deterministic (noise-free) policy rollout over the given draws."""
    n = len(channels_list)
    out = PolicyEval(*(np.empty(n) for _ in range(5)))
    for i, ch in enumerate(channels_list):
        state = flatten_state(ch, 0.0)
        raw = ddpg.act(actor, state)
        action = project_action(raw, budget, ch)
        report = noma.evaluate_action(ch, action, budget)
        out.sum_rate[i] = report.sum_rate
        out.reward[i] = noma.reward(report)
        out.rate1[i] = report.rate1
        out.rate2[i] = report.rate2
        out.alpha[i] = report.alpha
    return out


def evaluate_tdma(channels_list: list[ChannelRealization], budget: LinkBudget) -> np.ndarray:
    return np.array([noma.tdma_baseline(ch, budget) for ch in channels_list])


def evaluate_oracle(
    channels_list: list[ChannelRealization],
    budget: LinkBudget,
    grid_resolution: int,
) -> tuple[np.ndarray, np.ndarray]:
    """(best feasible sum-rates, feasibility mask); infeasible draws score 0,
    mirroring the zero reward an agent earns on them."""
    values = np.zeros(len(channels_list))
    feasible = np.zeros(len(channels_list), dtype=bool)
    for i, ch in enumerate(channels_list):
        try:
            _, values[i] = noma.oracle_grid_search(ch, budget, grid_resolution)
            feasible[i] = True
        except InfeasibleOnGridError:
            values[i] = 0.0
    return values, feasible


def _load_actor(path) -> MlpParams:
    nets = neural.load_checkpoint(path)
    if "actor" not in nets:
        raise ConfigError(f"checkpoint {path} has no 'actor' network")
    return nets["actor"]


def _policy_for_point(
    config: ExperimentConfig,
    snr_db: float,
    min_rates: tuple[float, float],
) -> tuple[MlpParams, float | None]:
    """Actor for one sweep point, plus its final training score when trained
    here (None when loaded from disk).

    A config-level checkpoint pins one shared policy for every point;
    otherwise each point trains (or reloads) its own, seeded by the point's
    physical parameters so equal points coincide across sweep modes.
    """
    if config.checkpoint is not None:
        return _load_actor(config.checkpoint), None
    tag = f"snr{snr_db:g}_r{min_rates[0]:g}_{min_rates[1]:g}"
    point_path = Path(config.out_dir) / f"ckpt_{tag}.ckpt"
    if point_path.exists():
        return _load_actor(point_path), None
    if not config.train_missing:
        raise FileNotFoundError(
            f"no checkpoint for sweep point {tag} and training is disabled "
            f"(expected {point_path})"
        )
    point_cfg = replace(config, snr_db=snr_db, min_rates=min_rates)
    ep_cfg = point_cfg.episode_config()
    result = ddpg.train(
        ep_cfg, config.agent, _stable_seed(config.seed, "train", snr_db, min_rates)
    )
    neural.save_checkpoint(point_path, {"actor": result.actor, "critic": result.critic})
    return result.actor, float(result.episode_scores[-1])


SWEEP_SNR_HEADER = (
    "snr_db",
    "n_draws",
    "ddpg_sum_rate",
    "ddpg_reward",
    "ddpg_feasible_frac",
    "tdma_sum_rate",
    "oracle_sum_rate",
    "oracle_feasible_frac",
    "ddpg_train_score",
)


def _sweep_point_row(
    config: ExperimentConfig,
    channels_list: list[ChannelRealization],
    snr_db: float,
    min_rates: tuple[float, float],
) -> tuple:
    budget = LinkBudget.from_snr_db(snr_db, min_rates, config.noise_var)
    actor, train_score = _policy_for_point(config, snr_db, min_rates)
    pol = evaluate_policy(actor, channels_list, budget)
    tdma = evaluate_tdma(channels_list, budget)
    if config.steering.n_antennas <= ORACLE_MAX_ANTENNAS:
        oracle_vals, oracle_feas = evaluate_oracle(channels_list, budget, config.oracle_grid)
        oracle_mean: object = oracle_vals.mean()
        oracle_frac: object = oracle_feas.mean()
    else:
        oracle_mean = ""
        oracle_frac = ""
    return (
        pol.sum_rate.mean(),
        pol.reward.mean(),
        1.0 - pol.alpha.mean(),
        tdma.mean(),
        oracle_mean,
        oracle_frac,
        train_score if train_score is not None else "",
    )


def run_sweep_snr(config: ExperimentConfig, snr_db_list: list[float]) -> Path:
    """Paired DDPG / TDMA / oracle comparison across SNR points (Fig. 3 shape)."""
    if not snr_db_list:
        raise ConfigError("sweep needs at least one SNR point")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    channels_list = draw_eval_channels(config, config.eval_draws)
    path = out / "sweep_snr.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_SNR_HEADER)
        for snr in snr_db_list:
            row = _sweep_point_row(config, channels_list, snr, config.min_rates)
            writer.writerow((snr, len(channels_list), *row))
    return path


SWEEP_MINRATE_HEADER = (
    "min_rate",
    "n_draws",
    "ddpg_sum_rate",
    "ddpg_reward",
    "ddpg_feasible_frac",
    "tdma_sum_rate",
    "oracle_sum_rate",
    "oracle_feasible_frac",
    "ddpg_train_score",
)


def run_sweep_minrate(config: ExperimentConfig, min_rate_list: list[float]) -> Path:
    """Comparison across symmetric rate floors at the config's SNR (Fig. 4 shape)."""
    if not min_rate_list:
        raise ConfigError("sweep needs at least one minimum-rate point")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    channels_list = draw_eval_channels(config, config.eval_draws)
    path = out / "sweep_minrate.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_MINRATE_HEADER)
        for r in min_rate_list:
            row = _sweep_point_row(config, channels_list, config.snr_db, (r, r))
            writer.writerow((r, len(channels_list), *row))
    return path


@dataclass
class GapReport:
    n_draws: int
    n_oracle_feasible: int
    ddpg_oracle_ratio: float
    tdma_oracle_ratio: float
    mean_ddpg_sum_rate: float
    mean_tdma_sum_rate: float
    mean_oracle_sum_rate: float


def run_oracle_check(config: ExperimentConfig) -> tuple[GapReport, Path]:
    """Mean DDPG/oracle and TDMA/oracle sum-rate ratios over shared draws.

    Ratios average over draws where the oracle found a feasible point;
    requires a small array (N <= 4) since the oracle cost grows on its grid.
    """
    n = config.steering.n_antennas
    if n > ORACLE_MAX_ANTENNAS:
        raise ConfigError(
            f"oracle check supports N <= {ORACLE_MAX_ANTENNAS} antennas, got N={n}; "
            "reduce steering.n_antennas"
        )
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    budget = config.budget()
    actor, _ = _policy_for_point(config, config.snr_db, config.min_rates)
    channels_list = draw_eval_channels(config, config.eval_draws)
    pol = evaluate_policy(actor, channels_list, budget)
    tdma = evaluate_tdma(channels_list, budget)
    oracle_vals, oracle_feas = evaluate_oracle(channels_list, budget, config.oracle_grid)
    if not oracle_feas.any():
        raise InfeasibleOnGridError(
            "oracle found no feasible point on any evaluation draw; "
            "lower the rate floors or raise the SNR"
        )
    mask = oracle_feas
    report = GapReport(
        n_draws=len(channels_list),
        n_oracle_feasible=int(mask.sum()),
        ddpg_oracle_ratio=float(np.mean(pol.sum_rate[mask] / oracle_vals[mask])),
        tdma_oracle_ratio=float(np.mean(tdma[mask] / oracle_vals[mask])),
        mean_ddpg_sum_rate=float(pol.sum_rate.mean()),
        mean_tdma_sum_rate=float(tdma.mean()),
        mean_oracle_sum_rate=float(oracle_vals.mean()),
    )
    path = out / "oracle_check.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            (
                "n_draws",
                "n_oracle_feasible",
                "ddpg_oracle_ratio",
                "tdma_oracle_ratio",
                "mean_ddpg_sum_rate",
                "mean_tdma_sum_rate",
                "mean_oracle_sum_rate",
            )
        )
        writer.writerow(
            (
                report.n_draws,
                report.n_oracle_feasible,
                report.ddpg_oracle_ratio,
                report.tdma_oracle_ratio,
                report.mean_ddpg_sum_rate,
                report.mean_tdma_sum_rate,
                report.mean_oracle_sum_rate,
            )
        )
    return report, path


EVAL_HEADER = ("draw", "sum_rate", "reward", "rate1", "rate2", "alpha", "tdma_sum_rate")


def run_eval(config: ExperimentConfig) -> tuple[PolicyEval, Path]:
    """Score a stored policy on fresh shared draws; one CSV row per draw."""
    if config.checkpoint is None:
        raise ConfigError("eval mode requires a checkpoint (--checkpoint)")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    actor = _load_actor(config.checkpoint)
    budget = config.budget()
    channels_list = draw_eval_channels(config, config.eval_draws)
    pol = evaluate_policy(actor, channels_list, budget)
    tdma = evaluate_tdma(channels_list, budget)
    path = out / "eval.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(EVAL_HEADER)
        for i in range(len(channels_list)):
            writer.writerow(
                (i, pol.sum_rate[i], pol.reward[i], pol.rate1[i], pol.rate2[i], int(pol.alpha[i]), tdma[i])
            )
    return pol, path
