"""Episodic MDP wrapper around the channel and NOMA physics.

State is the flat real vector [Re h1, Im h1, Re h2, Im h2, alpha_prev] of
length 4N+1; the raw action is [Re w1, Im w1, Re w2, Im w2, p1_raw, p2_raw]
of length 4N+2. project_action maps any finite raw vector onto the feasible
set (unit beamformers, powers summing to P), so power feasibility holds by
construction and only the rate floors are penalized through alpha.

A fresh channel pair is drawn every step: the state carries no dynamics
beyond the channel and the previous step's feasibility flag, so each step is
an independent context and the episode is a bookkeeping unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import noma
from .channel import ChannelRealization, MultipathSpec, SteeringConfig, sample_ordered_pair
from .noma import LinkBudget, NomaAction, RateReport

# Raw beamformer parts below this norm cannot be normalized meaningfully.
DEGENERATE_NORM = 1e-12
# Power logits are amplified before the softplus normalizer so a squashed
# (-1, 1) actor output still spans splits from ~4e-4 to ~0.9996 of P.
POWER_LOGIT_GAIN = 6.0
# Raw power logits are clipped here by the softplus inverse (softplus(-60) ~ 9e-27).
RAW_POWER_FLOOR = -60.0


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode length plus everything needed to draw and rate a channel.

    fixed_channels pins the channel pair for every step (used for
    single-instance convergence studies); None means a fresh pair per step.
    """

    steps_per_episode: int
    budget: LinkBudget
    spec: MultipathSpec = MultipathSpec()
    steering: SteeringConfig = SteeringConfig()
    fixed_channels: ChannelRealization | None = None

    def __post_init__(self) -> None:
        if self.steps_per_episode < 1:
            raise ValueError(f"steps_per_episode must be >= 1, got {self.steps_per_episode}")
        if self.fixed_channels is not None and (
            self.fixed_channels.n_antennas != self.steering.n_antennas
        ):
            raise ValueError("fixed_channels antenna count does not match steering config")


def state_dim(n_antennas: int) -> int:
    return 4 * n_antennas + 1


def action_dim(n_antennas: int) -> int:
    return 4 * n_antennas + 2


def flatten_state(channels: ChannelRealization, alpha: float) -> np.ndarray:
    """[Re h1, Im h1, Re h2, Im h2, alpha] as one float vector."""
    return np.concatenate(
        [
            channels.h1.real,
            channels.h1.imag,
            channels.h2.real,
            channels.h2.imag,
            [float(alpha)],
        ]
    )


def unflatten_state(state: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Inverse of flatten_state; returns (h1, h2, alpha)."""
    state = np.asarray(state, dtype=float)
    if state.ndim != 1 or (state.shape[0] - 1) % 4 != 0:
        raise ValueError(f"state length must be 4N+1, got shape {state.shape}")
    n = (state.shape[0] - 1) // 4
    h1 = state[0:n] + 1j * state[n : 2 * n]
    h2 = state[2 * n : 3 * n] + 1j * state[3 * n : 4 * n]
    return h1, h2, float(state[4 * n])


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _softplus_inverse(y: float) -> float:
    """t with softplus(t) = y, clipped at RAW_POWER_FLOOR for y near 0."""
    if y <= 0.0:
        return RAW_POWER_FLOOR
    if y > 30.0:
        return y  # softplus is the identity to double precision up here
    t = y + np.log1p(-np.exp(-y))
    return float(max(t, RAW_POWER_FLOOR))


def project_action(
    raw: np.ndarray,
    budget: LinkBudget,
    channels: ChannelRealization | None = None,
) -> NomaAction:
    """Map any finite raw action vector onto the feasible set.

    Beamformer parts are reassembled to complex vectors and normalized;
    a degenerate (near-zero) part falls back to the matched filter for that
    user's channel when channels are given, else to the first basis vector.
    Powers are a softplus-normalized split of the total budget over the
    gain-amplified logits, so p1 + p2 = P holds exactly.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or (raw.shape[0] - 2) % 4 != 0:
        raise ValueError(f"raw action length must be 4N+2, got shape {raw.shape}")
    if not np.isfinite(raw).all():
        raise ValueError("raw action must be finite")
    n = (raw.shape[0] - 2) // 4

    beams = []
    for idx, part in enumerate((raw[0 : 2 * n], raw[2 * n : 4 * n])):
        w = part[:n] + 1j * part[n:]
        nrm = np.linalg.norm(w)
        if nrm < DEGENERATE_NORM:
            if channels is not None:
                w = noma.matched_filter(channels.h1 if idx == 0 else channels.h2)
            else:
                w = np.zeros(n, dtype=complex)
                w[0] = 1.0
        else:
            w = w / nrm
        beams.append(w)

    s1 = _softplus(POWER_LOGIT_GAIN * raw[4 * n])
    s2 = _softplus(POWER_LOGIT_GAIN * raw[4 * n + 1])
    total = s1 + s2
    if total < 1e-300:
        frac = 0.5
    else:
        frac = s1 / total
    p1 = budget.total_power * frac
    p2 = budget.total_power - p1
    return NomaAction(w1=beams[0], w2=beams[1], p1=float(p1), p2=float(p2))


def action_to_vector(action: NomaAction) -> np.ndarray:
    """Raw vector that project_action maps back to this action.

    Power logits use the softplus inverse, so the round trip is exact to
    floating-point precision for strictly positive powers.
    """
    return np.concatenate(
        [
            action.w1.real,
            action.w1.imag,
            action.w2.real,
            action.w2.imag,
            [
                _softplus_inverse(action.p1) / POWER_LOGIT_GAIN,
                _softplus_inverse(action.p2) / POWER_LOGIT_GAIN,
            ],
        ]
    )


def reset(config: EpisodeConfig, rng: np.random.Generator | int) -> np.ndarray:
    """Fresh ordered channel pair with the feasibility slot cleared."""
    channels = config.fixed_channels
    if channels is None:
        channels = sample_ordered_pair(config.spec, config.steering, rng)
    return flatten_state(channels, 0.0)


def step(
    state: np.ndarray,
    raw_action: np.ndarray,
    config: EpisodeConfig,
    rng: np.random.Generator | int,
) -> tuple[np.ndarray, float, RateReport]:
    """Rate the action against the state's channels, then draw the next state.

    The step's feasibility flag is written into the *next* state's alpha
    slot: the current alpha is unknowable before acting.
    """
    n = config.steering.n_antennas
    state = np.asarray(state, dtype=float)
    if state.shape != (state_dim(n),):
        raise ValueError(f"state shape {state.shape} does not match N={n}")
    raw_action = np.asarray(raw_action, dtype=float)
    if raw_action.shape != (action_dim(n),):
        raise ValueError(f"action shape {raw_action.shape} does not match N={n}")

    h1, h2, _ = unflatten_state(state)
    channels = ChannelRealization(h1=h1, h2=h2)
    action = project_action(raw_action, config.budget, channels)
    report = noma.evaluate_action(channels, action, config.budget)
    rew = noma.reward(report)

    next_channels = config.fixed_channels
    if next_channels is None:
        next_channels = sample_ordered_pair(config.spec, config.steering, rng)
    next_state = flatten_state(next_channels, float(report.alpha))
    return next_state, rew, report


class NomaEnv:
    """Stateful convenience wrapper over reset/step for one training loop.

    One instance is single-threaded; run parallel evaluations with separate
    instances holding independent generators.
    """

    def __init__(self, config: EpisodeConfig, rng: np.random.Generator | int):
        self.config = config
        self.rng = np.random.default_rng(rng)
        self.state: np.ndarray | None = None

    def reset(self) -> np.ndarray:
        self.state = reset(self.config, self.rng)
        return self.state

    def step(self, raw_action: np.ndarray) -> tuple[np.ndarray, float, RateReport]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        next_state, rew, report = step(self.state, raw_action, self.config, self.rng)
        self.state = next_state
        return next_state, rew, report
