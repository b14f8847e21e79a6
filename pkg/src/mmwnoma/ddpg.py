"""Deep deterministic policy gradient agent.

Off-policy actor-critic with a uniform replay buffer, additive exploration
noise on the raw action, target networks with soft updates, and one critic +
one actor + one target update per environment step. The critic is trained on
raw (pre-projection) actions, matching what the actor emits, so the action
gradient it supplies to the policy update is meaningful.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import neural
from .env import EpisodeConfig, NomaEnv, action_dim
from .neural import AdamState, MlpParams, adam_init, adam_step, backward, forward

# Window of the paper's training-curve quantity: moving average of the last
# 250 immediate rewards.
SCORE_WINDOW = 250


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss or objective stops being finite."""


@dataclass(frozen=True)
class Transition:
    """One (s, a_raw, r, s') step; the action is pre-projection."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


class Batch(NamedTuple):
    states: np.ndarray       # (B, 4N+1)
    actions: np.ndarray      # (B, 4N+2)
    rewards: np.ndarray      # (B,)
    next_states: np.ndarray  # (B, 4N+1)


class ReplayBuffer:
    """Bounded FIFO of transitions with a uniform sampler."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._buf: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, transition: Transition) -> None:
        self._buf.append(transition)

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if len(self._buf) < batch_size:
            raise ValueError(f"buffer holds {len(self._buf)} < batch_size {batch_size}")
        idx = rng.integers(0, len(self._buf), size=batch_size)
        picks = [self._buf[i] for i in idx]
        return Batch(
            states=np.stack([t.state for t in picks]),
            actions=np.stack([t.action for t in picks]),
            rewards=np.array([t.reward for t in picks]),
            next_states=np.stack([t.next_state for t in picks]),
        )


@dataclass
class AgentConfig:
    """DDPG hyperparameters. Defaults follow the experimental protocol:
    discount 0.99, actor lr 1e-4, critic lr 5e-4; the rest are standard
    DDPG values left open by that protocol."""

    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 5e-4
    tau: float = 0.005
    batch_size: int = 64
    buffer_capacity: int = 100_000
    hidden_width: int = 128
    episodes: int = 1000
    actor_output: str = "tanh"  # "identity" lifts the squash (diverges easily)
    noise_kind: str = "gaussian"  # "gaussian" or "ou"
    noise_sigma_start: float = 0.2
    noise_sigma_end: float = 0.02
    ou_theta: float = 0.15

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if self.actor_output not in ("tanh", "identity"):
            raise ValueError(f"actor_output must be 'tanh' or 'identity', got {self.actor_output!r}")
        if self.noise_kind not in ("gaussian", "ou"):
            raise ValueError(f"noise_kind must be 'gaussian' or 'ou', got {self.noise_kind!r}")
        if self.noise_sigma_start < 0.0 or self.noise_sigma_end < 0.0:
            raise ValueError("noise sigmas must be nonnegative")


class GaussianNoise:
    """IID zero-mean Gaussian exploration noise per action component."""

    def __init__(self, dim: int, sigma: float):
        self.dim = dim
        self.sigma = sigma

    def reset(self) -> None:
        pass

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sigma * rng.standard_normal(self.dim)


class OrnsteinUhlenbeckNoise:
    """Temporally correlated exploration noise (mean-reverting to zero)."""

    def __init__(self, dim: int, sigma: float, theta: float = 0.15):
        self.dim = dim
        self.sigma = sigma
        self.theta = theta
        self._x = np.zeros(dim)

    def reset(self) -> None:
        self._x = np.zeros(self.dim)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        self._x = self._x - self.theta * self._x + self.sigma * rng.standard_normal(self.dim)
        return self._x.copy()


def make_noise(config: AgentConfig, dim: int) -> GaussianNoise | OrnsteinUhlenbeckNoise:
    if config.noise_kind == "ou":
        return OrnsteinUhlenbeckNoise(dim, config.noise_sigma_start, config.ou_theta)
    return GaussianNoise(dim, config.noise_sigma_start)


def act(
    actor: MlpParams,
    state: np.ndarray,
    noise: GaussianNoise | OrnsteinUhlenbeckNoise | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Policy output for one state; exploration noise added when given."""
    out, _ = forward(actor, state)
    if noise is None:
        return out
    if rng is None:
        raise ValueError("exploration noise requires a generator")
    return out + noise.sample(rng)


def critic_target(
    critic_tgt: MlpParams,
    actor_tgt: MlpParams,
    batch: Batch,
    gamma: float,
) -> np.ndarray:
    """Bootstrapped targets y_i = r_i + gamma * Q'(s'_i, pi'(s'_i))."""
    next_actions, _ = forward(actor_tgt, batch.next_states)
    q_next, _ = forward(critic_tgt, np.hstack([batch.next_states, next_actions]))
    return batch.rewards + gamma * q_next[:, 0]


def update_critic(
    critic: MlpParams,
    opt: AdamState,
    batch: Batch,
    targets: np.ndarray,
) -> float:
    """One Adam step on the mean squared Bellman error; returns pre-step loss."""
    x = np.hstack([batch.states, batch.actions])
    q, cache = forward(critic, x)
    resid = q[:, 0] - targets
    loss = float(np.mean(resid**2))
    grad_out = (2.0 / resid.shape[0]) * resid[:, None]
    grads, _ = backward(critic, cache, grad_out)
    adam_step(critic, grads, opt)
    return loss


def update_actor(
    actor: MlpParams,
    opt: AdamState,
    critic: MlpParams,
    batch: Batch,
) -> float:
    """One Adam ascent step on mean Q(s, pi(s)); critic params untouched.

    The policy gradient chains the critic's input gradient (its action
    slice) through the actor, implemented as descent on -mean Q. Returns
    the pre-step objective estimate.
    """
    actions, actor_cache = forward(actor, batch.states)
    s_width = batch.states.shape[1]
    q, critic_cache = forward(critic, np.hstack([batch.states, actions]))
    mean_q = float(np.mean(q))
    grad_out = np.full((q.shape[0], 1), -1.0 / q.shape[0])
    _, grad_in = backward(critic, critic_cache, grad_out)
    grads, _ = backward(actor, actor_cache, grad_in[:, s_width:])
    adam_step(actor, grads, opt)
    return mean_q


def soft_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """In-place target <- target + tau * (online - target)."""
    if target.specs != online.specs:
        raise ValueError("target and online networks have different architectures")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    for pack in ((target.weights, online.weights), (target.biases, online.biases)):
        for t, o in zip(*pack):
            if tau == 0.0:
                continue
            if tau == 1.0:
                t[...] = o
            else:
                t += tau * (o - t)
    return target


class StepRecord(NamedTuple):
    """Per-step training metrics handed to the harness sink."""

    episode: int
    step: int
    global_step: int
    reward: float
    score: float
    rate1: float
    rate2: float
    alpha: int


@dataclass
class TrainResult:
    actor: MlpParams
    critic: MlpParams
    best_actor: MlpParams
    best_critic: MlpParams
    best_score: float
    rewards: np.ndarray         # per step
    scores: np.ndarray          # per step, moving average over SCORE_WINDOW
    episode_scores: np.ndarray  # score at each episode end


def train(
    env_config: EpisodeConfig,
    agent_config: AgentConfig,
    rng: np.random.Generator | int,
    sink: Callable[[StepRecord], None] | None = None,
) -> TrainResult:
    """Run the full DDPG loop; deterministic given the seed.

    Independent substreams drive network init, the environment, exploration
    noise, and replay sampling, so a control run (for example a random
    policy) can replay the same channel sequence by reusing the seed.
    """
    root = np.random.default_rng(rng)
    init_rng, env_rng, noise_rng, sample_rng = root.spawn(4)

    n = env_config.steering.n_antennas
    actor = neural.build_actor(
        n, agent_config.hidden_width, init_rng, output_activation=agent_config.actor_output
    )
    critic = neural.build_critic(n, agent_config.hidden_width, init_rng)
    actor_tgt = actor.copy()
    critic_tgt = critic.copy()
    opt_actor = adam_init(actor, agent_config.actor_lr)
    opt_critic = adam_init(critic, agent_config.critic_lr)
    buffer = ReplayBuffer(agent_config.buffer_capacity)
    noise = make_noise(agent_config, action_dim(n))
    env = NomaEnv(env_config, env_rng)

    total_steps = agent_config.episodes * env_config.steps_per_episode
    decay_span = max(total_steps - 1, 1)
    window: deque[float] = deque(maxlen=SCORE_WINDOW)
    window_sum = 0.0
    rewards = np.empty(total_steps)
    scores = np.empty(total_steps)
    episode_scores = np.empty(agent_config.episodes)
    best_score = -np.inf
    best_actor = actor.copy()
    best_critic = critic.copy()

    g = 0
    for episode in range(agent_config.episodes):
        state = env.reset()
        noise.reset()
        for t in range(env_config.steps_per_episode):
            frac = g / decay_span
            noise.sigma = (
                agent_config.noise_sigma_start
                + (agent_config.noise_sigma_end - agent_config.noise_sigma_start) * frac
            )
            raw = act(actor, state, noise, noise_rng)
            next_state, rew, report = env.step(raw)
            buffer.push(Transition(state, raw, rew, next_state))

            if len(buffer) >= agent_config.batch_size:
                batch = buffer.sample(sample_rng, agent_config.batch_size)
                targets = critic_target(critic_tgt, actor_tgt, batch, agent_config.gamma)
                loss = update_critic(critic, opt_critic, batch, targets)
                mean_q = update_actor(actor, opt_actor, critic, batch)
                if not (np.isfinite(loss) and np.isfinite(mean_q)):
                    raise TrainingDivergedError(
                        f"non-finite training signal at step {g}: loss={loss}, meanQ={mean_q}"
                    )
                soft_update(critic_tgt, critic, agent_config.tau)
                soft_update(actor_tgt, actor, agent_config.tau)

            if len(window) == SCORE_WINDOW:
                window_sum -= window[0]
            window.append(rew)
            window_sum += rew
            score = window_sum / len(window)
            rewards[g] = rew
            scores[g] = score
            if sink is not None:
                sink(StepRecord(episode, t, g, rew, score, report.rate1, report.rate2, report.alpha))
            state = next_state
            g += 1

        episode_scores[episode] = scores[g - 1]
        if episode_scores[episode] > best_score:
            best_score = float(episode_scores[episode])
            best_actor = actor.copy()
            best_critic = critic.copy()

    return TrainResult(
        actor=actor,
        critic=critic,
        best_actor=best_actor,
        best_critic=best_critic,
        best_score=best_score,
        rewards=rewards,
        scores=scores,
        episode_scores=episode_scores,
    )


def rollout_random_policy(
    env_config: EpisodeConfig,
    episodes: int,
    rng: np.random.Generator | int,
) -> np.ndarray:
    """Control run: standard-normal raw actions through the same env stream.

    Uses the same substream layout as train, so with the same seed the
    channel sequence is identical to a training run's.
    """
    root = np.random.default_rng(rng)
    _, env_rng, noise_rng, _ = root.spawn(4)
    env = NomaEnv(env_config, env_rng)
    rewards = np.empty(episodes * env_config.steps_per_episode)
    g = 0
    for _ in range(episodes):
        env.reset()
        for _ in range(env_config.steps_per_episode):
            raw = noise_rng.standard_normal(action_dim(env_config.steering.n_antennas))
            _, rew, _ = env.step(raw)
            rewards[g] = rew
            g += 1
    return rewards
