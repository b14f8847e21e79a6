"""Two-user mmWave NOMA downlink simulator with a DDPG sum-rate solver.

Modules: channel (sparse ULA channels), noma (SINR/rate physics, TDMA
baseline, grid oracle), env (MDP wrapper and action projection), neural
(dense-network engine), ddpg (agent and training loop), harness (config,
experiment drivers), cli (command line).
"""

from .channel import (
    ChannelRealization,
    MultipathSpec,
    SteeringConfig,
    sample_channel,
    sample_ordered_pair,
    steering_vector,
)
from .ddpg import AgentConfig, ReplayBuffer, TrainResult, Transition, train
from .env import EpisodeConfig, NomaEnv, flatten_state, project_action, unflatten_state
from .harness import ExperimentConfig, run_eval, run_oracle_check, run_sweep_minrate, run_sweep_snr, run_train
from .neural import MlpParams, build_actor, build_critic, load_checkpoint, save_checkpoint
from .noma import (
    InfeasibleOnGridError,
    LinkBudget,
    NomaAction,
    RateReport,
    check_constraints,
    compute_rates,
    compute_sinr,
    evaluate_action,
    oracle_grid_search,
    reward,
    tdma_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "ChannelRealization",
    "EpisodeConfig",
    "ExperimentConfig",
    "InfeasibleOnGridError",
    "LinkBudget",
    "MlpParams",
    "MultipathSpec",
    "NomaAction",
    "NomaEnv",
    "RateReport",
    "ReplayBuffer",
    "SteeringConfig",
    "TrainResult",
    "Transition",
    "build_actor",
    "build_critic",
    "check_constraints",
    "compute_rates",
    "compute_sinr",
    "evaluate_action",
    "flatten_state",
    "load_checkpoint",
    "oracle_grid_search",
    "project_action",
    "reward",
    "run_eval",
    "run_oracle_check",
    "run_sweep_minrate",
    "run_sweep_snr",
    "run_train",
    "sample_channel",
    "sample_ordered_pair",
    "save_checkpoint",
    "steering_vector",
    "tdma_baseline",
    "train",
    "unflatten_state",
]
