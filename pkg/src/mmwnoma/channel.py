"""Sparse mmWave channel generation for a half-wavelength ULA transmitter.

An N-antenna base station serves two single-antenna users. Each user channel
is a superposition of a few plane-wave paths with complex Gaussian gains
(one dominant path plus weaker scatterers). Users are indexed so that user 1
always has the weaker channel norm; the SIC decoding order downstream relies
on this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SteeringConfig:
    """N-element uniform linear array at half-wavelength spacing."""

    n_antennas: int = 16

    def __post_init__(self) -> None:
        if self.n_antennas < 1:
            raise ValueError(f"n_antennas must be at least 1, got {self.n_antennas}")


@dataclass(frozen=True)
class MultipathSpec:
    """Sparse multipath profile for one user's channel.

    The first path carries gain variance ``dominant_gain_var``; the remaining
    ``n_paths - 1`` paths carry ``secondary_gain_var`` each. Gains are
    circularly-symmetric complex Gaussian; departure angles are uniform on
    ``[aod_low, aod_high)`` radians (subset of [0, pi)).
    """

    n_paths: int = 3
    dominant_gain_var: float = 1.0
    secondary_gain_var: float = 0.1
    aod_low: float = 0.0
    aod_high: float = math.pi

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {self.n_paths}")
        if self.dominant_gain_var <= 0.0:
            raise ValueError("dominant_gain_var must be positive")
        if self.secondary_gain_var < 0.0:
            raise ValueError("secondary_gain_var must be nonnegative")
        if not (0.0 <= self.aod_low < self.aod_high <= math.pi):
            raise ValueError(
                f"AoD range must satisfy 0 <= low < high <= pi, "
                f"got [{self.aod_low}, {self.aod_high})"
            )

    def gain_variances(self) -> np.ndarray:
        """Per-path gain variances, dominant path first."""
        v = np.full(self.n_paths, self.secondary_gain_var, dtype=float)
        v[0] = self.dominant_gain_var
        return v


@dataclass(frozen=True)
class ChannelRealization:
    """Ordered pair of user channels, weaker L2 norm first.

    ``spec_used`` and ``seed`` record provenance when the pair was sampled;
    both may be None for hand-built or reconstructed pairs.
    """

    h1: np.ndarray
    h2: np.ndarray
    spec_used: MultipathSpec | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        h1 = np.asarray(self.h1, dtype=complex)
        h2 = np.asarray(self.h2, dtype=complex)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        if h1.ndim != 1 or h2.ndim != 1 or h1.shape != h2.shape:
            raise ValueError(f"channels must be 1-D and equal length, got {h1.shape}, {h2.shape}")
        if not (np.isfinite(h1).all() and np.isfinite(h2).all()):
            raise ValueError("channel vectors must be finite")
        if np.linalg.norm(h1) > np.linalg.norm(h2):
            raise ValueError("user ordering violated: require ||h1|| <= ||h2||")

    @property
    def n_antennas(self) -> int:
        return self.h1.shape[0]


def steering_vector(n_antennas: int, angle: float) -> np.ndarray:
    """ULA response [exp(j*pi*m*cos(angle)) for m = 0..N-1]."""
    if n_antennas < 1:
        raise ValueError(f"n_antennas must be at least 1, got {n_antennas}")
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle}")
    m = np.arange(n_antennas)
    return np.exp(1j * np.pi * m * math.cos(angle))


def sample_channel(
    spec: MultipathSpec,
    steering: SteeringConfig,
    rng: np.random.Generator | int,
) -> np.ndarray:
    """Draw one channel h = sum_l lambda_l * a(N, aod_l) from the profile."""
    rng = np.random.default_rng(rng)
    n = steering.n_antennas
    scale = np.sqrt(spec.gain_variances() / 2.0)
    gains = scale * (rng.standard_normal(spec.n_paths) + 1j * rng.standard_normal(spec.n_paths))
    aods = rng.uniform(spec.aod_low, spec.aod_high, size=spec.n_paths)
    # (L, N) matrix of steering vectors; channel is the gain-weighted column sum
    phases = np.pi * np.outer(np.cos(aods), np.arange(n))
    return gains @ np.exp(1j * phases)


def order_pair(ha: np.ndarray, hb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the pair ordered weaker-norm first; ties keep the given order."""
    if np.linalg.norm(hb) < np.linalg.norm(ha):
        return hb, ha
    return ha, hb


def sample_ordered_pair(
    spec: MultipathSpec,
    steering: SteeringConfig,
    rng: np.random.Generator | int,
) -> ChannelRealization:
    """Draw two independent channels and order them weaker-norm first."""
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    ha = sample_channel(spec, steering, rng)
    hb = sample_channel(spec, steering, rng)
    h1, h2 = order_pair(ha, hb)
    return ChannelRealization(h1=h1, h2=h2, spec_used=spec, seed=seed)
