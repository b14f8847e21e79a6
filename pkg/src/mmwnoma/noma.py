"""Two-user NOMA downlink physics.

SINR under the fixed SIC order (user 2, the stronger channel, cancels user 1
before decoding), achievable rates, constraint checking, the scalar reward, a
half-time-share TDMA baseline, and a brute-force grid oracle over the span of
the two channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelRealization

# Relative slack for the geometric feasibility checks (unit norms, power sum).
# Rate floors are checked exactly; this constant only separates numeric noise
# from semantic infeasibility.
FEASIBILITY_RTOL = 1e-6


@dataclass(frozen=True)
class LinkBudget:
    """Total transmit power, noise variance, and per-user minimum rates."""

    total_power: float
    noise_variance: float = 1.0
    min_rates: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not (self.total_power > 0.0 and math.isfinite(self.total_power)):
            raise ValueError(f"total_power must be positive, got {self.total_power}")
        if not (self.noise_variance > 0.0 and math.isfinite(self.noise_variance)):
            raise ValueError(f"noise_variance must be positive, got {self.noise_variance}")
        r1, r2 = self.min_rates
        if r1 < 0.0 or r2 < 0.0:
            raise ValueError(f"min_rates must be nonnegative, got {self.min_rates}")

    @classmethod
    def from_snr_db(
        cls,
        snr_db: float,
        min_rates: tuple[float, float] = (0.0, 0.0),
        noise_variance: float = 1.0,
    ) -> "LinkBudget":
        """Budget with P = sigma^2 * 10^(SNR/10), SNR given in dB."""
        power = noise_variance * 10.0 ** (snr_db / 10.0)
        return cls(total_power=power, noise_variance=noise_variance, min_rates=min_rates)


@dataclass(frozen=True)
class NomaAction:
    """Beamformer pair and power split.

    A NomaAction may describe an infeasible point (non-unit beamformers,
    power sum away from P); feasibility is judged by check_constraints so
    that constraint violations remain representable.
    """

    w1: np.ndarray
    w2: np.ndarray
    p1: float
    p2: float

    def __post_init__(self) -> None:
        w1 = np.asarray(self.w1, dtype=complex)
        w2 = np.asarray(self.w2, dtype=complex)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)
        if w1.ndim != 1 or w2.ndim != 1 or w1.shape != w2.shape:
            raise ValueError(f"beamformers must be 1-D and equal length, got {w1.shape}, {w2.shape}")
        if not (np.isfinite(w1).all() and np.isfinite(w2).all()):
            raise ValueError("beamformers must be finite")
        if not (math.isfinite(self.p1) and math.isfinite(self.p2)):
            raise ValueError(f"powers must be finite, got ({self.p1}, {self.p2})")


@dataclass(frozen=True)
class RateReport:
    """Per-user SINR and rate, the sum-rate, and the feasibility flag."""

    sinr1: float
    sinr2: float
    rate1: float
    rate2: float
    sum_rate: float
    alpha: int = 0

    def __post_init__(self) -> None:
        if self.alpha not in (0, 1):
            raise ValueError(f"alpha must be 0 or 1, got {self.alpha}")


def matched_filter(h: np.ndarray) -> np.ndarray:
    """Unit-norm beamformer aligned with the channel (MRT)."""
    h = np.asarray(h, dtype=complex)
    nrm = np.linalg.norm(h)
    if nrm < 1e-12:
        e = np.zeros(h.shape[0], dtype=complex)
        e[0] = 1.0
        return e
    return h / nrm


def compute_sinr(
    channels: ChannelRealization,
    action: NomaAction,
    budget: LinkBudget,
) -> tuple[float, float]:
    """SINR pair under SIC: user 1 sees user 2's beam as interference,
    user 2 decodes and cancels user 1 and is noise-limited only."""
    s2 = budget.noise_variance
    if s2 <= 0.0:
        raise ValueError(f"noise variance must be positive, got {s2}")
    g11 = abs(np.vdot(channels.h1, action.w1)) ** 2
    g12 = abs(np.vdot(channels.h1, action.w2)) ** 2
    g22 = abs(np.vdot(channels.h2, action.w2)) ** 2
    sinr1 = g11 * action.p1 / (g12 * action.p2 + s2)
    sinr2 = g22 * action.p2 / s2
    return float(sinr1), float(sinr2)


def compute_rates(sinr1: float, sinr2: float) -> RateReport:
    """Shannon rates R_k = log2(1 + SINR_k); alpha left at 0."""
    if sinr1 < 0.0 or sinr2 < 0.0:
        raise ValueError(f"SINRs must be nonnegative, got ({sinr1}, {sinr2})")
    r1 = math.log2(1.0 + sinr1)
    r2 = math.log2(1.0 + sinr2)
    return RateReport(sinr1=sinr1, sinr2=sinr2, rate1=r1, rate2=r2, sum_rate=r1 + r2)


def check_constraints(report: RateReport, action: NomaAction, budget: LinkBudget) -> int:
    """0 if both rate floors hold and the action geometry is valid, else 1.

    Geometry = unit-norm beamformers, nonnegative powers summing to the
    budget, all within FEASIBILITY_RTOL (relative). Rate floors are exact.
    """
    r1, r2 = budget.min_rates
    p = budget.total_power
    ptol = FEASIBILITY_RTOL * p
    ok = (
        report.rate1 >= r1
        and report.rate2 >= r2
        and abs(np.linalg.norm(action.w1) - 1.0) <= FEASIBILITY_RTOL
        and abs(np.linalg.norm(action.w2) - 1.0) <= FEASIBILITY_RTOL
        and action.p1 >= -ptol
        and action.p2 >= -ptol
        and abs(action.p1 + action.p2 - p) <= ptol
    )
    return 0 if ok else 1


def evaluate_action(
    channels: ChannelRealization,
    action: NomaAction,
    budget: LinkBudget,
) -> RateReport:
    """Full pipeline: SINR -> rates -> feasibility flag."""
    sinr1, sinr2 = compute_sinr(channels, action, budget)
    report = compute_rates(sinr1, sinr2)
    return replace(report, alpha=check_constraints(report, action, budget))


def reward(report: RateReport) -> float:
    """Feasibility-gated sum-rate: (1 - alpha) * (R1 + R2)."""
    return float((1 - report.alpha) * report.sum_rate)


def tdma_baseline(channels: ChannelRealization, budget: LinkBudget) -> float:
    """Half-time-share comparator: each user alone with full power and MRT.

    Sum-rate = 0.5 * sum_k log2(1 + P ||h_k||^2 / sigma^2). With MRT and no
    co-channel user this is the strongest simple TDMA scheme.
    """
    p = budget.total_power
    s2 = budget.noise_variance
    g1 = np.linalg.norm(channels.h1) ** 2
    g2 = np.linalg.norm(channels.h2) ** 2
    return float(0.5 * (math.log2(1.0 + p * g1 / s2) + math.log2(1.0 + p * g2 / s2)))


class InfeasibleOnGridError(Exception):
    """No grid point satisfies the rate floors (distinct from numeric failure)."""


def oracle_grid_search(
    channels: ChannelRealization,
    budget: LinkBudget,
    grid_resolution: int,
) -> tuple[NomaAction, float]:
    """Exhaustive search over beamformers in span{h1, h2} and power splits.

    Candidate directions are normalize(c*h1 + (1-c)*exp(j*phi)*h2) with c,
    phi, and the power fraction rho each on an M-point inclusive grid.
    Components orthogonal to both channels contribute to no |h_k^H w| term,
    so the span restriction is lossless for this objective.

    User 1's beamformer enters the rates only through |h1^H w1|^2, which is
    monotone in both the objective and the feasible set, so the best grid w1
    (the max-gain candidate) is fixed up front; the search result is
    identical to the full five-dimensional enumeration.

    Returns the best feasible (action, sum_rate); raises
    InfeasibleOnGridError when no grid point meets the rate floors.
    """
    m = int(grid_resolution)
    if m < 3:
        raise ValueError(f"grid_resolution must be at least 3, got {m}")
    h1, h2 = channels.h1, channels.h2
    p_tot = budget.total_power
    s2 = budget.noise_variance
    r1_min, r2_min = budget.min_rates

    c = np.linspace(0.0, 1.0, m)
    phi = np.linspace(0.0, 2.0 * np.pi, m)
    v = (
        c[:, None, None] * h1[None, None, :]
        + (1.0 - c)[:, None, None] * np.exp(1j * phi)[None, :, None] * h2[None, None, :]
    ).reshape(m * m, -1)
    norms = np.linalg.norm(v, axis=1)
    keep = norms > 1e-12
    if not keep.any():
        raise InfeasibleOnGridError("no normalizable beamformer candidate on the grid")
    w = v[keep] / norms[keep, None]

    gain1 = np.abs(w @ h1.conj()) ** 2  # |h1^H w|^2 per candidate
    gain2 = np.abs(w @ h2.conj()) ** 2
    i1 = int(np.argmax(gain1))
    g11 = gain1[i1]

    rho = np.linspace(0.0, 1.0, m)
    p1 = rho * p_tot
    p2 = (1.0 - rho) * p_tot
    sinr1 = g11 * p1[None, :] / (gain1[:, None] * p2[None, :] + s2)
    sinr2 = gain2[:, None] * p2[None, :] / s2
    rate1 = np.log2(1.0 + sinr1)
    rate2 = np.log2(1.0 + sinr2)
    feasible = (rate1 >= r1_min) & (rate2 >= r2_min)
    if not feasible.any():
        raise InfeasibleOnGridError(
            f"no feasible grid point for floors {budget.min_rates} at M={m}"
        )
    total = np.where(feasible, rate1 + rate2, -np.inf)
    k, j = np.unravel_index(int(np.argmax(total)), total.shape)
    best = NomaAction(w1=w[i1], w2=w[k], p1=float(p1[j]), p2=float(p2[j]))
    return best, float(total[k, j])
