"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v`. Criteria 5-7 train real
agents and together take roughly 15 minutes on one core (criterion 6 alone
needs ~12: the critic resolves the beam-alignment structure slowly);
everything else finishes in seconds.
"""

import csv
import math
import os
import sys
import time

import numpy as np
import pytest
from helpers import (
    gradcheck_max_relative_error,
    random_unit_complex,
    scalar_rates,
    scalar_sinr_pair,
)

from mmwnoma.channel import ChannelRealization, MultipathSpec, SteeringConfig, sample_ordered_pair
from mmwnoma.ddpg import AgentConfig, Batch, act, rollout_random_policy, train, update_actor
from mmwnoma.env import EpisodeConfig, action_dim, action_to_vector, flatten_state, project_action, state_dim
from mmwnoma.harness import (
    ExperimentConfig,
    draw_eval_channels,
    evaluate_policy,
    evaluate_tdma,
    run_sweep_snr,
    run_train,
)
from mmwnoma.neural import adam_init, build_critic, build_mlp, forward
from mmwnoma.noma import (
    LinkBudget,
    NomaAction,
    compute_sinr,
    evaluate_action,
    oracle_grid_search,
    reward,
)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'} - {title} ({detail})"
    print(f"\n{line}")
    if sys.stdout is not sys.__stdout__:  # pytest capture active: echo to the terminal too
        print(line, file=sys.__stdout__)


def random_ordered_channels(rng, n):
    ha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    hb = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if np.linalg.norm(ha) > np.linalg.norm(hb):
        ha, hb = hb, ha
    return ChannelRealization(h1=ha, h2=hb)


def test_criterion_1_physics_correctness():
    """SINR/rate physics vs independent scalar evaluation, 1e4 instances."""
    rng = np.random.default_rng(101)
    t0 = time.time()
    max_err = 0.0
    for i in range(10_000):
        n = 2 + (i % 7)
        channels = random_ordered_channels(rng, n)
        p_tot = float(rng.uniform(0.5, 20.0))
        s2 = float(rng.uniform(0.1, 4.0))
        budget = LinkBudget(total_power=p_tot, noise_variance=s2)
        p1 = float(rng.uniform(0.0, p_tot))
        action = NomaAction(
            w1=random_unit_complex(rng, n),
            w2=random_unit_complex(rng, n),
            p1=p1,
            p2=p_tot - p1,
        )
        sinr = compute_sinr(channels, action, budget)
        want_sinr = scalar_sinr_pair(
            channels.h1, channels.h2, action.w1, action.w2, action.p1, action.p2, s2
        )
        rep = evaluate_action(channels, action, budget)
        want_rates = scalar_rates(*want_sinr)
        for got, want in zip((*sinr, rep.rate1, rep.rate2), (*want_sinr, *want_rates)):
            err = abs(got - want) / max(abs(want), 1e-300)
            max_err = max(max_err, err)

        if i % 50 == 0:
            # phase rotation of either beamformer leaves both SINRs
            phi = rng.uniform(0, 2 * math.pi)
            rotated = NomaAction(
                w1=np.exp(1j * phi) * action.w1,
                w2=np.exp(-1j * phi) * action.w2,
                p1=action.p1,
                p2=action.p2,
            )
            rot = compute_sinr(channels, rotated, budget)
            assert abs(rot[0] - sinr[0]) <= 1e-12 * max(sinr[0], 1.0)
            assert abs(rot[1] - sinr[1]) <= 1e-12 * max(sinr[1], 1.0)
            # SIC: user 2 is blind to user 1's beam and power
            other = NomaAction(
                w1=random_unit_complex(rng, n), w2=action.w2, p1=p_tot - p1, p2=action.p2
            )
            assert abs(compute_sinr(channels, other, budget)[1] - sinr[1]) <= 1e-12 * max(sinr[1], 1.0)

    elapsed = time.time() - t0
    ok = max_err < 1e-12 and elapsed < 10.0
    report(1, "physics correctness", ok, f"max rel err {max_err:.2e}, {elapsed:.1f}s")
    assert max_err < 1e-12
    assert elapsed < 10.0


def test_criterion_2_reward_semantics():
    """reward == 0 iff a constraint is violated, else reward == R1 + R2."""
    rng = np.random.default_rng(102)
    t0 = time.time()
    n_zero = n_pos = 0
    for i in range(20_000):
        n = 2 + (i % 3)
        channels = random_ordered_channels(rng, n)
        p_tot = 2.0
        floors = (float(rng.uniform(0, 2.0)), float(rng.uniform(0, 2.0)))
        budget = LinkBudget(total_power=p_tot, noise_variance=1.0, min_rates=floors)
        w1 = random_unit_complex(rng, n)
        w2 = random_unit_complex(rng, n)
        p1 = float(rng.uniform(0, p_tot))
        p2 = p_tot - p1
        mode = i % 4
        if mode == 1:
            w1 = w1 * float(rng.choice([0.9, 1.1]))  # clear norm violation
        elif mode == 2:
            p2 = p2 * 0.8  # clear power-sum violation
        action = NomaAction(w1=w1, w2=w2, p1=p1, p2=p2)
        rep = evaluate_action(channels, action, budget)
        rew = reward(rep)
        geometry_violated = mode in (1, 2)
        floors_violated = rep.rate1 < floors[0] or rep.rate2 < floors[1]
        if geometry_violated or floors_violated:
            assert rew == 0.0
            n_zero += 1
        else:
            assert rew == rep.sum_rate
            assert rew == rep.rate1 + rep.rate2
            n_pos += 1
    elapsed = time.time() - t0
    ok = elapsed < 5.0 and n_zero > 1000 and n_pos > 1000
    report(2, "reward semantics", ok, f"{n_zero} gated / {n_pos} passed cases, {elapsed:.1f}s")
    assert n_zero > 1000 and n_pos > 1000
    assert elapsed < 5.0


def test_criterion_3_gradient_fidelity():
    """Backprop vs central differences on 100 nets; actor step ascends Q."""
    rng = np.random.default_rng(103)
    t0 = time.time()
    worst = 0.0
    activations = ("relu", "tanh", "identity")
    for trial in range(100):
        depth = int(rng.integers(1, 4))
        widths = [int(rng.integers(2, 17)) for _ in range(depth + 1)]
        net = build_mlp(
            widths,
            hidden_activation=activations[trial % 3],
            output_activation=activations[(trial // 3) % 3],
            rng=rng,
            final_scale=None,
        )
        x = rng.standard_normal(widths[0])
        probe = rng.standard_normal(widths[-1])
        worst = max(worst, gradcheck_max_relative_error(net, x, probe))
    grad_ok = worst < 1e-4

    ascents = 0
    for trial in range(20):
        trial_rng = np.random.default_rng(5000 + trial)
        n = 2
        actor = build_mlp([state_dim(n), 8, 8, action_dim(n)], rng=trial_rng, final_scale=None)
        critic = build_critic(n, 8, rng=trial_rng)
        batch = Batch(
            states=trial_rng.standard_normal((16, state_dim(n))),
            actions=trial_rng.standard_normal((16, action_dim(n))),
            rewards=trial_rng.uniform(0, 5, 16),
            next_states=trial_rng.standard_normal((16, state_dim(n))),
        )
        opt = adam_init(actor, 1e-6)

        def mean_q():
            a, _ = forward(actor, batch.states)
            q, _ = forward(critic, np.hstack([batch.states, a]))
            return float(np.mean(q))

        before = mean_q()
        update_actor(actor, opt, critic, batch)
        if mean_q() > before:
            ascents += 1
    elapsed = time.time() - t0
    ok = grad_ok and ascents == 20 and elapsed < 60.0
    report(3, "gradient fidelity", ok, f"max rel err {worst:.2e}, {ascents}/20 ascents, {elapsed:.1f}s")
    assert grad_ok
    assert ascents == 20
    assert elapsed < 60.0


def test_criterion_4_projection_feasibility():
    """1e5 random raw actions land on the feasible set within 1e-9."""
    rng = np.random.default_rng(104)
    n = 8
    budget = LinkBudget(total_power=2.0)
    t0 = time.time()
    worst_norm = worst_power = 0.0
    for _ in range(100_000):
        raw = 3.0 * rng.standard_normal(action_dim(n))
        a = project_action(raw, budget)
        worst_norm = max(
            worst_norm,
            abs(np.linalg.norm(a.w1) - 1.0),
            abs(np.linalg.norm(a.w2) - 1.0),
        )
        worst_power = max(worst_power, abs(a.p1 + a.p2 - 2.0))
        if a.p1 < 0.0 or a.p2 < 0.0:
            worst_power = np.inf

    worst_idem = 0.0
    for _ in range(1000):
        p1 = float(rng.uniform(1e-3, 2.0 - 1e-3))
        action = NomaAction(
            w1=random_unit_complex(rng, n), w2=random_unit_complex(rng, n), p1=p1, p2=2.0 - p1
        )
        again = project_action(action_to_vector(action), budget)
        worst_idem = max(
            worst_idem,
            float(np.max(np.abs(again.w1 - action.w1))),
            float(np.max(np.abs(again.w2 - action.w2))),
            abs(again.p1 - action.p1),
        )
    elapsed = time.time() - t0
    ok = worst_norm <= 1e-9 and worst_power <= 1e-9 and worst_idem <= 1e-9 and elapsed < 10.0
    report(
        4,
        "projection feasibility",
        ok,
        f"norm err {worst_norm:.1e}, power err {worst_power:.1e}, idempotence {worst_idem:.1e}, {elapsed:.1f}s",
    )
    assert worst_norm <= 1e-9
    assert worst_power <= 1e-9
    assert worst_idem <= 1e-9
    assert elapsed < 10.0


def test_criterion_5_desk_scale_learning():
    """N=4, SNR 20 dB, r=0.5, 300x100: final score >= 1.3x first and beats random."""
    cfg = EpisodeConfig(
        steps_per_episode=100,
        budget=LinkBudget.from_snr_db(20.0, (0.5, 0.5)),
        spec=MultipathSpec(),
        steering=SteeringConfig(4),
    )
    agent = AgentConfig(episodes=300)
    t0 = time.time()
    result = train(cfg, agent, 2024)
    random_rewards = rollout_random_policy(cfg, 50, 2024)
    elapsed = time.time() - t0
    first_score = result.scores[249]  # first full 250-step window
    final_score = result.scores[-1]
    ok = final_score >= 1.3 * first_score and final_score > random_rewards.mean()
    report(
        5,
        "desk-scale learning",
        ok,
        f"first {first_score:.3f} -> final {final_score:.3f} "
        f"({final_score / first_score:.2f}x), random {random_rewards.mean():.3f}, {elapsed:.0f}s",
    )
    assert final_score >= 1.3 * first_score
    assert final_score > random_rewards.mean()


def test_criterion_6_baseline_dominance():
    """Trained policy beats the TDMA baseline at N=4, SNR 30 dB on 1000
    paired draws (ordering only; magnitudes are seed-sensitive).

    The paper-default 1:1 cadence needs long horizons here: the critic only
    starts resolving the beam-alignment structure after ~1e5 updates, so
    this is the one long test in the gate (~15 min single-core).
    """
    t0 = time.time()
    budget = LinkBudget.from_snr_db(30.0, (1.0, 1.0))
    cfg = EpisodeConfig(
        steps_per_episode=100,
        budget=budget,
        spec=MultipathSpec(),
        steering=SteeringConfig(4),
    )
    agent = AgentConfig(
        episodes=1500,
        gamma=0.9,
        critic_lr=1e-3,
        noise_sigma_start=0.3,
        noise_sigma_end=0.03,
    )
    result = train(cfg, agent, 77)
    exp = ExperimentConfig(seed=77, steering=SteeringConfig(4))
    draws = draw_eval_channels(exp, 1000)
    pol = evaluate_policy(result.actor, draws, budget)
    tdma = evaluate_tdma(draws, budget)
    elapsed = time.time() - t0
    ok = pol.sum_rate.mean() > tdma.mean()
    report(
        6,
        "baseline dominance",
        ok,
        f"ddpg {pol.sum_rate.mean():.3f} vs tdma {tdma.mean():.3f} bps/Hz "
        f"(paired diff {np.mean(pol.sum_rate - tdma):+.3f}, "
        f"feasible {1 - pol.alpha.mean():.3f}), {elapsed:.0f}s",
    )
    assert pol.sum_rate.mean() > tdma.mean()


def test_criterion_7_oracle_proximity():
    """Fixed-channel N=2 training reaches >= 85% of the M=41 grid oracle."""
    t0 = time.time()
    spec, steer = MultipathSpec(), SteeringConfig(2)
    budget = LinkBudget.from_snr_db(30.0, (1.0, 1.0))
    channels = sample_ordered_pair(spec, steer, 11)
    _, oracle_val = oracle_grid_search(channels, budget, 41)

    # oracle sanity: never beaten by random feasible actions on this instance
    rng = np.random.default_rng(107)
    n_feasible = 0
    beaten = False
    while n_feasible < 1000:
        p1 = float(rng.uniform(0, budget.total_power))
        action = NomaAction(
            w1=random_unit_complex(rng, 2),
            w2=random_unit_complex(rng, 2),
            p1=p1,
            p2=budget.total_power - p1,
        )
        rep = evaluate_action(channels, action, budget)
        if rep.alpha == 0:
            n_feasible += 1
            if rep.sum_rate > oracle_val + 1e-12:
                beaten = True

    cfg = EpisodeConfig(
        steps_per_episode=100, budget=budget, spec=spec, steering=steer, fixed_channels=channels
    )
    agent = AgentConfig(hidden_width=64, episodes=120, gamma=0.9, critic_lr=1e-3)
    result = train(cfg, agent, 99)
    raw = act(result.actor, flatten_state(channels, 0.0))
    rep = evaluate_action(channels, project_action(raw, budget, channels), budget)
    ratio = rep.sum_rate / oracle_val if rep.alpha == 0 else 0.0
    elapsed = time.time() - t0
    ok = (not beaten) and ratio >= 0.85
    report(
        7,
        "oracle proximity",
        ok,
        f"policy/oracle {ratio:.3f} (oracle {oracle_val:.2f}), "
        f"unbeaten by 1000 random feasible actions: {not beaten}, {elapsed:.0f}s",
    )
    assert not beaten
    assert ratio >= 0.85


@pytest.mark.skipif(
    not os.environ.get("MMWNOMA_LONG_RUN"),
    reason="optional multi-hour paper-scale check; set MMWNOMA_LONG_RUN=1 to run",
)
def test_optional_paper_scale_training_curve():
    """Non-gating: N=16, SNR 30 dB, r=1, 5000x250 reaches a final score near
    12 bps/Hz (+-20%) after starting near 7."""
    cfg = EpisodeConfig(
        steps_per_episode=250,
        budget=LinkBudget.from_snr_db(30.0, (1.0, 1.0)),
        spec=MultipathSpec(),
        steering=SteeringConfig(16),
    )
    agent = AgentConfig(episodes=5000)
    result = train(cfg, agent, 1)
    final_score = result.scores[-1]
    report(
        0,
        "paper-scale training curve (optional)",
        9.6 <= final_score <= 14.4,
        f"final score {final_score:.2f} (target 12 +-20%)",
    )
    assert 9.6 <= final_score <= 14.4


def test_criterion_8_determinism(tmp_path):
    """Re-running any mode with one seed reproduces result columns exactly."""
    t0 = time.time()

    def tiny(out):
        return ExperimentConfig(
            seed=5,
            out_dir=out,
            eval_draws=10,
            oracle_grid=9,
            steering=SteeringConfig(2),
            snr_db=20.0,
            min_rates=(0.3, 0.3),
            agent=AgentConfig(hidden_width=8, episodes=2, batch_size=8),
            steps_per_episode=6,
        )

    def stripped(path):
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][-1] == "timestamp"
        return [row[:-1] for row in rows[1:]]

    out_a = run_train(tiny(tmp_path / "a"))
    out_b = run_train(tiny(tmp_path / "b"))
    train_ok = (
        stripped(out_a.metrics_path) == stripped(out_b.metrics_path)
        and out_a.final_checkpoint.read_bytes() == out_b.final_checkpoint.read_bytes()
    )
    pa = run_sweep_snr(tiny(tmp_path / "sa"), [0.0, 20.0])
    pb = run_sweep_snr(tiny(tmp_path / "sb"), [0.0, 20.0])
    sweep_ok = pa.read_bytes() == pb.read_bytes()
    elapsed = time.time() - t0
    ok = train_ok and sweep_ok
    report(8, "determinism", ok, f"train identical {train_ok}, sweep identical {sweep_ok}, {elapsed:.1f}s")
    assert train_ok
    assert sweep_ok
