"""Acceptance criteria, one PASS/FAIL line each (run with ``-s`` to see them inline).

The lines are also repeated in the pytest terminal summary.
"""

import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from archring.bounds import eq3_bits_bound
from archring.codec import code_length, dyadic_decode, dyadic_encode
from archring.protocol import Relative, delay_of
from archring.scenarios import (
    Heterogeneous,
    Lockstep,
    adversarial_config,
    average_case_experiment,
    baseline_filter_run,
    make_policy,
    random_config,
    ring_size_of,
)
from archring.simulator import derive_params, run_election

from acceptance_log import report

N_CONFIGS = 1000
AVERAGE_NS = (16, 32, 64, 128)
AVERAGE_TRIALS = 200
AVERAGE_SEED = 7
# Frozen from the hop-latency calibration in test_criterion_8 (small rings, N = 2..4).
ENGINE_OFFSET = 0


def hetero_config(i):
    n = int(np.random.default_rng([99, i]).integers(2, 65))
    extra = min(n - 1, int(np.random.default_rng([98, i]).integers(0, 3)))
    return random_config(n, (1234, i), Heterogeneous(m=1, u_max=8, d_max=4), extra_wakers=extra)


@pytest.fixture(scope="module")
def hetero_runs():
    runs = []
    for i in range(N_CONFIGS):
        config = hetero_config(i)
        scaled = replace(config, policy=make_policy("scaled", config))
        runs.append((config, run_election(config), scaled, run_election(scaled)))
    return runs


@pytest.fixture(scope="module")
def average_stats():
    return {n: average_case_experiment(n, AVERAGE_TRIALS, AVERAGE_SEED) for n in AVERAGE_NS}


def test_criterion_1_correctness(hetero_runs):
    failures = 0
    for config, *outs in ((c, o1, o2) for c, o1, _, o2 in hetero_runs):
        for o in outs:
            ok = (
                o.winner == min(config.names)
                and all(e == min(config.names) for e in o.elected)
                and o.passes["wakeup"] == config.n
                and o.passes["sleepwell"] == config.n
            )
            failures += not ok
    assert report("1 correctness", failures == 0,
                  f"{failures} failures over {2 * N_CONFIGS} runs")


def test_criterion_2_closed_message_bound(hetero_runs):
    slack = exact = 0
    for config, o, _, _ in hetero_runs:
        closed = 2 * config.n + 3 * config.n * derive_params(config).s
        slack += o.total_passes <= 2 * closed
        exact += o.total_passes <= closed
    report("2 closed message bound, exact (reported)", exact >= 0.95 * N_CONFIGS,
           f"{exact}/{N_CONFIGS} within 2N + 3N*ceil(u/m)")
    assert report("2 closed message bound, slack 2", slack == N_CONFIGS,
                  f"{slack}/{N_CONFIGS}")


def test_criterion_3_scaled_below_five_n(hetero_runs):
    ok = sum(o.total_passes < 5 * c.n for _, _, c, o in hetero_runs)
    assert report("3 scaled delays, total < 5N", ok == N_CONFIGS, f"{ok}/{N_CONFIGS}")


def test_criterion_4_adversary():
    got = {n: run_election(adversarial_config(n)).passes["election"] for n in (4, 8, 16)}
    expected = {n: n * (n + 1) // 2 for n in got}
    other = {n: n * (n + 2) // 2 for n in got}
    exact = got == expected == {4: 10, 8: 36, 16: 136}
    growth = all(v >= n * n / 2 for n, v in got.items())
    report("4 adversary, N(N+2)/2 comparison (logged)", None,
           f"measured {got}, N(N+2)/2 would be {other}")
    assert report("4 adversary, N(N+1)/2 exact and >= N^2/2", exact and growth, f"{got}")


def test_criterion_5_mean_below_three_n(average_stats):
    means = {n: s.mean_election_passes for n, s in average_stats.items()}
    ok = all(means[n] <= 3 * n for n in AVERAGE_NS)
    assert report("5 average, mean election passes <= 3N", ok,
                  ", ".join(f"N={n}: {means[n] / n:.3f}N" for n in AVERAGE_NS))


def test_criterion_5_per_trial_expected_bound(average_stats):
    over = {n: sum(not r["within_eq5"] for r in s.rows) for n, s in average_stats.items()}
    worst = max(
        float(r["total_passes"] / r["eq5_bound"]) for s in average_stats.values() for r in s.rows
    )
    aggregate = all(s.mean_total_passes <= s.mean_eq5 for s in average_stats.values())
    report("5 average, mean total <= mean expected-case bound (diagnostic)", aggregate)
    assert report(
        "5 average, per-trial total <= expected-case bound",
        all(v == 0 for v in over.values()),
        f"trials over the bound per N {over}, worst ratio {worst:.3f}",
    )


def test_criterion_5_baseline_contrast(average_stats):
    per_n = {}
    for n in (16, 128):
        passes = [
            baseline_filter_run(random_config(n, (AVERAGE_SEED, t), Lockstep(0)))
            .passes["election"]
            for t in range(AVERAGE_TRIALS)
        ]
        per_n[n] = float(np.mean(passes)) / n
    gap = per_n[128] - per_n[16]
    assert report("5 average, filter baseline mean/N grows by >= 1.5", gap >= 1.5,
                  f"{per_n[16]:.3f} -> {per_n[128]:.3f}")


def test_criterion_5_flat_main_protocol(average_stats):
    per_n = [average_stats[n].mean_election_passes / n for n in AVERAGE_NS]
    spread = (max(per_n) - min(per_n)) / min(per_n)
    assert report("5 average, main protocol mean/N spread <= 25%", spread <= 0.25,
                  f"{spread:.1%}")


def test_criterion_6_bits(hetero_runs):
    slack = exact = 0
    for _, _, c, o in hetero_runs:
        slack += o.total_bits <= 4 * (2 * c.n + 3 * c.n * code_length(c.winner))
        exact += o.total_bits <= eq3_bits_bound(c)
    report("6 bits, exact rational bound (reported)", None, f"{exact}/{N_CONFIGS}")
    assert report("6 bits <= 4(2N + 3N lam(l))", slack == N_CONFIGS, f"{slack}/{N_CONFIGS}")


def test_criterion_7_time():
    worst, failures, runs = 0.0, 0, 0
    for i in range(300):
        n = 2 + i % 63
        delta = i % 3
        config = random_config(n, (7, i), Lockstep(delta))
        config = replace(config, wake=tuple((p, 0) for p in range(n)))
        o = run_election(config)
        u = 1 + delta
        limit = n * u * (delay_of(config.policy, config.winner) + 2)
        worst = max(worst, o.duration / limit)
        failures += o.duration > 2 * limit
        runs += 1
    assert report("7 time <= 2 N u (f(l) + 2)", failures == 0,
                  f"{runs} runs, worst duration/(N u (f(l)+2)) = {worst:.3f}")


def _relative_excess(n, delta, seed):
    config = random_config(n, seed, Lockstep(delta), policy=Relative())
    p = derive_params(config)
    return run_election(config).duration - 3 * p.w


def test_criterion_8_relative_time_and_worst_case():
    calibrated = max(0, max(_relative_excess(n, d, (3, n, d)) for n in (2, 3, 4) for d in (0, 1, 2)))
    worst = max(
        _relative_excess(n, d, (8, n, d)) for n in range(2, 129, 7) for d in (0, 1, 2)
    )
    timely = calibrated == ENGINE_OFFSET and worst <= ENGINE_OFFSET
    adversarial = run_election(adversarial_config(32, Relative())).passes["election"]
    report("8 relative policy, duration <= 3w + offset", timely,
           f"offset {ENGINE_OFFSET}, worst duration - 3w = {worst}")
    report("8 relative policy, adversary at N=32 >= N^2/4", adversarial >= 256,
           f"{adversarial} passes")
    assert timely and adversarial >= 256


def test_criterion_9_ring_size():
    wrong = total = 0
    for n in range(2, 257):
        for delta in (0, 1, 2):
            for first in (1, 3):
                config = random_config(n, (5, n, delta, first), Lockstep(delta), first_name=first)
                total += 1
                wrong += ring_size_of(config, run_election(config)) != n
    assert report("9 ring size recovered exactly", wrong == 0, f"{total - wrong}/{total}")


def test_criterion_10_codec():
    listed = [dyadic_encode(i) for i in range(1, 7)]
    ns = np.arange(1, 10**6 + 1)
    lengths_expected = np.floor(np.log2(ns + 1)).astype(int)
    bad = 0
    for n, want in zip(range(1, 10**6 + 1), lengths_expected):
        s = dyadic_encode(n)
        bad += dyadic_decode(s) != n or len(s) != want
    ok = listed == ["1", "2", "11", "12", "21", "22"] and bad == 0
    assert report("10 codec round trip and length law on [1, 10^6]", ok,
                  f"listed {listed}, {bad} violations")


def test_criterion_11_determinism(tmp_path):
    scenario = tmp_path / "ring.json"
    scenario.write_text(
        '{"names": [4, 2, 3, 1], "tick_len": [1, 3, 2, 5], "link_delay": [0, 2, 1, 0],'
        ' "wake": [{"pos": 2, "time": 0}, {"pos": 0, "time": 3}], "policy": {"kind": "power2"}}'
    )
    commands = {
        "simulate": ["simulate", "--config", str(scenario), "--trace"],
        "average": ["average", "--n", "16", "--trials", "50", "--seed", "7"],
    }
    identical = True
    for name, argv in commands.items():
        outputs = []
        for hashseed in ("1", "2"):
            out = tmp_path / f"{name}-{hashseed}.out"
            env = dict(os.environ, PYTHONHASHSEED=hashseed)
            subprocess.run([sys.executable, "-m", "archring", *argv, "--out", str(out)],
                           check=True, env=env)
            outputs.append(out.read_bytes())
        identical &= outputs[0] == outputs[1]
    assert report("11 repeated simulate/average output is byte-identical", identical)
