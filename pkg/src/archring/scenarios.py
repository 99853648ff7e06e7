"""Scenario builders and the experiments run on top of the simulator.

Random configurations come from ``numpy.random.Generator(PCG64(SeedSequence(seed)))``;
``seed`` may be a single unsigned 64-bit integer or a sequence of them, and
trial ``t`` of an experiment seeded with ``s`` uses the seed words ``(s, t)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import protocol
from .bounds import eq5_expected_bound
from .protocol import (
    DeclareElected,
    DelayPolicy,
    Mode,
    Power2,
    ProtocolViolation,
    Relative,
    ScaledPower,
    SendElection,
    SendSleepwell,
)
from .simulator import Outcome, RingConfig, derive_params, run_election

__all__ = [
    "Lockstep",
    "Heterogeneous",
    "ExperimentStats",
    "adversarial_config",
    "random_config",
    "make_policy",
    "average_case_experiment",
    "lockstep_round_trip",
    "ring_size_from_time",
    "ring_size_of",
    "filter_tick_step",
    "baseline_filter_run",
    "compare_protocols",
    "UnsupportedMode",
]


class UnsupportedMode(ValueError):
    pass


@dataclass(frozen=True)
class Lockstep:
    """Unit ticks everywhere and the same delay ``delta`` on every link."""

    delta: int = 0


@dataclass(frozen=True)
class Heterogeneous:
    """Tick lengths uniform in ``[m, u_max]``, link delays uniform in ``[0, d_max]``."""

    m: int = 1
    u_max: int = 8
    d_max: int = 4


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def adversarial_config(n: int, policy: DelayPolicy = Power2()) -> RingConfig:
    """Ascending names clockwise, processor ``i`` ticking every ``2**(n - i + 1)``.

    Slow small names and fast large ones: no candidate ever catches another, so
    every message travels until processor 1 swallows it.
    """
    if n < 2:
        raise ValueError(f"adversarial ring needs n >= 2, got {n}")
    names = tuple(range(1, n + 1))
    return RingConfig(
        names=names,
        tick_len=tuple(2 ** (n - i + 1) for i in names),
        link_delay=(0,) * n,
        wake=tuple((p, 0) for p in range(n)),
        policy=policy,
    )


def random_config(
    n: int,
    seed,
    mode: Union[Lockstep, Heterogeneous] = Lockstep(),
    *,
    policy: DelayPolicy = Power2(),
    extra_wakers: int = 0,
    wake_window: Optional[int] = None,
    first_name: int = 1,
) -> RingConfig:
    """Random permutation of ``first_name .. first_name + n - 1`` around the ring.

    One uniformly chosen processor wakes at time 0; ``extra_wakers`` further
    distinct processors wake at uniform integer times in ``[0, wake_window]``
    (default: ``n * u_max``).
    """
    if n < 2:
        raise ValueError(f"ring needs n >= 2, got {n}")
    if not 0 <= extra_wakers < n:
        raise ValueError(f"extra_wakers must be in [0, {n - 1}], got {extra_wakers}")
    rng = _rng(seed)
    names = tuple(int(x) + first_name for x in rng.permutation(n))
    if isinstance(mode, Lockstep):
        if mode.delta < 0:
            raise ValueError(f"link delay must be >= 0, got {mode.delta}")
        tick_len = (1,) * n
        link_delay = (mode.delta,) * n
        slowest = 1 + mode.delta
    elif isinstance(mode, Heterogeneous):
        if not 1 <= mode.m <= mode.u_max or mode.d_max < 0:
            raise ValueError(f"invalid ranges {mode}")
        tick_len = tuple(int(x) for x in rng.integers(mode.m, mode.u_max, size=n, endpoint=True))
        link_delay = tuple(int(x) for x in rng.integers(0, mode.d_max, size=n, endpoint=True))
        slowest = mode.u_max + mode.d_max
    else:
        raise TypeError(f"unknown mode {mode!r}")
    wakers = [int(p) for p in rng.choice(n, size=1 + extra_wakers, replace=False)]
    window = n * slowest if wake_window is None else wake_window
    times = [0] + [int(t) for t in rng.integers(0, window, size=extra_wakers, endpoint=True)]
    return RingConfig(
        names=names,
        tick_len=tick_len,
        link_delay=link_delay,
        wake=tuple(zip(wakers, times)),
        policy=policy,
    )


def make_policy(kind: str, config: Optional[RingConfig] = None) -> DelayPolicy:
    """Policy by name; ``scaled`` uses base ``2 * ceil(u/m)`` of ``config``."""
    if kind == "power2":
        return Power2()
    if kind == "relative":
        return Relative()
    if kind == "scaled":
        s = derive_params(config).s if config is not None else 1
        return ScaledPower(Fraction(2 * s))
    raise ValueError(f"unknown policy kind {kind!r}")


# --------------------------------------------------------------------------
# Average case


@dataclass
class ExperimentStats:
    n: int
    n_trials: int
    seed: object
    policy: str
    rows: list = field(default_factory=list)

    def _col(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    @property
    def mean_election_passes(self) -> float:
        return float(self._col("election_passes").mean())

    @property
    def min_election_passes(self) -> int:
        return min(r["election_passes"] for r in self.rows)

    @property
    def max_election_passes(self) -> int:
        return max(r["election_passes"] for r in self.rows)

    @property
    def mean_total_passes(self) -> float:
        return float(self._col("total_passes").mean())

    @property
    def mean_bits(self) -> float:
        return float(self._col("total_bits").mean())

    @property
    def mean_eq5(self) -> Fraction:
        return sum((r["eq5_bound"] for r in self.rows), Fraction(0)) / len(self.rows)

    @property
    def exact_mean_election_passes(self) -> Fraction:
        return Fraction(sum(r["election_passes"] for r in self.rows), len(self.rows))

    @property
    def all_within_eq5(self) -> bool:
        return all(r["within_eq5"] for r in self.rows)


def _trial_row(trial: int, config: RingConfig, outcome: Outcome) -> dict:
    bound = eq5_expected_bound(config) if protocol.is_id_only(config.policy) else None
    return {
        "trial": trial,
        "names": config.names,
        "winner": outcome.winner,
        "election_passes": outcome.passes["election"],
        "total_passes": outcome.total_passes,
        "total_bits": outcome.total_bits,
        "duration": outcome.duration,
        "eq5_bound": bound,
        "within_eq5": bound is None or outcome.total_passes <= bound,
    }


def average_case_experiment(
    n: int,
    trials: int,
    seed,
    policy: Union[str, DelayPolicy] = "power2",
    *,
    delta: int = 0,
    exhaustive: bool = False,
) -> ExperimentStats:
    """Random-permutation lockstep elections.

    With ``exhaustive=True`` every permutation of ``1..n`` with the first
    position fixed (rotations are equivalent) is run once, processor 0 waking
    at time 0, and ``trials``/``seed`` are ignored; the resulting mean is the
    exact expectation.
    """
    if trials < 1 and not exhaustive:
        raise ValueError("trials must be >= 1")
    stats = ExperimentStats(n=n, n_trials=0, seed=seed, policy=str(policy))
    if exhaustive:
        configs = [
            RingConfig((1,) + perm, (1,) * n, (delta,) * n, ((0, 0),))
            for perm in itertools.permutations(range(2, n + 1))
        ]
    else:
        configs = [random_config(n, (seed, t), Lockstep(delta)) for t in range(trials)]
    for t, config in enumerate(configs):
        pol = make_policy(policy, config) if isinstance(policy, str) else policy
        config = replace(config, policy=pol)
        try:
            outcome = run_election(config)
        except Exception as exc:
            raise RuntimeError(f"trial {t} (seed words {(seed, t)}) failed: {exc}") from exc
        stats.rows.append(_trial_row(t, config, outcome))
    stats.n_trials = len(stats.rows)
    stats.policy = str(pol)
    return stats


# --------------------------------------------------------------------------
# Ring size from elapsed time


def lockstep_round_trip(n: int, hold: int, delta: int) -> int:
    """Winner ticks between emitting its candidate and reading it back.

    In lockstep each hop costs ``delta`` in transit plus one tick until the
    receiver reads it, and each of the ``n - 1`` other processors holds the
    candidate ``hold`` ticks: ``n * (delta + 1 + hold) - hold``.
    """
    return n * (delta + 1 + hold) - hold


def ring_size_from_time(
    winner_elapsed_ticks: int, f_l: int, delta: int, policy_kind: str = "power2"
) -> int:
    """Invert :func:`lockstep_round_trip` for the ring size."""
    hold = 1 if policy_kind == "relative" else f_l
    per_hop = delta + 1 + hold
    n, rem = divmod(winner_elapsed_ticks + hold, per_hop)
    if rem or n < 2:
        raise ArithmeticError(
            f"{winner_elapsed_ticks} ticks is not a lockstep round trip "
            f"(hold {hold}, delta {delta})"
        )
    return n


def ring_size_of(config: RingConfig, outcome: Outcome) -> int:
    """Ring size as the winner can compute it from its own clock."""
    if not config.is_lockstep():
        raise UnsupportedMode("ring size by time counting needs a lockstep ring")
    if outcome.winner_round_trip is None:
        raise UnsupportedMode("outcome carries no winner round-trip measurement")
    policy = config.policy
    kind = "relative" if isinstance(policy, Relative) else "id"
    f_l = 1 if kind == "relative" else protocol.delay_of(policy, config.winner)
    return ring_size_from_time(outcome.winner_round_trip, f_l, config.link_delay[0], kind)


# --------------------------------------------------------------------------
# Filter baseline


def filter_tick_step(state, incoming, policy=None):
    """Per-tick rule of the plain filter election (no hop delays).

    A candidate is forwarded on the tick it is read iff it is smaller than
    everything this processor has owned or forwarded; the processor's own
    candidate goes out on its first tick unless something smaller is read then.
    """
    if state.mode is not Mode.AWAKE:
        raise ProtocolViolation(f"tick at processor {state.own} in mode {state.mode.value}")
    j = incoming.name if incoming is not None else None
    if j is not None and j == state.own:
        if state.k != state.own:
            raise ProtocolViolation(f"own candidate returned to {state.own} after losing")
        done = replace(state, mode=Mode.DONE, elected=j, pending_send=False)
        return done, [DeclareElected(j), SendSleepwell()]
    if j is not None and j < state.k:
        return replace(state, k=j, timer=0, pending_send=False), [SendElection(j)]
    timer = state.timer - 1
    if state.pending_send and timer == 0:
        return replace(state, timer=0, pending_send=False), [SendElection(state.k)]
    return replace(state, timer=timer), []


def baseline_filter_run(config: RingConfig, *, trace: bool = False) -> Outcome:
    # The filter ignores f; a neutral policy keeps validation happy for any names.
    return run_election(replace(config, policy=Relative()), trace=trace,
                        tick_fn=filter_tick_step)


# --------------------------------------------------------------------------
# Protocol comparison


COMPARE_COLUMNS = (
    "n", "trials",
    "power2_mean", "relative_mean", "baseline_mean", "eq5_mean",
    "power2_per_n", "relative_per_n", "baseline_per_n",
    "relative_adversarial",
)


def compare_protocols(n_list: Sequence[int], trials: int, seed) -> list[dict]:
    """Mean election passes of the delayed, relative and filter protocols per ring size.

    All three see the same random lockstep permutations.  ``relative_adversarial``
    is the relative protocol on :func:`adversarial_config`.
    """
    rows = []
    for n in n_list:
        p2, rel, base, eq5 = [], [], [], []
        for t in range(trials):
            config = random_config(n, (seed, n, t), Lockstep(0))
            p2.append(run_election(config).passes["election"])
            eq5.append(eq5_expected_bound(config))
            rel.append(run_election(replace(config, policy=Relative())).passes["election"])
            base.append(baseline_filter_run(config).passes["election"])
        means = [float(np.mean(x)) for x in (p2, rel, base)]
        adversarial = run_election(adversarial_config(n, Relative())).passes["election"]
        rows.append({
            "n": n,
            "trials": trials,
            "power2_mean": means[0],
            "relative_mean": means[1],
            "baseline_mean": means[2],
            "eq5_mean": float(sum(eq5, Fraction(0)) / trials),
            "power2_per_n": means[0] / n,
            "relative_per_n": means[1] / n,
            "baseline_per_n": means[2] / n,
            "relative_adversarial": adversarial,
        })
    return rows
