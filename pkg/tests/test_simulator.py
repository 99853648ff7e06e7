import re
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from archring.bounds import eq1_bound, time_bounds
from archring.protocol import Power2, Relative, ScaledPower
from archring.scenarios import adversarial_config, filter_tick_step
from archring.simulator import (
    ConfigError,
    EventKind,
    InvariantFault,
    RingConfig,
    Simulation,
    derive_params,
    run_election,
    validate_config,
)

from oracles import brute_force_election

TRACE_RE = re.compile(r"^time=(\d+) kind=(WAKE|ARRIVE|TICK|SEND|HALT) pos=(\d+) detail=(.*)$")


def lockstep(names, delta=0, wake=None, policy=Power2()):
    n = len(names)
    return RingConfig(names, (1,) * n, (delta,) * n,
                      wake if wake is not None else [(p, 0) for p in range(n)], policy)


# --------------------------------------------------------------------------
# derived parameters and validation


def test_derive_lockstep():
    p = derive_params(lockstep((1, 2, 3)))
    assert (p.m, p.u, p.s, p.w_p, p.w_s, p.w) == (1, 1, 1, 3, 0, 3)


def test_derive_mixed():
    config = RingConfig((1, 2), (2, 3), (1, 4), [(0, 0)])
    p = derive_params(config)
    assert (p.m, p.u_clock, p.u, p.s, p.eps, p.w_s, p.w) == (2, 3, 7, 4, 1, 5, 10)
    # Second, independent evaluation from the definitions.
    u = Fraction(max(config.tick_len) + max(config.link_delay))
    assert p.s == int(-(-u // min(config.tick_len)))
    assert p.w == sum(config.tick_len) + sum(config.link_delay)


def test_derive_adversary():
    p = derive_params(adversarial_config(4))
    assert (p.m, p.u, p.s) == (2, 16, 8)


def test_validate_duplicates():
    problems = validate_config(lockstep((1, 1, 2)))
    assert any("duplicate" in p for p in problems)


def test_validate_declared_ratio():
    config = RingConfig((1, 2), (1, 1000), (0, 0), [(0, 0)])
    problems = validate_config(config, declared_s=10)
    assert len(problems) == 1 and "1000" in problems[0]
    assert validate_config(config) == []


@pytest.mark.parametrize(
    "config, fragment",
    [
        (RingConfig((1,), (1,), (0,), [(0, 0)]), "at least 2"),
        (RingConfig((1, 2), (1,), (0, 0), [(0, 0)]), "tick_len"),
        (RingConfig((1, 2), (1, 0), (0, 0), [(0, 0)]), "tick lengths"),
        (RingConfig((1, 2), (1, 1), (0, -1), [(0, 0)]), "link delays"),
        (RingConfig((1, 2), (1, 1), (0, 0), []), "wake"),
        (RingConfig((1, 2), (1, 1), (0, 0), [(5, 0)]), "position"),
        (RingConfig((0, 2), (1, 1), (0, 0), [(0, 0)]), "positive"),
    ],
)
def test_validate_structural(config, fragment):
    problems = validate_config(config)
    assert problems and any(fragment in p for p in problems)
    with pytest.raises(ConfigError):
        run_election(config)


# --------------------------------------------------------------------------
# hand-traced runs


def test_hand_trace_three():
    # Traced by hand: M2 and M3 die after one hop, M1 takes three; won at t=8.
    o = run_election(lockstep((2, 1, 3)))
    assert o.winner == 1
    assert o.passes == {"wakeup": 3, "election": 5, "sleepwell": 3}
    assert o.election_passes_by_origin == {1: 3, 2: 1, 3: 1}
    assert (o.first_wake, o.completion) == (0, 8)
    assert o.bits == {"framing": 22, "payload": 6}


def test_two_processors():
    o = run_election(lockstep((1, 2)))
    assert o.winner == 1
    assert o.passes == {"wakeup": 2, "election": 3, "sleepwell": 2}


def test_adversary_four_hand_trace():
    o = run_election(adversarial_config(4), trace=True)
    assert o.passes["election"] == 10
    assert o.election_passes_by_origin == {1: 4, 2: 3, 3: 2, 4: 1}
    assert o.completion == 64


GOLDEN_HEAD = [
    "time=0 kind=WAKE pos=0 detail=spontaneous",
    "time=0 kind=SEND pos=0 detail=wakeup to=1",
    "time=0 kind=ARRIVE pos=1 detail=wakeup",
    "time=0 kind=WAKE pos=1 detail=wakeup",
    "time=0 kind=SEND pos=1 detail=wakeup to=2",
    "time=0 kind=ARRIVE pos=2 detail=wakeup",
    "time=0 kind=WAKE pos=2 detail=wakeup",
    "time=0 kind=SEND pos=2 detail=wakeup to=0",
    "time=0 kind=ARRIVE pos=0 detail=wakeup",
    "time=1 kind=TICK pos=0 detail=n=1 read=- k=2 timer=0",
    "time=1 kind=SEND pos=0 detail=election(2) to=1",
]
GOLDEN_TAIL = [
    "time=8 kind=TICK pos=1 detail=n=8 read=1 k=1 timer=-6",
    "time=8 kind=SEND pos=1 detail=sleepwell to=2",
    "time=8 kind=ARRIVE pos=2 detail=sleepwell",
    "time=8 kind=SEND pos=2 detail=sleepwell to=0",
    "time=8 kind=ARRIVE pos=0 detail=sleepwell",
    "time=8 kind=SEND pos=0 detail=sleepwell to=1",
    "time=8 kind=ARRIVE pos=1 detail=sleepwell",
    "time=8 kind=HALT pos=1 detail=winner=1",
]


def test_golden_trace():
    trace = run_election(lockstep((2, 1, 3), wake=[(0, 0)]), trace=True).trace
    assert list(trace[: len(GOLDEN_HEAD)]) == GOLDEN_HEAD
    assert list(trace[-len(GOLDEN_TAIL):]) == GOLDEN_TAIL
    assert all(TRACE_RE.match(line) for line in trace)


# --------------------------------------------------------------------------
# stepping surface


def test_first_step_is_earliest_wake():
    config = RingConfig((3, 1, 2), (1, 1, 1), (0, 0, 0), [(2, 5), (1, 3)])
    ev = Simulation(config).step()
    assert (ev.kind, ev.pos, ev.time) == (EventKind.WAKE, 1, 3)


def test_first_tick_one_unit_after_wake():
    sim = Simulation(RingConfig((1, 2), (1, 1), (5, 5), [(0, 7)]))
    sim.step()
    ev = sim.step()
    assert (ev.kind, ev.pos, ev.time) == (EventKind.TICK, 0, 8)


def test_step_loop_equals_run():
    config = lockstep((2, 1, 3))
    sim = Simulation(config, trace=True)
    while not sim.halted:
        sim.step()
    assert sim.outcome() == run_election(config, trace=True)
    with pytest.raises(RuntimeError):
        sim.step()


def test_watchdog():
    with pytest.raises(InvariantFault, match="budget"):
        Simulation(lockstep((2, 1, 3)), budget=5).run()


def test_silent_automaton_is_a_fault():
    def mute(state, incoming, policy):
        from dataclasses import replace
        return replace(state, pending_send=False), []

    with pytest.raises(InvariantFault):
        run_election(lockstep((2, 1, 3)), tick_fn=mute)


def test_late_spontaneous_wake_is_ignored():
    config = RingConfig((2, 1), (1, 1), (0, 0), [(0, 0), (1, 10**6)])
    assert run_election(config).completion < 100


# --------------------------------------------------------------------------
# cross-check against the brute-force clock


@st.composite
def small_rings(draw, max_n=5):
    n = draw(st.integers(2, max_n))
    names = draw(st.permutations(list(range(1, n + 1))))
    tick_len = draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
    link_delay = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    wakers = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True))
    times = draw(st.lists(st.integers(0, 12), min_size=len(wakers), max_size=len(wakers)))
    return RingConfig(names, tick_len, link_delay, list(zip(wakers, times)))


def _policy_kind(policy):
    if isinstance(policy, Power2):
        return "power2", None
    if isinstance(policy, Relative):
        return "relative", None
    return "scaled", (policy.rho.numerator, policy.rho.denominator)


def _compare(config, outcome, filter_rule=False):
    kind, rho = _policy_kind(config.policy)
    ref = brute_force_election(config.names, config.tick_len, config.link_delay,
                               config.wake, kind, rho=rho, filter_rule=filter_rule)
    assert outcome.winner == ref["winner"]
    assert outcome.elected == ref["elected"]
    assert outcome.passes == ref["passes"]
    assert outcome.election_passes_by_origin == ref["by_origin"]
    assert outcome.bits == ref["bits"]
    assert outcome.first_wake == ref["first_wake"]
    assert outcome.completion == ref["completion"]
    assert outcome.ticks_elapsed == ref["ticks_elapsed"]
    assert outcome.winner_round_trip == ref["winner_round_trip"]


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_rings(), st.sampled_from([Power2(), Relative(), ScaledPower(3)]))
def test_engine_matches_brute_force(config, policy):
    from dataclasses import replace

    config = replace(config, policy=policy)
    _compare(config, run_election(config))


@settings(max_examples=60, deadline=None)
@given(small_rings(max_n=6))
def test_filter_baseline_matches_brute_force(config):
    from dataclasses import replace

    config = replace(config, policy=Relative())
    _compare(config, run_election(config, tick_fn=filter_tick_step), filter_rule=True)


# --------------------------------------------------------------------------
# invariants on random rings


@st.composite
def rings(draw):
    n = draw(st.integers(2, 24))
    names = draw(st.permutations(list(range(1, n + 1))))
    tick_len = draw(st.lists(st.integers(1, 8), min_size=n, max_size=n))
    link_delay = draw(st.lists(st.integers(0, 4), min_size=n, max_size=n))
    wakers = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True))
    times = draw(st.lists(st.integers(0, 50), min_size=len(wakers), max_size=len(wakers)))
    return RingConfig(names, tick_len, link_delay, list(zip(wakers, times)))


def _parse(trace):
    return [TRACE_RE.match(line).groups() for line in trace]


@settings(max_examples=120, deadline=None)
@given(rings())
def test_run_invariants(config):
    o = run_election(config, trace=True)
    n, l = config.n, config.winner
    assert o.winner == l and all(e == l for e in o.elected)
    assert o.passes["wakeup"] == n and o.passes["sleepwell"] == n
    assert o.election_passes_by_origin[l] == n
    assert all(c < n for origin, c in o.election_passes_by_origin.items() if origin != l)

    events = _parse(o.trace)
    # Sleepwell goes once round, clockwise, starting and ending at the winner.
    sleep_sends = [int(pos) for _, kind, pos, d in events if kind == "SEND" and d.startswith("sleepwell")]
    start = config.names.index(l)
    assert sleep_sends == [(start + i) % n for i in range(n)]

    # FIFO: per link, arrival order equals send order.
    sent = {p: [] for p in range(n)}
    got = {p: [] for p in range(n)}
    for _, kind, pos, d in events:
        if kind == "SEND":
            sent[int(pos)].append(d.split(" to=")[0])
        elif kind == "ARRIVE":
            got[(int(pos) - 1) % n].append(d)
    assert sent == got

    # Slack-2 checks of the per-candidate and time budgets.
    for origin, count in o.election_passes_by_origin.items():
        if origin != l:
            b = eq1_bound(config, origin)
            assert count <= 2 * -(-b.numerator // b.denominator)
    assert o.duration <= 2 * time_bounds(config)["time_abs"]


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(1, 17))), st.integers(0, 2))
def test_lockstep_inbox_never_queues(names, delta):
    o = run_election(lockstep(tuple(names), delta, wake=[(0, 0)]))
    assert o.max_inbox <= 1


def test_determinism():
    config = RingConfig((5, 3, 8, 1, 7), (3, 1, 4, 1, 5), (2, 0, 1, 3, 0), [(2, 0), (4, 9)])
    assert run_election(config, trace=True) == run_election(config, trace=True)


def test_huge_timers_are_jumped():
    # f(200) = 2**200 ticks would never finish tick by tick.
    names = (200, 199, 198, 3)
    o = run_election(lockstep(names))
    assert o.winner == 3
    assert o.events < 200
