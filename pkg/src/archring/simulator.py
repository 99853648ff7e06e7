"""Deterministic discrete-event engine for one election on a unidirectional ring.

Time is an exact integer in abstract units.  Processor ``p`` (0-based,
clockwise) has tick length ``tick_len[p]`` and sends to ``p + 1 (mod N)`` over
a link of constant delay ``link_delay[p]``, so every link is FIFO.

Engine rules:

* a processor's tick grid is ``wake_time + n * tick_len`` for ``n = 1, 2, ...``;
* control messages are handled the moment they arrive;
* an election message arriving at time ``a`` is readable at the first tick
  strictly later than ``a``, one message per tick, in FIFO order;
* equal-time events run arrivals first, then spontaneous wakes, then ticks,
  then by position, then by insertion order.

Ticks on which nothing can happen (empty inbox, no send due) are never
materialised.  Each processor keeps a single pending tick event, placed at the
earlier of "first tick after the head of the inbox arrives" and "tick at which
the armed timer reaches zero"; skipped ticks are applied in bulk with
:func:`archring.protocol.idle_ticks`.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from . import protocol
from .codec import message_bits
from .protocol import (
    DeclareElected,
    DelayPolicy,
    Election,
    Halt,
    Message,
    Mode,
    Power2,
    ProtocolViolation,
    SendElection,
    SendSleepwell,
    SendWakeup,
    Sleepwell,
    Wakeup,
)

__all__ = [
    "ConfigError",
    "InvariantFault",
    "RingConfig",
    "DerivedParams",
    "EventKind",
    "SimEvent",
    "Outcome",
    "Simulation",
    "derive_params",
    "validate_config",
    "run_election",
    "winner_delay",
]


class ConfigError(ValueError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InvariantFault(RuntimeError):
    """The simulation reached a state the protocol's correctness argument excludes."""


@dataclass(frozen=True)
class RingConfig:
    names: tuple
    tick_len: tuple
    link_delay: tuple
    wake: tuple
    policy: DelayPolicy = field(default_factory=Power2)
    declared_s: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "tick_len", tuple(self.tick_len))
        object.__setattr__(self, "link_delay", tuple(self.link_delay))
        object.__setattr__(self, "wake", tuple((int(p), int(t)) for p, t in self.wake))

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def winner(self) -> int:
        return min(self.names)

    def is_lockstep(self) -> bool:
        return all(t == 1 for t in self.tick_len) and len(set(self.link_delay)) == 1


@dataclass(frozen=True)
class DerivedParams:
    m: int
    u_clock: int
    u: int
    s: int
    eps: int
    w_p: int
    w_s: int
    w: int


def derive_params(config: RingConfig) -> DerivedParams:
    m = min(config.tick_len)
    u_clock = max(config.tick_len)
    u = u_clock + max(config.link_delay)
    w_p = sum(config.tick_len)
    w_s = sum(config.link_delay)
    return DerivedParams(
        m=m,
        u_clock=u_clock,
        u=u,
        s=-(-u // m),
        eps=u_clock - m,
        w_p=w_p,
        w_s=w_s,
        w=w_p + w_s,
    )


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_config(config: RingConfig, declared_s: Optional[int] = None) -> list[str]:
    """List everything wrong with ``config``; an empty list means it can run.

    ``declared_s`` (or ``config.declared_s``) is the promised bound on the
    asynchronicity ratio; the derived ``ceil(u/m)`` must not exceed it.
    """
    problems = []
    n = len(config.names)
    if n < 2:
        problems.append(f"a ring needs at least 2 processors, got {n}")
    for fname in ("tick_len", "link_delay"):
        if len(getattr(config, fname)) != n:
            problems.append(f"{fname} has {len(getattr(config, fname))} entries, expected {n}")
    if any(not _is_int(x) or x < 1 for x in config.names):
        problems.append("names must be positive integers")
    elif len(set(config.names)) != n:
        dupes = sorted({x for x in config.names if config.names.count(x) > 1})
        problems.append(f"duplicate names {dupes}")
    if any(not _is_int(x) or x < 1 for x in config.tick_len):
        problems.append("tick lengths must be positive integers")
    if any(not _is_int(x) or x < 0 for x in config.link_delay):
        problems.append("link delays must be non-negative integers")
    if not config.wake:
        problems.append("at least one processor must wake spontaneously")
    for pos, t in config.wake:
        if not 0 <= pos < n:
            problems.append(f"wake position {pos} outside ring of size {n}")
        if t < 0:
            problems.append(f"wake time {t} is negative")
    if problems:
        return problems

    try:
        problems.extend(protocol.validate_policy(config.policy, config.names))
    except protocol.PolicyError as exc:
        problems.append(str(exc))

    if declared_s is None:
        declared_s = config.declared_s
    if declared_s is not None:
        s = derive_params(config).s
        if s > declared_s:
            problems.append(
                f"asynchronicity ratio ceil(u/m) = {s} exceeds the declared bound {declared_s}"
            )
    return problems


def winner_delay(config: RingConfig) -> int:
    """Ticks the winning candidate is held at every hop but its origin."""
    l = config.winner
    if protocol.is_id_only(config.policy):
        return protocol.delay_of(config.policy, l)
    # Every receiver is larger than the winner.
    return 1


class EventKind(enum.IntEnum):
    ARRIVAL = 0
    WAKE = 1
    TICK = 2


class SimEvent(NamedTuple):
    time: int
    kind: EventKind
    pos: int
    seq: int
    message: Optional[Message] = None
    tick: Optional[int] = None
    version: int = 0

    def key(self):
        return (self.time, self.kind, self.pos, self.seq)

    def __lt__(self, other):
        return self.key() < other.key()


@dataclass(frozen=True)
class Outcome:
    winner: int
    passes: dict
    election_passes_by_origin: dict
    bits: dict
    first_wake: int
    completion: int
    ticks_elapsed: tuple
    winner_round_trip: Optional[int]
    max_inbox: int
    events: int
    elected: tuple
    trace: Optional[tuple] = None

    @property
    def total_passes(self) -> int:
        return sum(self.passes.values())

    @property
    def total_bits(self) -> int:
        return self.bits["framing"] + self.bits["payload"]

    @property
    def duration(self) -> int:
        return self.completion - self.first_wake

    def summary(self) -> dict:
        return {
            "winner": self.winner,
            "passes": dict(self.passes),
            "total_passes": self.total_passes,
            "election_passes_by_origin": {
                str(k): v for k, v in sorted(self.election_passes_by_origin.items())
            },
            "bits": dict(self.bits),
            "total_bits": self.total_bits,
            "first_wake": self.first_wake,
            "completion": self.completion,
            "ticks_elapsed": list(self.ticks_elapsed),
            "winner_round_trip": self.winner_round_trip,
            "max_inbox": self.max_inbox,
        }


TickFn = Callable[
    [protocol.ProcessorState, Optional[Election], DelayPolicy],
    tuple,
]


class _Proc:
    __slots__ = (
        "pos", "state", "tau", "wake_time", "inbox", "last_tick",
        "scheduled", "version", "emit_tick", "return_tick", "ticks_at_done",
    )

    def __init__(self, pos: int, name: int, tau: int):
        self.pos = pos
        self.state = protocol.unwoken(name)
        self.tau = tau
        self.wake_time = None
        self.inbox = deque()
        self.last_tick = 0
        self.scheduled = None
        self.version = 0
        self.emit_tick = None
        self.return_tick = None
        self.ticks_at_done = None


class Simulation:
    """Single-election simulation that can be advanced one event at a time.

    ``tick_fn`` replaces the per-tick transition; the baseline filter protocol
    uses this hook.  ``budget`` caps processed events (default
    ``64 * N**2 * (f(l) + 2)``).
    """

    def __init__(
        self,
        config: RingConfig,
        *,
        trace: bool = False,
        tick_fn: Optional[TickFn] = None,
        budget: Optional[int] = None,
    ):
        problems = validate_config(config)
        if problems:
            raise ConfigError(problems)
        self.config = config
        self.n = config.n
        self.tick_fn = tick_fn or protocol.tick_step
        self.budget = budget if budget is not None else 64 * self.n**2 * (winner_delay(config) + 2)
        self._procs = [_Proc(p, name, tau) for p, (name, tau) in
                       enumerate(zip(config.names, config.tick_len))]
        self._heap: list = []
        self._seq = 0
        self._trace = [] if trace else None

        self.passes = {"wakeup": 0, "election": 0, "sleepwell": 0}
        self.by_origin: dict = {}
        self.bits = {"framing": 0, "payload": 0}
        self.first_wake = None
        self.completion = None
        self.events = 0
        self.max_inbox = 0
        self.halted = False
        # Largest (time, kind, pos) processed so far; decides whether an
        # unmaterialised tick at the current instant has already gone by.
        self._high = (-1, EventKind.ARRIVAL, -1)

        for pos, t in sorted(config.wake, key=lambda pt: (pt[1], pt[0])):
            self._push(t, EventKind.WAKE, pos)

    # -- queue plumbing ----------------------------------------------------

    def _push(self, time, kind, pos, message=None, tick=None, version=0):
        ev = SimEvent(time, kind, pos, self._seq, message, tick, version)
        self._seq += 1
        heapq.heappush(self._heap, ev)

    def _log(self, time, kind, pos, detail):
        if self._trace is not None:
            self._trace.append(f"time={time} kind={kind} pos={pos} detail={detail}")

    def _fault(self, msg):
        raise InvariantFault(msg)

    # -- public surface ----------------------------------------------------

    def peek(self) -> Optional[SimEvent]:
        self._drop_stale()
        return self._heap[0] if self._heap else None

    def step(self) -> SimEvent:
        """Process exactly one live event and return it."""
        if self.halted:
            raise RuntimeError("simulation already halted")
        self._drop_stale()
        if not self._heap:
            self._fault("event queue drained before the election finished")
        ev = heapq.heappop(self._heap)
        self.events += 1
        if ev.key()[:3] > self._high:
            self._high = ev.key()[:3]
        if self.events > self.budget:
            self._fault(f"event budget {self.budget} exhausted without termination")
        if ev.kind is EventKind.WAKE:
            self._on_wake(ev)
        elif ev.kind is EventKind.ARRIVAL:
            self._on_arrival(ev)
        else:
            self._on_tick(ev)
        return ev

    def run(self) -> Outcome:
        while not self.halted:
            self.step()
        return self.outcome()

    def outcome(self) -> Outcome:
        if not self.halted:
            raise RuntimeError("no outcome before the simulation halts")
        winner_proc = next(p for p in self._procs if p.state.own == self.config.winner)
        round_trip = None
        if winner_proc.emit_tick is not None and winner_proc.return_tick is not None:
            round_trip = winner_proc.return_tick - winner_proc.emit_tick
        return Outcome(
            winner=winner_proc.state.elected,
            passes=dict(self.passes),
            election_passes_by_origin=dict(sorted(self.by_origin.items())),
            bits=dict(self.bits),
            first_wake=self.first_wake,
            completion=self.completion,
            ticks_elapsed=tuple(p.ticks_at_done for p in self._procs),
            winner_round_trip=round_trip,
            max_inbox=self.max_inbox,
            events=self.events,
            elected=tuple(p.state.elected for p in self._procs),
            trace=tuple(self._trace) if self._trace is not None else None,
        )

    # -- event handlers ----------------------------------------------------

    def _drop_stale(self):
        heap = self._heap
        while heap and heap[0].kind is EventKind.TICK:
            ev = heap[0]
            if ev.version == self._procs[ev.pos].version:
                break
            heapq.heappop(heap)

    def _wake(self, proc: _Proc, t: int, cause: str):
        proc.state, actions = protocol.awake_init(proc.state)
        proc.wake_time = t
        proc.last_tick = 0
        if self.first_wake is None:
            self.first_wake = t
        self._log(t, "WAKE", proc.pos, cause)
        self._execute(proc, actions, t, tick=None)
        self._reschedule(proc)

    def _on_wake(self, ev: SimEvent):
        proc = self._procs[ev.pos]
        if proc.state.mode is Mode.UNWOKEN:
            self._wake(proc, ev.time, "spontaneous")
        else:
            self._log(ev.time, "WAKE", ev.pos, "spontaneous-ignored")

    def _on_arrival(self, ev: SimEvent):
        proc = self._procs[ev.pos]
        msg = ev.message
        t = ev.time
        self._log(t, "ARRIVE", ev.pos, msg)
        if isinstance(msg, Wakeup):
            if proc.state.mode is Mode.UNWOKEN:
                self._wake(proc, t, "wakeup")
            return
        if isinstance(msg, Sleepwell):
            state = proc.state
            try:
                proc.state, actions = protocol.receive_control(state, msg)
            except ProtocolViolation as exc:
                self._fault(str(exc))
            if state.mode is Mode.AWAKE:
                if proc.inbox:
                    self._fault(f"processor {ev.pos} retired with unread election messages")
                proc.ticks_at_done = self._ticks_before(proc, t)
                proc.version += 1
                proc.scheduled = None
            self._execute(proc, actions, t, tick=None)
            return
        # Election message.
        if proc.state.mode is not Mode.AWAKE:
            self._fault(f"{msg} reached processor {ev.pos} in mode {proc.state.mode.value}")
        proc.inbox.append((t, msg))
        if len(proc.inbox) > self.max_inbox:
            self.max_inbox = len(proc.inbox)
        if len(proc.inbox) == 1:
            self._reschedule(proc)

    def _on_tick(self, ev: SimEvent):
        proc = self._procs[ev.pos]
        n = ev.tick
        t = ev.time
        state = protocol.idle_ticks(proc.state, n - proc.last_tick - 1)
        incoming = None
        if proc.inbox and proc.inbox[0][0] < t:
            incoming = proc.inbox.popleft()[1]
        try:
            proc.state, actions = self.tick_fn(state, incoming, self.config.policy)
        except ProtocolViolation as exc:
            self._fault(str(exc))
        proc.last_tick = n
        proc.scheduled = None
        s = proc.state
        self._log(
            t, "TICK", ev.pos,
            f"n={n} read={incoming.name if incoming else '-'} k={s.k} timer={s.timer}",
        )
        self._execute(proc, actions, t, tick=n)
        if s.mode is Mode.DONE:
            if proc.inbox:
                self._fault(f"processor {ev.pos} retired with unread election messages")
            proc.ticks_at_done = n
            proc.version += 1
        else:
            self._reschedule(proc)

    def _ticks_before(self, proc: _Proc, t: int) -> int:
        """Local ticks already elapsed when an arrival at ``t`` is handled."""
        q, r = divmod(t - proc.wake_time, proc.tau)
        if r == 0 and q > 0 and self._high < (t, EventKind.TICK, proc.pos):
            # The tick at this very instant is ordered after the arrival.
            q -= 1
        return q

    def _reschedule(self, proc: _Proc):
        s = proc.state
        want = None
        if proc.inbox:
            arrival = proc.inbox[0][0]
            want = max(proc.last_tick + 1, (arrival - proc.wake_time) // proc.tau + 1)
        if s.pending_send:
            expiry = proc.last_tick + s.timer
            want = expiry if want is None else min(want, expiry)
        if want == proc.scheduled:
            return
        proc.version += 1
        proc.scheduled = want
        if want is not None:
            self._push(proc.wake_time + want * proc.tau, EventKind.TICK, proc.pos,
                       tick=want, version=proc.version)

    def _send(self, proc: _Proc, msg: Message, t: int):
        dest = (proc.pos + 1) % self.n
        fb = message_bits(msg)
        self.bits["framing"] += fb.framing
        self.bits["payload"] += fb.payload
        if isinstance(msg, Election):
            self.passes["election"] += 1
            self.by_origin[msg.name] = self.by_origin.get(msg.name, 0) + 1
        else:
            self.passes[str(msg)] += 1
        self._log(t, "SEND", proc.pos, f"{msg} to={dest}")
        self._push(t + self.config.link_delay[proc.pos], EventKind.ARRIVAL, dest, message=msg)

    def _execute(self, proc: _Proc, actions, t: int, tick: Optional[int]):
        for action in actions:
            if isinstance(action, SendWakeup):
                self._send(proc, Wakeup(), t)
            elif isinstance(action, SendElection):
                if action.name == proc.state.own and proc.emit_tick is None:
                    proc.emit_tick = tick
                self._send(proc, Election(action.name), t)
            elif isinstance(action, SendSleepwell):
                if proc.state.k != self.config.winner:
                    self._fault(
                        f"processor {proc.pos} forwards sleepwell with k = {proc.state.k}"
                    )
                self._send(proc, Sleepwell(), t)
            elif isinstance(action, DeclareElected):
                if tick is not None:
                    proc.return_tick = tick
            elif isinstance(action, Halt):
                self._halt(proc, t)
            else:  # pragma: no cover
                raise TypeError(action)

    def _halt(self, proc: _Proc, t: int):
        self.completion = t
        self.halted = True
        self._log(t, "HALT", proc.pos, f"winner={proc.state.elected}")
        self._drop_stale()
        # Late spontaneous wakes are moot once the election is over; messages are not.
        in_flight = [ev for ev in self._heap if ev.kind is EventKind.ARRIVAL]
        if in_flight:
            self._fault(f"{len(in_flight)} messages still in flight at halt")
        if any(p.state.mode is not Mode.DONE for p in self._procs):
            self._fault("halt reached with processors still campaigning")
        if any(p.state.elected != self.config.winner for p in self._procs):
            self._fault("processors disagree on the elected name")


def run_election(config: RingConfig, *, trace: bool = False,
                 tick_fn: Optional[TickFn] = None) -> Outcome:
    """Simulate one election to the winner's halt and return exact counters."""
    return Simulation(config, trace=trace, tick_fn=tick_fn).run()
