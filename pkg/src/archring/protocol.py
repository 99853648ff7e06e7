"""Per-processor election automaton and hop-delay policies.

Every transition is a pure function ``state -> (new state, actions)``; the
simulator owns time, links and inboxes and merely interprets the actions.

A processor wakes, sends a wakeup to its clockwise neighbour and becomes a
candidate for its own name with a one-tick timer.  In each local time unit it
reads at most one election message:

* its current candidate ``k`` coming back means it has won;
* a smaller name replaces ``k`` and restarts the timer at ``f(k)``;
* anything larger (or no message at all) is swallowed and the timer counts
  down, the candidate being forwarded exactly when the timer reaches zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

__all__ = [
    "ProtocolViolation",
    "PolicyError",
    "Power2",
    "ScaledPower",
    "Relative",
    "Table",
    "DelayPolicy",
    "is_id_only",
    "eval_delay",
    "delay_of",
    "validate_policy",
    "Wakeup",
    "Election",
    "Sleepwell",
    "Message",
    "Mode",
    "ProcessorState",
    "SendWakeup",
    "SendElection",
    "SendSleepwell",
    "DeclareElected",
    "Halt",
    "Action",
    "unwoken",
    "awake_init",
    "tick_step",
    "receive_control",
    "idle_ticks",
]


class ProtocolViolation(RuntimeError):
    """A transition was requested in a state where the protocol forbids it."""


class PolicyError(ValueError):
    pass


# --------------------------------------------------------------------------
# Delay policies


@dataclass(frozen=True)
class Power2:
    """``f(k) = 2**k``."""

    def __str__(self) -> str:
        return "power2"


@dataclass(frozen=True)
class ScaledPower:
    """``f(k) = ceil(rho**k)`` for a rational base ``rho >= 2``."""

    rho: Fraction

    def __post_init__(self):
        rho = Fraction(self.rho)
        if rho < 2:
            raise PolicyError(f"ScaledPower needs rho >= 2, got {rho}")
        object.__setattr__(self, "rho", rho)

    def __str__(self) -> str:
        return f"scaled({self.rho})"


@dataclass(frozen=True)
class Relative:
    """``f(i, j) = ceil(2**(j - i))`` for receiver ``i`` and carried name ``j``."""

    def __str__(self) -> str:
        return "relative"


@dataclass(frozen=True)
class Table:
    """Explicit ``name -> ticks`` delay table."""

    delays: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "delays", dict(sorted(self.delays.items())))

    def __hash__(self):
        return hash(tuple(self.delays.items()))

    def __str__(self) -> str:
        return "table"


DelayPolicy = Union[Power2, ScaledPower, Relative, Table]


def is_id_only(policy: DelayPolicy) -> bool:
    return not isinstance(policy, Relative)


def delay_of(policy: DelayPolicy, name: int) -> int:
    """``f(name)`` for an id-only policy."""
    if isinstance(policy, Power2):
        return 1 << name
    if isinstance(policy, ScaledPower):
        p = policy.rho**name
        return -(-p.numerator // p.denominator)
    if isinstance(policy, Table):
        try:
            return policy.delays[name]
        except KeyError:
            raise PolicyError(f"delay table has no entry for name {name}") from None
    raise PolicyError(f"{policy} depends on the receiver; use eval_delay")


def eval_delay(policy: DelayPolicy, receiver: int, carried: int) -> int:
    """Ticks the ``receiver`` holds an election message carrying ``carried``."""
    if isinstance(policy, Relative):
        return 1 << (carried - receiver) if carried >= receiver else 1
    return delay_of(policy, carried)


def validate_policy(policy: DelayPolicy, names: Iterable[int]) -> list[str]:
    """Return the ways ``policy`` fails to be a strictly increasing, positive ``f``.

    An empty list means the policy is usable on ``names``.
    """
    names = sorted(set(names))
    if not names:
        raise PolicyError("validate_policy needs at least one name")
    if isinstance(policy, Relative):
        return []
    problems = []
    values = []
    for name in names:
        try:
            v = delay_of(policy, name)
        except PolicyError as exc:
            problems.append(str(exc))
            continue
        if not isinstance(v, int) or v < 1:
            problems.append(f"f({name}) = {v!r} is not a positive integer")
        values.append((name, v))
    for (a, fa), (b, fb) in zip(values, values[1:]):
        if not fa < fb:
            problems.append(f"not strictly increasing: f({a}) = {fa} >= f({b}) = {fb}")
    return problems


# --------------------------------------------------------------------------
# Messages and actions


@dataclass(frozen=True)
class Wakeup:
    def __str__(self) -> str:
        return "wakeup"


@dataclass(frozen=True)
class Election:
    name: int

    def __str__(self) -> str:
        return f"election({self.name})"


@dataclass(frozen=True)
class Sleepwell:
    def __str__(self) -> str:
        return "sleepwell"


Message = Union[Wakeup, Election, Sleepwell]


@dataclass(frozen=True)
class SendWakeup:
    pass


@dataclass(frozen=True)
class SendElection:
    name: int


@dataclass(frozen=True)
class SendSleepwell:
    pass


@dataclass(frozen=True)
class DeclareElected:
    name: int


@dataclass(frozen=True)
class Halt:
    pass


Action = Union[SendWakeup, SendElection, SendSleepwell, DeclareElected, Halt]


# --------------------------------------------------------------------------
# Processor automaton


class Mode(enum.Enum):
    UNWOKEN = "unwoken"
    AWAKE = "awake"
    DONE = "done"


@dataclass(frozen=True)
class ProcessorState:
    own: int
    mode: Mode = Mode.UNWOKEN
    k: Optional[int] = None
    timer: int = 0
    pending_send: bool = False
    elected: Optional[int] = None


def unwoken(own: int) -> ProcessorState:
    if own < 1:
        raise ValueError(f"names are positive integers, got {own}")
    return ProcessorState(own=own)


def awake_init(state: Union[ProcessorState, int]) -> tuple[ProcessorState, list[Action]]:
    """Wake a processor: emit its wakeup and arm a one-tick timer for its own name.

    Accepts either a bare name (a fresh processor) or an existing state, which
    must still be unwoken.
    """
    if isinstance(state, int):
        state = unwoken(state)
    if state.mode is not Mode.UNWOKEN:
        raise ProtocolViolation(f"processor {state.own} woken twice (mode {state.mode.value})")
    woke = replace(state, mode=Mode.AWAKE, k=state.own, timer=1, pending_send=True)
    return woke, [SendWakeup()]


def tick_step(
    state: ProcessorState, incoming: Optional[Election], policy: DelayPolicy
) -> tuple[ProcessorState, list[Action]]:
    """One local time unit with at most one election message read."""
    if state.mode is not Mode.AWAKE:
        raise ProtocolViolation(f"tick at processor {state.own} in mode {state.mode.value}")
    if incoming is not None and not isinstance(incoming, Election):
        raise ProtocolViolation(f"tick_step only reads election messages, got {incoming}")

    j = incoming.name if incoming is not None else None
    k = state.k
    if j is not None and j == k:
        if k != state.own:
            raise ProtocolViolation(
                f"processor {state.own} saw its candidate {k} return but k != own"
            )
        done = replace(state, mode=Mode.DONE, elected=k, pending_send=False)
        return done, [DeclareElected(k), SendSleepwell()]
    if j is not None and j < k:
        adopted = replace(state, k=j, timer=eval_delay(policy, state.own, j), pending_send=True)
        return adopted, []
    # Larger name or silence: swallow and count down.
    timer = state.timer - 1
    if state.pending_send and timer == 0:
        return replace(state, timer=0, pending_send=False), [SendElection(k)]
    return replace(state, timer=timer), []


def receive_control(
    state: ProcessorState, msg: Union[Wakeup, Sleepwell]
) -> tuple[ProcessorState, list[Action]]:
    if isinstance(msg, Wakeup):
        if state.mode is Mode.UNWOKEN:
            return awake_init(state)
        return state, []
    if isinstance(msg, Sleepwell):
        if state.mode is Mode.AWAKE:
            done = replace(state, mode=Mode.DONE, elected=state.k, pending_send=False)
            return done, [DeclareElected(state.k), SendSleepwell()]
        if state.mode is Mode.DONE:
            return state, [Halt()]
        raise ProtocolViolation(f"sleepwell reached unwoken processor {state.own}")
    raise ProtocolViolation(f"receive_control got non-control message {msg}")


def idle_ticks(state: ProcessorState, n: int) -> ProcessorState:
    """Apply ``n`` message-less ticks known not to fire a pending send."""
    if n < 0:
        raise ValueError(n)
    if n == 0:
        return state
    if state.pending_send and state.timer <= n:
        raise ProtocolViolation(
            f"skipping {n} ticks at processor {state.own} would jump over a send"
        )
    return replace(state, timer=state.timer - n)
