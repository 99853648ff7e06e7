"""Exact rational evaluators for the message, bit and time bounds.

Every function takes a :class:`~archring.simulator.RingConfig` and returns a
:class:`fractions.Fraction`.  Notation used throughout:

``N``   ring size            ``l``    least name (the winner)
``u``   slowest tick + largest link delay
``m``   fastest tick         ``u1``   slowest tick alone (``eps = u1 - m``)
``w_p`` sum of tick lengths  ``w_s``  sum of link delays, ``w = w_p + w_s``
``f``   the id-only hop delay; ``lam(i)`` the dyadic code length of ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .codec import code_length as lam
from .protocol import delay_of, is_id_only
from .simulator import RingConfig, derive_params

__all__ = [
    "UnsupportedPolicy",
    "DegenerateWalk",
    "BoundReport",
    "eq1_bound",
    "eq2_bound",
    "eq2_closed",
    "eq3_bits_bound",
    "eq4_bound",
    "eq5_expected_bound",
    "split_delay_bound",
    "split_delay_closed",
    "time_bounds",
    "bound_report",
    "render_rational",
]


class UnsupportedPolicy(ValueError):
    pass


class DegenerateWalk(ValueError):
    pass


def _id_only(config: RingConfig):
    if config.n < 2:
        raise ValueError(f"bounds need a ring of at least 2 processors, got {config.n}")
    if not is_id_only(config.policy):
        raise UnsupportedPolicy(f"{config.policy} delays depend on the receiver")
    return lambda i: delay_of(config.policy, i)


def _budget(config: RingConfig, f) -> Fraction:
    # N u (f(l) + 1) / m: the winner's tour time measured in fastest ticks, times N.
    p = derive_params(config)
    return Fraction(config.n * p.u * (f(config.winner) + 1), p.m)


def eq1_bound(config: RingConfig, origin: int) -> Fraction:
    """Passes the candidate ``origin`` can make before the winner's tour ends."""
    f = _id_only(config)
    if origin not in config.names:
        raise ValueError(f"{origin} is not a name on this ring")
    return _budget(config, f) / f(origin)


def eq2_bound(config: RingConfig) -> Fraction:
    f = _id_only(config)
    return 2 * config.n + _budget(config, f) * sum(Fraction(1, f(i)) for i in config.names)


def eq2_closed(config: RingConfig) -> Fraction:
    """``2N + 3Nu/m``; dominates :func:`eq2_bound` once ``f(i) >= 2**i``."""
    _id_only(config)
    p = derive_params(config)
    return 2 * config.n + Fraction(3 * config.n * p.u, p.m)


def eq3_bits_bound(config: RingConfig) -> Fraction:
    f = _id_only(config)
    return 2 * config.n + _budget(config, f) * sum(
        Fraction(lam(i), f(i)) for i in config.names
    )


def eq4_bound(config: RingConfig) -> Fraction:
    """Message bound that books the winner's exactly-``N`` passes separately."""
    f = _id_only(config)
    l = config.winner
    return 3 * config.n + _budget(config, f) * sum(
        Fraction(1, f(i)) for i in config.names if i != l
    )


def eq5_expected_bound(config: RingConfig) -> Fraction:
    f = _id_only(config)
    if sum(config.tick_len) == 0 and sum(config.link_delay) == 0:
        raise DegenerateWalk("walk time is zero")
    p = derive_params(config)
    l = config.winner
    available = p.w + p.w_s + p.w_p * f(l) * lam(l)
    return 2 * config.n + config.n * sum(
        Fraction(available, p.w_s + p.w_p * f(i) * lam(i)) for i in config.names
    )


def split_delay_bound(config: RingConfig) -> Fraction:
    """Message bound with clock spread and link propagation kept apart."""
    f = _id_only(config)
    p = derive_params(config)
    n, l = config.n, config.winner
    top = n * p.u_clock * (f(l) + 1) + 2 * p.w_s
    return 2 * n + sum(Fraction(top, p.m * f(i) + p.w_s) for i in config.names)


def split_delay_closed(config: RingConfig) -> Fraction:
    """``7N + 3 eps N / m``."""
    p = derive_params(config)
    return 7 * config.n + Fraction(3 * p.eps * config.n, p.m)


def time_bounds(config: RingConfig) -> dict:
    p = derive_params(config)
    n, l = config.n, config.winner
    out = {
        "time_abs": None,
        "time_walk": None,
        "time_relative_circle": Fraction(p.w_s + p.w_p * lam(l)),
        "time_relative_total": Fraction(3 * p.w + p.w_p * (lam(l) - 1)),
    }
    if is_id_only(config.policy):
        fl = delay_of(config.policy, l)
        out["time_abs"] = Fraction(n * p.u * (fl + 2))
        out["time_walk"] = Fraction(2 * p.w + p.w_s + p.w_p * fl * lam(l))
    return out


def render_rational(x: Optional[Fraction]) -> Optional[dict]:
    """``{"exact": "num/den", "decimal": "d.dddddd"}`` rounded half-up to 6 places."""
    if x is None:
        return None
    x = Fraction(x)
    scaled = x * 10**6
    q = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
    sign = "-" if q < 0 else ""
    q = abs(q)
    return {
        "exact": f"{x.numerator}/{x.denominator}",
        "decimal": f"{sign}{q // 10**6}.{q % 10**6:06d}",
    }


@dataclass(frozen=True)
class BoundReport:
    n: int
    l: int
    policy: str
    u: int
    m: int
    u_clock: int
    eps: int
    w: int
    w_p: int
    w_s: int
    eq1_per_origin: dict = field(default_factory=dict)
    eq2_total: Optional[Fraction] = None
    eq2_closed: Optional[Fraction] = None
    eq3_bits: Optional[Fraction] = None
    eq4_total: Optional[Fraction] = None
    eq5_expected: Optional[Fraction] = None
    split_total: Optional[Fraction] = None
    split_closed: Optional[Fraction] = None
    time_abs: Optional[Fraction] = None
    time_walk: Optional[Fraction] = None
    time_relative_circle: Optional[Fraction] = None
    time_relative_total: Optional[Fraction] = None

    _BOUND_FIELDS = (
        "eq2_total", "eq2_closed", "eq3_bits", "eq4_total", "eq5_expected",
        "split_total", "split_closed", "time_abs", "time_walk",
        "time_relative_circle", "time_relative_total",
    )

    def to_json(self) -> dict:
        out = {
            "inputs": {
                "N": self.n, "l": self.l, "policy": self.policy, "u": self.u, "m": self.m,
                "u_clock": self.u_clock, "eps": self.eps, "w": self.w, "w_p": self.w_p,
                "w_s": self.w_s,
            },
            "eq1_per_origin": {
                str(k): render_rational(v) for k, v in sorted(self.eq1_per_origin.items())
            },
        }
        for name in self._BOUND_FIELDS:
            out[name] = render_rational(getattr(self, name))
        return out

    def to_text(self) -> str:
        rows = [(k, str(v)) for k, v in self.to_json()["inputs"].items()]
        for name in self._BOUND_FIELDS:
            r = render_rational(getattr(self, name))
            rows.append((name, "n/a" if r is None else f"{r['decimal']}  ({r['exact']})"))
        for k, v in sorted(self.eq1_per_origin.items()):
            r = render_rational(v)
            rows.append((f"eq1[{k}]", f"{r['decimal']}  ({r['exact']})"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def bound_report(config: RingConfig) -> BoundReport:
    """Evaluate every bound that applies to ``config``'s policy."""
    p = derive_params(config)
    common = dict(
        n=config.n, l=config.winner, policy=str(config.policy), u=p.u, m=p.m,
        u_clock=p.u_clock, eps=p.eps, w=p.w, w_p=p.w_p, w_s=p.w_s,
    )
    times = time_bounds(config)
    if not is_id_only(config.policy):
        return BoundReport(**common, **times)
    return BoundReport(
        **common,
        eq1_per_origin={i: eq1_bound(config, i) for i in config.names},
        eq2_total=eq2_bound(config),
        eq2_closed=eq2_closed(config),
        eq3_bits=eq3_bits_bound(config),
        eq4_total=eq4_bound(config),
        eq5_expected=eq5_expected_bound(config),
        split_total=split_delay_bound(config),
        split_closed=split_delay_closed(config),
        **times,
    )
