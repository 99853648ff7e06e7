"""
Bounds as exact rationals
=========================

Every bound is evaluated with ``fractions.Fraction`` and rendered both as
``num/den`` and as a rounded decimal, then compared with a simulated run.
"""

from archring import RingConfig, bound_report, run_election
from archring.protocol import ScaledPower
from archring.simulator import derive_params

config = RingConfig(names=(6, 2, 9, 4, 1, 7), tick_len=(2, 3, 1, 2, 4, 2),
                    link_delay=(1, 0, 2, 0, 1, 1), wake=[(3, 0)])
report = bound_report(config)
print(report.to_text())

o = run_election(config)
print("\nmeasured total passes:", o.total_passes, " bits:", o.total_bits,
      " duration:", o.duration)

# With base 2*ceil(u/m) the hop delays grow fast enough for a sub-5N total.
s = derive_params(config).s
scaled = RingConfig(config.names, config.tick_len, config.link_delay, config.wake,
                    ScaledPower(2 * s))
print("scaled policy total passes:", run_election(scaled).total_passes, "< 5N =", 5 * config.n)
