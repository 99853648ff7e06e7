"""
Counting the ring with a clock
==============================

In lockstep the winner's candidate returns after a fixed number of ticks per
hop, so the winner can divide its own elapsed time to learn ``N``.
"""

from archring import Lockstep, random_config, ring_size_of, run_election
from archring.scenarios import lockstep_round_trip

for n in (2, 5, 17, 100):
    for delta in (0, 2):
        config = random_config(n, seed=n, mode=Lockstep(delta))
        o = run_election(config)
        print(f"N={n:3d} delta={delta}  round trip {o.winner_round_trip:5d} ticks"
              f"  -> N = {ring_size_of(config, o)}")

# The closed form behind the division: each hop costs delta + 1 + f(l), minus
# the hold the winner itself never applies.
print(lockstep_round_trip(5, hold=2, delta=0))
