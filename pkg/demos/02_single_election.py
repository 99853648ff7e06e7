"""
One election, event by event
============================

Three processors, unit ticks, instantaneous links, processor 0 wakes first.
The trace shows every wake, arrival, tick that did something, and send.
"""

from archring import RingConfig, run_election

config = RingConfig(names=(2, 1, 3), tick_len=(1, 1, 1), link_delay=(0, 0, 0), wake=[(0, 0)])
outcome = run_election(config, trace=True)

for line in outcome.trace:
    print(line)

print()
print("winner:", outcome.winner)
print("passes:", outcome.passes)
print("election passes by origin:", outcome.election_passes_by_origin)
print("bits:", outcome.bits)

# A heterogeneous ring: slow clocks and slow links change the timing, not the winner.
slow = RingConfig(names=(5, 3, 8, 1, 4), tick_len=(3, 1, 7, 2, 5),
                  link_delay=(2, 0, 4, 1, 3), wake=[(2, 0), (4, 11)])
print(run_election(slow).summary())
