"""
The slow-small, fast-large adversary
====================================

Ascending names clockwise, with processor ``i`` ticking every ``2**(N-i+1)``.
Small candidates crawl, large ones race ahead and never catch anything, so
candidate ``i`` survives ``N - i + 1`` hops and the total is ``N(N+1)/2``.
"""

from archring import adversarial_config, run_election
from archring.protocol import Relative

print(" N  election  N(N+1)/2  relative policy")
for n in (4, 8, 16, 32):
    o = run_election(adversarial_config(n))
    rel = run_election(adversarial_config(n, Relative()))
    print(f"{n:2d}  {o.passes['election']:8d}  {n * (n + 1) // 2:8d}  {rel.passes['election']:15d}")

print(run_election(adversarial_config(4)).election_passes_by_origin)
