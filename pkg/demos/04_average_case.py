"""
Random placements in lockstep
=============================

On a synchronous ring the exponential hop delays let the smallest candidate
overtake nearly everything, so the mean election cost stays linear in ``N``.
A plain filter election on the same placements grows like ``N log N``.
"""

import numpy as np

from archring import average_case_experiment, compare_protocols

for n in (16, 32, 64):
    stats = average_case_experiment(n, trials=100, seed=7)
    print(f"N={n:3d}  mean election passes {stats.mean_election_passes:7.1f}"
          f"  ({stats.mean_election_passes / n:.2f} N)"
          f"  range {stats.min_election_passes}..{stats.max_election_passes}")

rows = compare_protocols([16, 64], trials=50, seed=3)
print()
print(" N  power2/N  relative/N  filter/N")
for r in rows:
    print(f"{r['n']:2d}  {r['power2_per_n']:8.2f}  {r['relative_per_n']:10.2f}  {r['baseline_per_n']:8.2f}")

# Per-trial totals against the expected-case bound: on average below, but
# individual unlucky placements can exceed it.
stats = average_case_experiment(64, trials=100, seed=7)
ratios = np.array([float(r["total_passes"] / r["eq5_bound"]) for r in stats.rows])
print(f"\ntotal / expected-case bound at N=64: mean {ratios.mean():.3f}, max {ratios.max():.3f}")
