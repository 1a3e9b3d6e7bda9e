"""Cost of selection is linear in N at a fixed subsample size.

The only objects the selection stage touches are the N x n sub-adjacency and
its N x K_max embedding, so doubling N should double the time. The probe
prints a table and the slope of log time against log N.

Run:  python demos/05_scaling.py
"""

from smbic import bench

res = bench.scaling_probe([2000, 4000, 8000, 16000], fixed=500, reps=3)
print(res.table())
print("expected slope near 1; the fixed n contributes no growth")
