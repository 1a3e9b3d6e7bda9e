"""Outliers that belong to no community.

m extra nodes link to each other with probability 0.1 and to normal node i
with probability u_i^2 / 10, which makes them hubs: about three times the
degree of a normal node at N = 2000. Ideally K_hat stays at K0. In practice
the hubs pull singular directions of their own, k-means carves small mixed
clusters around them, and K_hat can overshoot.

Run:  python demos/04_outliers.py  [replicates, default 10]
"""

import sys

from smbic import bench

T = int(sys.argv[1]) if len(sys.argv) > 1 else 10
spec = bench.ExperimentSpec(generator="gsbm", K0=(3,), N=(2000,), m=(0, 20, 100), T=T, seed=3)
print(f"K0=3, N=2000 normal nodes, {T} replicates")
for row in bench.run_experiment(spec, threads=1):
    print(f"m={row.m:3d}  Prob={row.prob:.2f}  Mean={row.mean_k:.2f}")
