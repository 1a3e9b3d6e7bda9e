"""How big must the subsample be?

The size rule is n = ceil(zeta * ln N / rho). Each selected node then sees
about zeta * ln N neighbours among the others, enough for its row of the
subsample to say which block it came from. This demo sweeps zeta on the
K0 = 3, N = 500 cell and watches the correct-selection rate climb.

Run:  python demos/02_subsample_size.py  [replicates, default 20]
"""

import sys

from smbic import bench
from smbic.subsampling import recommended_subsample_size

T = int(sys.argv[1]) if len(sys.argv) > 1 else 20

for N in (500, 2000, 5000, 100_000):
    rho = N ** -0.5
    sizes = [recommended_subsample_size(N, rho, z) for z in (1.0, 1.5, 2.0)]
    print(f"N={N:>6}  rho={rho:.4f}  n(zeta=1, 1.5, 2) = {sizes}  share of nodes {sizes[1] / N:.1%}")

# Every zeta sees the same graphs (the graph seed ignores zeta), so the rows
# differ only through the subsample.
spec = bench.ExperimentSpec(K0=(3,), N=(500,), zeta=(1.0, 1.5, 2.0), T=T, seed=1)
print(f"\nK0=3, N=500, beta=0.15, {T} replicates per zeta")
for row in bench.run_experiment(spec, threads=1):
    print(f"zeta={row.zeta}  Prob={row.prob:.2f}  Mean={row.mean_k:.2f}  {row.cpu_seconds:.2f}s per fit")
