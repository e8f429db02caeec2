"""Dirichlet resolvents of nonlocal forms converging to the local one.

Solves E_alpha(u, v) + <u, v> = <1, v> on (0, 1) with zero complement
data for each alpha and compares with -u'' + u = 1, u(0) = u(1) = 0.
"""

import sys

from nonlocal_mosco import build_domain, make_kernel, mosco_sweep, sample_function

n = int(sys.argv[1]) if len(sys.argv) > 1 else 128
dom = build_domain({"dim": 1, "geometry": [0, 1], "n": n, "r_trunc": 2})
f = sample_function(dom, lambda x: 1.0 + 0 * x)
for kind in ("nu", "j4", "j1"):
    rep = mosco_sweep(f, make_kernel(kind, d=1), (1.5, 1.9, 1.99, 1.999))
    dists = "  ".join(f"{d:.3e}" for d in rep.l2_distances)
    print(f"{kind:>3} (A = {rep.A[0, 0]:.4f}): L2 distances {dists}  passed={rep.passed}")
