"""Nonlocal energy of u(x) = x on (0, 1) approaching the Dirichlet energy.

    python3 demos/bbm_limit.py
"""

import numpy as np

from nonlocal_mosco import build_domain, eval_form_inner, eval_form_local, make_kernel, sample_function

dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 8, "r_trunc": 2})
u = sample_function(dom, lambda x: x, "H_nu_on_Omega")
kernel = make_kernel("nu", d=1, base="power_law")
local = eval_form_local(np.eye(1), u, u)

print(f"{'alpha':>7} {'E_alpha':>14} {'closed form':>14} {'gap':>10}")
for a in (1.0, 1.5, 1.9, 1.99, 1.999, 1.9999):
    e = eval_form_inner(kernel, a, u, u).value
    print(f"{a:7.4f} {e:14.10f} {1 - (2 - a) / (3 - a):14.10f} {abs(e - local):10.2e}")
