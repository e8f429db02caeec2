"""Limit diffusion matrices of the catalogue kernels in 2D.

Prints A(x) at the centre of the unit square together with the
eigenvalue window allowed by the kernel's comparison constant.
"""

import numpy as np

from nonlocal_mosco import diffusion_matrix, make_kernel

sweep = (1.5, 1.9, 1.99, 1.999)
x = np.array([0.5, 0.5])
for kind in ("nu", "j1", "j2", "j3", "j4", "perturbed"):
    f = make_kernel(kind, d=2, seed=7)
    dm = diffusion_matrix(f, x, 0.5, sweep)
    ev = dm.eigenvalues()
    print(
        f"{kind:>9}: A = [[{dm.entries[0, 0]:.6f}, {dm.entries[0, 1]: .6f}], [{dm.entries[1, 0]: .6f}, {dm.entries[1, 1]:.6f}]]"
        f"  eig in [{ev.min():.4f}, {ev.max():.4f}]  window [{1 / (2 * f.lam):.4f}, {f.lam / 2:.4f}]"
        f"  delta/2 agreement {dm.delta_agreement:.1e}"
    )
