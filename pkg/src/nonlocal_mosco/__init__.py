"""Nonlocal quadratic forms with singular kernels and their local limits.

Submodules: :mod:`.kernels` (kernel and mollifier catalogue), :mod:`.domains`
(lattice domains and grid functions), :mod:`.forms` (nonlocal/local forms,
diffusion matrices, smoothing), :mod:`.mosco_lab` (Galerkin resolvents and
convergence sweeps) and :mod:`.cli`.
"""

from .domains import Domain, GridFunction, build_domain, region_pairs, sample_function
from .forms import (
    DiffusionMatrix,
    FormReport,
    QuadratureError,
    concentration_integral,
    diffusion_matrix,
    eval_form_full,
    eval_form_inner,
    eval_form_local,
    norm_H_nu,
    norm_V_nu_full,
    norm_V_nu_triple,
    seminorm_H_nu,
    seminorm_V_nu,
    smooth_approximation,
)
from .kernels import (
    KernelFamily,
    MollifierFamily,
    check_condition_E,
    check_condition_L,
    eval_kernel,
    eval_mollifier,
    eval_nu_alpha,
    frac_laplacian_constant,
    kappa0,
    make_kernel,
    make_mollifier,
    tilde_nu,
)
from .mosco_lab import (
    DEFAULT_ALPHA_SWEEP,
    VariationalProblem,
    assemble,
    liminf_diagnostic,
    limsup_diagnostic,
    mosco_sweep,
    solve_resolvent,
)

__version__ = "0.1.0"
