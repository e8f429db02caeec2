"""Nonlocal and local quadratic forms on lattice functions.

The nonlocal forms are evaluated in increment coordinates ``h = y - x``
(see :mod:`nonlocal_mosco._quadrature`): for lattice functions the
inner integral over ``x`` is computed exactly and the outer integral in
``h`` uses product weights built from the kernel's radial moments, so the
``|h|^-2`` singularity of ``nu^alpha`` never has to be sampled.

Examples
--------
>>> from nonlocal_mosco.domains import build_domain, sample_function
>>> from nonlocal_mosco.kernels import make_kernel
>>> dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 4, "r_trunc": 2})
>>> u = sample_function(dom, lambda x: x)
>>> rep = eval_form_inner(make_kernel("nu"), 1.9, u, u)
>>> round(rep.value, 12)
0.909090909091
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from ._quadrature import DEFAULT_CONFIG, QuadratureConfig, difference_sample, increment_cells, rules_for
from .domains import Domain, GridFunction, _cell_gauss, basis_at, cell_gradients, l2_inner
from .kernels import KernelFamily, MollifierFamily, NuAlpha, sphere_area

__all__ = [
    "FormReport",
    "DiffusionMatrix",
    "QuadratureConfig",
    "nonlocal_integral",
    "eval_form_inner",
    "eval_form_full",
    "seminorm_H_nu",
    "norm_H_nu",
    "seminorm_V_nu",
    "norm_V_nu_full",
    "norm_V_nu_triple",
    "diffusion_matrix",
    "eval_form_local",
    "concentration_integral",
    "smooth_approximation",
    "bump",
]


class QuadratureError(ArithmeticError):
    """Raised when a form's error estimate exceeds the requested tolerance."""


@dataclass(frozen=True)
class FormReport:
    """Value of a nonlocal form with its diagnostics.

    ``singular_part`` collects the increment cells touching ``h = 0`` and
    ``regular_part`` the rest.  ``inner`` is the ``Omega x Omega`` part and
    ``cross`` the single ``Omega x Omega^c`` part (the full form counts it
    twice).  ``tail_bound`` bounds the mass discarded beyond the truncation
    box.
    """

    value: float
    quadrature_error_estimate: float
    tail_bound: float
    singular_part: float
    regular_part: float
    inner: float
    cross: float
    alpha: float
    region: str

    CSV_COLUMNS = ("experiment", "alpha", "value", "error_estimate", "tail_bound", "inner", "cross")

    def csv_row(self, experiment: str) -> list:
        return [
            experiment,
            _fmt(self.alpha),
            _fmt(self.value),
            _fmt(self.quadrature_error_estimate),
            _fmt(self.tail_bound),
            _fmt(self.inner),
            _fmt(self.cross),
        ]


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


# ------------------------------------------------------------ core sums


def _check_pair(u: GridFunction, v: GridFunction) -> None:
    if u.domain is not v.domain:
        raise ValueError("u and v live on different domains")
    if u.basis != v.basis:
        raise ValueError("u and v use different bases")


def nonlocal_integral(
    kernel: KernelFamily,
    alpha: float,
    domain: Domain,
    U: np.ndarray,
    V: np.ndarray,
    region: str,
    basis: str = "linear",
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    omega_cells: Optional[np.ndarray] = None,
):
    """``int_Omega int_R (U(y)-U(x))(V(y)-V(x)) J^alpha(x, y) dy dx``.

    ``U`` and ``V`` hold full-lattice coefficients, one function per column
    (1D arrays are single functions).  ``region`` picks ``R``: ``"inner"``
    (Omega), ``"cross"`` (truncation box minus Omega) or ``"all"``.
    Returns ``(total, singular, regular, error_estimate)``.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    rules = rules_for(kernel, alpha, domain.spacing, basis, cfg)
    cells = increment_cells(domain, region, rules.support, rules, omega_cells)
    mod = kernel.modulation if kernel.kind == "perturbed" else None
    shape = U.shape[1:]

    def cell_sum(k):
        rule = rules.rule(k)
        g = np.zeros((len(rule.nodes),) + shape)
        smp = difference_sample(domain, rule.nodes, region, basis, mod, omega_cells)
        if smp is not None:
            du = smp.apply(U)
            dv = du if V is U else smp.apply(V)
            qq = smp.q if not shape else smp.q[:, None]
            g = smp.segment_sum(qq * (du * dv))
        if not np.all(np.isfinite(rule.weights)):
            if np.any(g != 0):
                return np.full(shape, math.inf), rule.origin, np.full(shape, math.inf)
            return np.zeros(shape), rule.origin, np.zeros(shape)
        val = np.tensordot(rule.weights, g, axes=(0, 0))
        err = np.zeros(shape)
        if rule.origin:
            resid = np.tensordot(rule.projector, g, axes=(1, 0))
            err = np.max(np.abs(resid), axis=0) * rule.scale
        return val, rule.origin, err

    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(cell_sum, cells))
    else:
        parts = [cell_sum(k) for k in cells]
    singular = np.zeros(shape)
    regular = np.zeros(shape)
    err = np.zeros(shape)
    # fixed summation order keeps results independent of the worker count
    for val, origin, e in parts:
        if origin:
            singular = singular + val
        else:
            regular = regular + val
        err = err + e
    total = singular + regular
    if not shape:
        return float(total), float(singular), float(regular), float(err)
    return total, singular, regular, err


def _maybe_raise(rep: FormReport, quad_tol: Optional[float]) -> FormReport:
    if quad_tol is not None and rep.quadrature_error_estimate > quad_tol * max(1.0, abs(rep.value)):
        raise QuadratureError(
            f"quadrature error estimate {rep.quadrature_error_estimate:.3e} exceeds quad_tol={quad_tol:.1e}"
        )
    return rep


def eval_form_inner(
    f: KernelFamily,
    alpha: float,
    u: GridFunction,
    v: GridFunction,
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    quad_tol: Optional[float] = None,
) -> FormReport:
    """Inner form ``E_Omega(u, v) = iint_{Omega x Omega} du dv J^alpha``."""
    _check_pair(u, v)
    U = u.full()
    V = U if v is u else v.full()
    tot, sing, reg, err = nonlocal_integral(f, alpha, u.domain, U, V, "inner", u.basis, jobs, cfg)
    rep = FormReport(tot, err, 0.0, sing, reg, tot, 0.0, float(alpha), "inner")
    return _maybe_raise(rep, quad_tol)


def eval_form_full(
    f: KernelFamily,
    alpha: float,
    u: GridFunction,
    v: GridFunction,
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    quad_tol: Optional[float] = None,
) -> FormReport:
    """Full form ``E = E_Omega + 2 * iint_{Omega x Omega^c}``, truncated to the box."""
    _check_pair(u, v)
    if not (u.has_collar and v.has_collar):
        raise ValueError("the full form needs functions with collar values (not H_nu_on_Omega)")
    dom = u.domain
    U = u.full()
    V = U if v is u else v.full()
    ti, si, ri, ei = nonlocal_integral(f, alpha, dom, U, V, "inner", u.basis, jobs, cfg)
    tc, sc, rc, ec = nonlocal_integral(f, alpha, dom, U, V, "cross", u.basis, jobs, cfg)
    tail = 8.0 * np.max(np.abs(U)) * np.max(np.abs(V)) * dom.measure * dom.kernel_tail(f, alpha)
    rep = FormReport(ti + 2 * tc, ei + 2 * ec, float(tail), si + 2 * sc, ri + 2 * rc, ti, tc, float(alpha), "full")
    return _maybe_raise(rep, quad_tol)


# ------------------------------------------------------- norms/seminorms


@lru_cache(maxsize=64)
def _nu_kernel(parent: MollifierFamily) -> KernelFamily:
    return KernelFamily("nu", parent)


def _as_kernel(nu):
    if isinstance(nu, NuAlpha):
        return _nu_kernel(nu.parent), nu.alpha
    if isinstance(nu, tuple) and len(nu) == 2 and isinstance(nu[0], KernelFamily):
        return nu
    raise TypeError("pass a NuAlpha or a (KernelFamily, alpha) pair")


def seminorm_H_nu(nu, u: GridFunction, **kw) -> float:
    """``[u]_{H_nu(Omega)}``, the square root of the inner form with kernel ``nu``."""
    k, a = _as_kernel(nu)
    return math.sqrt(max(eval_form_inner(k, a, u, u, **kw).value, 0.0))


def norm_H_nu(nu, u: GridFunction, **kw) -> float:
    return math.sqrt(u.l2_norm("omega") ** 2 + seminorm_H_nu(nu, u, **kw) ** 2)


def seminorm_V_nu(nu, u: GridFunction, **kw) -> float:
    """``[u]_{V_nu}`` over ``(Omega^c x Omega^c)^c`` (complement truncated to the box)."""
    k, a = _as_kernel(nu)
    return math.sqrt(max(eval_form_full(k, a, u, u, **kw).value, 0.0))


def norm_V_nu_full(nu, u: GridFunction, **kw) -> float:
    """Seminorm plus the L2 norm over the whole truncation box."""
    return math.sqrt(u.l2_norm("truncation") ** 2 + seminorm_V_nu(nu, u, **kw) ** 2)


def norm_V_nu_triple(nu, u: GridFunction, **kw) -> float:
    """Seminorm plus the L2 norm over Omega only."""
    return math.sqrt(u.l2_norm("omega") ** 2 + seminorm_V_nu(nu, u, **kw) ** 2)


# ------------------------------------------------------- diffusion matrix


@dataclass(frozen=True)
class DiffusionMatrix:
    """Matrix ``A`` obtained from the second moments of ``J^alpha`` on ``B_delta``.

    ``matrices`` are the per-alpha moment matrices, ``last`` the final
    iterate and ``entries`` the limit ``alpha -> 2`` obtained by polynomial
    extrapolation in ``2 - alpha`` through the whole sweep.  ``converged``
    reports whether the last two iterates agree to ``matrix_tol``.
    """

    entries: np.ndarray
    last: np.ndarray
    delta: float
    alphas: tuple
    matrices: tuple
    converged: bool
    matrix_tol: float
    cauchy_gaps: tuple
    delta_check: Optional[float] = None
    delta_agreement: Optional[float] = None
    extrapolated: bool = True

    @property
    def delta_independent(self) -> Optional[bool]:
        if self.delta_agreement is None:
            return None
        return bool(self.delta_agreement <= self.matrix_tol)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __array__(self, dtype=None):
        return np.asarray(self.entries, dtype=dtype)


def _graded_rule(delta: float, bps, n: int = 16, ratio: float = 0.5, levels: int = 60):
    """Gauss rule on ``(0, delta)`` graded geometrically towards 0."""
    edges = {delta * ratio**k for k in range(levels)} | {b for b in bps if 0 < b < delta} | {delta}
    edges = np.array(sorted(edges))
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    pts = np.concatenate([[0.0], edges])
    r = np.concatenate([a + x * (b - a) for a, b in zip(pts[:-1], pts[1:])])
    wr = np.concatenate([w * (b - a) for a, b in zip(pts[:-1], pts[1:])])
    return r, wr


def _moment_matrix(f: KernelFamily, alpha: float, x, delta: float, n_theta: int = 128) -> np.ndarray:
    d = f.d
    prof = f.profile(alpha)
    m2 = prof.moment(d + 1, 0.0, delta)
    if f.kind != "perturbed":
        return sphere_area(d) / d * m2 * np.eye(d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mod = f.modulation
    r, wr = _graded_rule(delta, prof.breakpoints)
    nu_r = prof(r)
    tiny = 1e-12 * delta
    if d == 1:
        out = 0.0
        for s in (1.0, -1.0):
            c0 = float(np.asarray(mod(x[0], x[0] + s * tiny)))
            c = np.asarray(mod(np.full_like(r, x[0]), x[0] + s * r), dtype=float)
            out += c0 * m2 + np.sum(wr * r**2 * nu_r * (c - c0))
        return np.array([[out]])
    th = (np.arange(n_theta) + 0.5) * (2 * math.pi / n_theta)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    outer = dirs[:, :, None] * dirs[:, None, :]
    c0 = np.asarray(mod(np.broadcast_to(x, dirs.shape), x + tiny * dirs), dtype=float)
    A = np.einsum("t,tij->ij", c0, outer) * (2 * math.pi / n_theta) * m2
    for i, e in enumerate(dirs):
        pts = x + r[:, None] * e
        c = np.asarray(mod(np.broadcast_to(x, pts.shape), pts), dtype=float)
        A += outer[i] * (2 * math.pi / n_theta) * np.sum(wr * r**3 * nu_r * (c - c0[i]))
    return 0.5 * (A + A.T)


def _extrapolate(eps: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Neville extrapolation of ``mats(eps)`` to ``eps = 0``."""
    P = [m.copy() for m in mats]
    n = len(eps)
    for k in range(1, n):
        for i in range(n - k):
            P[i] = (eps[i + k] * P[i] - eps[i] * P[i + 1]) / (eps[i + k] - eps[i])
    return P[0]


def diffusion_matrix(
    f: KernelFamily,
    x,
    delta: float,
    alpha_sweep: Sequence[float],
    matrix_tol: float = 1e-3,
    delta_check: Optional[float] = None,
    extrapolate: bool = True,
) -> DiffusionMatrix:
    """Matrix ``A(x)`` from ``int_{B_delta} h_i h_j J^alpha(x, x+h) dh`` along a sweep.

    ``delta_check`` (default ``delta / 2``; pass ``0`` to skip) repeats the
    computation at a second radius and records the max-norm difference of
    the two results.  The extrapolation uses the trailing part of
    the sweep over which no profile breakpoint crosses ``delta`` (a
    kernel whose support shrinks with ``2 - alpha`` has moments that are
    not smooth in ``alpha`` across such a crossing).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    alphas = tuple(float(a) for a in alpha_sweep)
    if len(alphas) == 0 or np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha_sweep must be non-empty and strictly increasing")
    mats = np.array([_moment_matrix(f, a, x, delta) for a in alphas])
    gaps = tuple(float(np.max(np.abs(b - a))) for a, b in zip(mats[:-1], mats[1:]))
    converged = bool(gaps and gaps[-1] < matrix_tol)
    last = mats[-1]
    inside = [int(np.sum(f.profile(a).breakpoints < delta)) for a in alphas]
    k = 1
    while k < len(alphas) and inside[-k - 1] == inside[-1]:
        k += 1
    if extrapolate and k > 1:
        entries = _extrapolate(2.0 - np.array(alphas[-k:]), mats[-k:])
    else:
        entries = last
    entries = 0.5 * (entries + entries.T)
    dchk, agree = None, None
    if delta_check is None:
        delta_check = delta / 2
    if delta_check:
        other = diffusion_matrix(f, x, delta_check, alphas, matrix_tol, delta_check=0, extrapolate=extrapolate)
        dchk, agree = float(delta_check), float(np.max(np.abs(other.entries - entries)))
    return DiffusionMatrix(
        entries, last, float(delta), alphas, tuple(mats), converged, float(matrix_tol), gaps, dchk, agree, extrapolate
    )


# ------------------------------------------------------------ local form


def eval_form_local(A, u: GridFunction, v: GridFunction) -> float:
    """``int_Omega <A grad u, grad v> dx`` for a constant matrix ``A``."""
    _check_pair(u, v)
    dom = u.domain
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape == (1, 1) and dom.dim > 1:
        A = A[0, 0] * np.eye(dom.dim)
    if A.shape != (dom.dim, dom.dim):
        raise ValueError(f"A must be {dom.dim}x{dom.dim}")
    gu = cell_gradients(dom, u.full())
    gv = gu if v is u else cell_gradients(dom, v.full())
    _, gw = _cell_gauss(dom)
    return float(dom.cell_volume * np.einsum("cgi,ij,cgj,g->", gu, A, gv, gw))


# ------------------------------------------------------- concentration


def concentration_integral(family: MollifierFamily, beta: float, R: float, eps_sweep: Sequence[float]) -> list:
    """``int_{|x| <= R} |x|^beta rho_eps(x) dx`` for each ``eps``."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    om = sphere_area(family.d)
    return [om * family.profile(e).moment(beta + family.d - 1, 0.0, R) for e in eps_sweep]


# ------------------------------------------------------------- smoothing


def bump(z: np.ndarray) -> np.ndarray:
    """Unnormalised C^inf bump ``exp(-1 / (1 - |z|^2))`` on the unit ball."""
    z = np.asarray(z, dtype=float)
    s = 1.0 - z * z
    out = np.zeros_like(z)
    inside = s > 0
    out[inside] = np.exp(-1.0 / s[inside])
    return out


@lru_cache(maxsize=4)
def _bump_mass(d: int) -> float:
    if d == 1:
        val, _ = integrate.quad(lambda t: float(bump(np.array(t))), -1, 1, epsabs=0, epsrel=1e-13)
        return val
    val, _ = integrate.quad(lambda r: r * float(bump(np.array(r))), 0, 1, epsabs=0, epsrel=1e-13)
    return 2 * math.pi * val


def _split_rule(cuts: np.ndarray, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    edges = np.unique(np.concatenate([[-1.0, 1.0], cuts[(cuts > -1) & (cuts < 1)]]))
    pts = np.concatenate([a + x * (b - a) for a, b in zip(edges[:-1], edges[1:])])
    wts = np.concatenate([w * (b - a) for a, b in zip(edges[:-1], edges[1:])])
    return pts, wts


def smooth_approximation(
    u: GridFunction, eps: float, direction=None, tau: float = 2.0, n_gauss: int = 12
) -> GridFunction:
    """Translate-and-mollify ``v(x) = int eta_eps(z) u(x + tau eps e - z) dz``.

    ``eta`` is the normalised C^inf bump supported in the unit ball.  The
    convolution is evaluated at the nodes (linear basis) or cell centres
    (constant basis) with Gauss rules split at the lattice lines, so the
    piecewise structure of ``u`` is integrated without loss.  ``u`` is
    taken as 0 outside the truncation box; the window must stay inside the
    box for every point of the closure of Omega.
    """
    if not u.has_collar:
        raise ValueError("smoothing needs collar values (V_nu_* functions)")
    dom = u.domain
    d = dom.dim
    if direction is None:
        e = np.ones(d) / math.sqrt(d)
    else:
        e = np.atleast_1d(np.asarray(direction, dtype=float))
        if e.shape != (d,) or abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector of the domain's dimension")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if (tau + 1.0) * eps >= dom.collar_width:
        raise ValueError("shift exits the truncation box: reduce eps or tau, or enlarge r_trunc")
    targets = dom.node_coords if u.basis == "linear" else dom.cell_centers
    shift = tau * eps * e
    axes = []
    for i in range(d):
        D = dom.spacing[i]
        off = 0.0 if u.basis == "linear" else 0.5 * D
        # discontinuities of u (or of its derivative) in the variable w
        m = np.arange(-math.ceil(eps / D) - 2 - math.ceil(abs(shift[i]) / D), math.ceil(eps / D) + 3 + math.ceil(abs(shift[i]) / D))
        cuts = (shift[i] + off + m * D) / eps
        cuts = np.concatenate([cuts, (shift[i] - off + m * D) / eps])
        axes.append(_split_rule(cuts, n_gauss))
    if d == 1:
        w_pts = axes[0][0][:, None]
        w_wts = axes[0][1]
    else:
        W0, W1 = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
        Q0, Q1 = np.meshgrid(axes[0][1], axes[1][1], indexing="ij")
        w_pts = np.stack([W0.ravel(), W1.ravel()], axis=1)
        w_wts = (Q0 * Q1).ravel()
    eta = bump(np.linalg.norm(w_pts, axis=1)) * w_wts / _bump_mass(d)
    keep = eta > 0
    w_pts, eta = w_pts[keep], eta[keep]
    eta = eta / eta.sum()  # constants are reproduced exactly
    full = u.full()
    vals = np.zeros(len(targets))
    chunk = max(1, 200000 // len(eta))
    for s in range(0, len(targets), chunk):
        X = targets[s : s + chunk]
        P = (X[:, None, :] + shift - eps * w_pts[None, :, :]).reshape(-1, d)
        idx, bw = basis_at(dom, P, u.basis)
        inside = np.all((P >= dom.trunc_lo) & (P <= dom.trunc_hi), axis=1)
        uv = np.where(inside, np.sum(full[idx] * bw, axis=1), 0.0).reshape(len(X), -1)
        vals[s : s + chunk] = uv @ eta
    return GridFunction(dom, vals, "V_nu_full", u.basis)
