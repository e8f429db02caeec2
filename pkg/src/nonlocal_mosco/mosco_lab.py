"""Galerkin resolvent problems for nonlocal and local forms, and Mosco-type sweeps.

Convergence of the forms is measured through their resolvents on a fixed
lattice: for each ``alpha`` we solve ``E^alpha(u, v) + lam <u, v> = <f, v>``
and compare with the local problem driven by the matched diffusion matrix.

>>> from nonlocal_mosco.domains import build_domain, sample_function
>>> dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 8, "r_trunc": 2})
>>> f = sample_function(dom, lambda x: 0 * x + 1)
>>> prob = VariationalProblem(dom, "H1_zero", f, A=[[1.0]])
>>> u = solve_resolvent(prob)
>>> round(float(u.evaluate([0.5])[0]), 3)
0.113
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from ._quadrature import DEFAULT_CONFIG, QuadratureConfig, difference_sample, increment_cells, rules_for
from .domains import Domain, GridFunction, _cell_gauss, basis_at, l2_inner
from .forms import (
    DiffusionMatrix,
    QuadratureError,
    _fmt,
    diffusion_matrix,
    eval_form_full,
    eval_form_inner,
    eval_form_local,
    nonlocal_integral,
)
from .kernels import KernelFamily, check_condition_E

__all__ = [
    "DEFAULT_ALPHA_SWEEP",
    "PROBLEM_SPACES",
    "SPACE_PAIRS",
    "SolverError",
    "VariationalProblem",
    "AssembledSystem",
    "nonlocal_matrix",
    "local_matrices",
    "assemble",
    "solve_resolvent",
    "MoscoReport",
    "mosco_sweep",
    "LimsupReport",
    "limsup_diagnostic",
    "LiminfReport",
    "liminf_diagnostic",
    "lattice_mollify",
]

DEFAULT_ALPHA_SWEEP = (1.5, 1.9, 1.99, 1.999)
PROBLEM_SPACES = ("H_nu_on_Omega", "V_nu_full", "V_nu_zero_complement", "H1", "H1_zero")
NONLOCAL_SPACES = PROBLEM_SPACES[:3]
# nonlocal space -> local space of the limit problem
SPACE_PAIRS = {
    "dirichlet": ("V_nu_zero_complement", "H1_zero"),
    "neumann_inner": ("H_nu_on_Omega", "H1"),
    "neumann_full": ("V_nu_full", "H1"),
}


class SolverError(RuntimeError):
    """Raised when a system is not SPD or CG does not converge."""


# ------------------------------------------------------------ problems


@dataclass
class VariationalProblem:
    """``E(u, v) + lam <u, v>_Omega = <f, v>_Omega`` on a lattice space.

    The nonlocal side takes ``kernel`` and ``alpha``; the local side
    (``H1`` / ``H1_zero``) takes a constant matrix ``A`` (a
    :class:`DiffusionMatrix` or an array).
    """

    domain: Domain
    space_tag: str
    source: GridFunction
    kernel: Optional[KernelFamily] = None
    alpha: Optional[float] = None
    A: object = None
    lam: float = 1.0
    basis: str = "linear"
    solver_tol: float = 1e-10
    max_iter: Optional[int] = None
    jobs: int = 1
    cfg: QuadratureConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.space_tag not in PROBLEM_SPACES:
            raise ValueError(f"unknown space tag {self.space_tag!r}")
        if not self.lam > 0:
            raise ValueError("the resolvent shift lam must be positive")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")
        if self.source.domain is not self.domain:
            raise ValueError("source lives on a different domain")
        if self.source.basis != self.basis:
            raise ValueError("source and problem use different bases")
        if self.is_nonlocal:
            if self.kernel is None or self.alpha is None:
                raise ValueError(f"{self.space_tag} needs a kernel and alpha")
            if self.kernel.d != self.domain.dim:
                raise ValueError("kernel and domain dimensions differ")
        else:
            if self.A is None:
                raise ValueError(f"{self.space_tag} needs a diffusion matrix A")
            if self.basis != "linear":
                raise ValueError("local problems need the linear basis")

    @property
    def is_nonlocal(self) -> bool:
        return self.space_tag in NONLOCAL_SPACES

    @property
    def A_matrix(self) -> np.ndarray:
        A = self.A.entries if isinstance(self.A, DiffusionMatrix) else self.A
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape == (1, 1) and self.domain.dim > 1:
            A = A[0, 0] * np.eye(self.domain.dim)
        if A.shape != (self.domain.dim,) * 2:
            raise ValueError(f"A must be {self.domain.dim}x{self.domain.dim}")
        return A


@dataclass
class AssembledSystem:
    """Stiffness ``K``, Omega mass ``M`` and load ``b = M f`` on the free DOFs.

    ``dofs`` indexes the full lattice; ``K_cross`` is the single
    ``Omega x Omega^c`` part of ``K`` (zero for inner and local forms).
    """

    problem: VariationalProblem
    dofs: np.ndarray
    K: sparse.csr_matrix
    M: sparse.csr_matrix
    b: np.ndarray
    K_cross: sparse.csr_matrix

    @property
    def system(self) -> sparse.csr_matrix:
        return (self.K + self.problem.lam * self.M).tocsr()

    def to_grid(self, x: np.ndarray) -> GridFunction:
        prob = self.problem
        dom = prob.domain
        n_full = dom.n_nodes if prob.basis == "linear" else dom.n_cells
        full = np.zeros(n_full)
        full[self.dofs] = x
        tag = prob.space_tag
        if tag == "H1_zero":
            tag = "V_nu_zero_complement"
        if tag in ("H1", "H_nu_on_Omega"):
            idx = dom.interior_index if prob.basis == "linear" else dom.omega_cell_index
            return GridFunction(dom, full[idx], "H_nu_on_Omega", prob.basis)
        return GridFunction(dom, full, tag, prob.basis)

    def energy(self, x: np.ndarray) -> float:
        return float(x @ (self.K @ x))

    def cross_energy(self, x: np.ndarray) -> float:
        return float(x @ (self.K_cross @ x))


def nonlocal_matrix(
    kernel: KernelFamily,
    alpha: float,
    domain: Domain,
    region: str,
    basis: str = "linear",
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> sparse.csr_matrix:
    """Full-lattice matrix of the ``region`` integral used by the forms module.

    ``U @ K @ V`` reproduces ``nonlocal_integral(..., U, V, region)`` with
    the same increment rules, so diagonal entries match the forms module
    up to rounding.
    """
    rules = rules_for(kernel, alpha, domain.spacing, basis, cfg)
    cells = increment_cells(domain, region, rules.support, rules)
    mod = kernel.modulation if kernel.kind == "perturbed" else None
    n_full = domain.n_nodes if basis == "linear" else domain.n_cells

    def cell_matrix(k):
        rule = rules.rule(k)
        smp = difference_sample(domain, rule.nodes, region, basis, mod)
        if smp is None:
            return None
        if not np.all(np.isfinite(rule.weights)):
            raise QuadratureError(f"non-finite quadrature weights on increment cell {k}")
        D = smp.operator(n_full)
        c = smp.q * rule.weights[smp.seg]
        return (D.T @ sparse.diags(c) @ D).tocoo()

    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(cell_matrix, cells))
    else:
        parts = [cell_matrix(k) for k in cells]
    parts = [p for p in parts if p is not None]
    if not parts:
        return sparse.csr_matrix((n_full, n_full))
    rows = np.concatenate([p.row for p in parts])
    cols = np.concatenate([p.col for p in parts])
    data = np.concatenate([p.data for p in parts])
    K = sparse.coo_matrix((data, (rows, cols)), shape=(n_full, n_full)).tocsr()
    K.sum_duplicates()
    return K


def local_matrices(domain: Domain, A) -> tuple:
    """Full-lattice P1/Q1 stiffness ``int_Omega A grad phi_i . grad phi_j`` and Omega mass."""
    d = domain.dim
    A = np.atleast_2d(np.asarray(A, dtype=float))
    cells = domain.omega_cell_index
    multi = np.stack(np.unravel_index(cells, domain.cell_shape), axis=1)
    gp, gw = _cell_gauss(domain)
    corners = [np.array(c) for c in np.ndindex(*(2,) * d)]
    nodes = np.stack([np.ravel_multi_index((multi + c).T, domain.node_shape) for c in corners], axis=1)
    vals = np.zeros((len(corners), len(gp)))
    grads = np.zeros((len(corners), len(gp), d))
    for a, c in enumerate(corners):
        vals[a] = np.prod(np.where(c == 1, gp, 1.0 - gp), axis=1)
        for i in range(d):
            g = np.ones(len(gp))
            for j in range(d):
                g = g * ((1.0 if c[j] else -1.0) / domain.spacing[j] if j == i else np.where(c[j] == 1, gp[:, j], 1.0 - gp[:, j]))
            grads[a, :, i] = g
    vol = domain.cell_volume
    k_loc = vol * np.einsum("agi,ij,bgj,g->ab", grads, A, grads, gw)
    m_loc = vol * np.einsum("ag,bg,g->ab", vals, vals, gw)
    rows = np.repeat(nodes, len(corners), axis=1).ravel()
    cols = np.tile(nodes, (1, len(corners))).ravel()
    n = domain.n_nodes
    K = sparse.coo_matrix((np.tile(k_loc.ravel(), len(cells)), (rows, cols)), shape=(n, n)).tocsr()
    M = sparse.coo_matrix((np.tile(m_loc.ravel(), len(cells)), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _mass_matrix(domain: Domain, basis: str) -> sparse.csr_matrix:
    if basis == "constant":
        w = np.zeros(domain.n_cells)
        w[domain.omega_cell_index] = domain.cell_volume
        return sparse.diags(w).tocsr()
    return local_matrices(domain, np.eye(domain.dim))[1]


def _free_dofs(problem: VariationalProblem, K: sparse.csr_matrix) -> np.ndarray:
    dom = problem.domain
    tag = problem.space_tag
    if problem.basis == "constant":
        if tag == "V_nu_full":
            reach = np.flatnonzero(K.diagonal() > 0)
            return np.union1d(dom.omega_cell_index, reach)
        return np.asarray(dom.omega_cell_index)
    if tag in ("V_nu_zero_complement", "H1_zero"):
        return np.asarray(dom.open_index)
    if tag == "V_nu_full":
        # collar hats out of the kernel's reach carry no energy and no mass
        reach = np.flatnonzero(K.diagonal() > 0)
        return np.union1d(dom.interior_index, reach)
    return np.asarray(dom.interior_index)


def assemble(problem: VariationalProblem) -> AssembledSystem:
    """Restrict the full-lattice matrices of ``problem`` to its free DOFs."""
    dom = problem.domain
    M_full = _mass_matrix(dom, problem.basis)
    if problem.is_nonlocal:
        args = (problem.kernel, problem.alpha, dom)
        kw = dict(basis=problem.basis, jobs=problem.jobs, cfg=problem.cfg)
        K_full = nonlocal_matrix(*args, "inner", **kw)
        if problem.space_tag == "H_nu_on_Omega":
            Kc_full = sparse.csr_matrix(K_full.shape)
        else:
            Kc_full = nonlocal_matrix(*args, "cross", **kw)
            K_full = K_full + 2.0 * Kc_full
    else:
        K_full, _ = local_matrices(dom, problem.A_matrix)
        Kc_full = sparse.csr_matrix(K_full.shape)
    dofs = _free_dofs(problem, K_full)
    K = K_full[dofs][:, dofs].tocsr()
    K = (0.5 * (K + K.T)).tocsr()
    M = M_full[dofs][:, dofs].tocsr()
    b = (M_full @ problem.source.full())[dofs]
    Kc = Kc_full[dofs][:, dofs].tocsr()
    return AssembledSystem(problem, dofs, K, M, b, Kc)


def _check_spd(S: sparse.csr_matrix) -> None:
    if S.shape[0] == 0:
        return
    diag = S.diagonal()
    if np.any(diag <= 0):
        i = int(np.argmin(diag))
        raise SolverError(f"system not SPD: diagonal entry {i} is {diag[i]:.3e}")
    if S.shape[0] <= 4000:
        try:
            np.linalg.cholesky(S.toarray())
        except np.linalg.LinAlgError as exc:
            raise SolverError("system not SPD: Cholesky factorisation failed") from exc


def solve_resolvent(problem: VariationalProblem, system: Optional[AssembledSystem] = None) -> GridFunction:
    """Solve ``(K + lam M) u = M f`` by Jacobi-preconditioned CG."""
    sysm = system or assemble(problem)
    S = sysm.system
    _check_spd(S)
    x = _cg(S, sysm.b, problem.solver_tol, problem.max_iter)
    return sysm.to_grid(x)


def _cg(S, b, tol, max_iter):
    n = S.shape[0]
    if n == 0 or not np.any(b):
        return np.zeros(n)
    Pinv = sparse.diags(1.0 / S.diagonal())
    x, info = spla.cg(S, b, rtol=tol, atol=0.0, maxiter=max_iter or 20 * n, M=Pinv)
    if info != 0:
        res = np.linalg.norm(S @ x - b) / np.linalg.norm(b)
        raise SolverError(f"CG did not converge (info={info}, relative residual {res:.3e})")
    return x


# --------------------------------------------------------- mosco sweep


def _decreasing(values: Sequence[float]) -> list:
    out = [True]
    for a, b in zip(values[:-1], values[1:]):
        out.append(bool(b < a or (a == 0.0 and b == 0.0)))
    return out


def _l2_distance(u: GridFunction, v: GridFunction) -> float:
    a = GridFunction(u.domain, u.full(), "V_nu_full", u.basis)
    b = GridFunction(v.domain, v.full(), "V_nu_full", v.basis)
    diff = a - b
    return math.sqrt(max(l2_inner(diff, diff, "omega"), 0.0))


@dataclass
class MoscoReport:
    """Resolvent comparison along an alpha sweep."""

    alphas: tuple
    pair: str
    solutions: list
    local_solution: GridFunction
    l2_distances: list
    nonlocal_energies: list
    local_energy: float
    cross_terms: list
    mosco_tol: float
    A: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    error: Optional[str] = None

    CSV_COLUMNS = ("alpha", "l2_distance", "nonlocal_energy", "local_energy", "cross_term", "pass_flags")

    @property
    def decreasing_flags(self) -> list:
        return _decreasing(self.l2_distances)

    @property
    def within_tol(self) -> bool:
        return bool(self.l2_distances) and self.l2_distances[-1] < self.mosco_tol

    @property
    def passed(self) -> bool:
        complete = self.error is None and len(self.l2_distances) == len(self.alphas)
        return complete and all(self.decreasing_flags) and self.within_tol

    def csv_rows(self) -> list:
        rows = []
        flags = self.decreasing_flags
        for i, a in enumerate(self.alphas[: len(self.l2_distances)]):
            f = ["decreasing" if flags[i] else "not_decreasing"]
            f.append("within_tol" if self.l2_distances[i] < self.mosco_tol else "above_tol")
            rows.append(
                [
                    _fmt(a),
                    _fmt(self.l2_distances[i]),
                    _fmt(self.nonlocal_energies[i]),
                    _fmt(self.local_energy),
                    _fmt(self.cross_terms[i]),
                    "|".join(f),
                ]
            )
        return rows

    def summary(self) -> dict:
        return {
            "pair": self.pair,
            "alphas": list(self.alphas),
            "l2_distances": list(self.l2_distances),
            "distances_decreasing": all(self.decreasing_flags),
            "final_distance": self.l2_distances[-1] if self.l2_distances else None,
            "mosco_tol": self.mosco_tol,
            "passed": self.passed,
            "error": self.error,
            "A": np.asarray(self.A).tolist(),
            **self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def mosco_sweep(
    f_source: GridFunction,
    kernel: KernelFamily,
    alpha_sweep: Sequence[float] = DEFAULT_ALPHA_SWEEP,
    pair: str = "dirichlet",
    lam: float = 1.0,
    A=None,
    mosco_tol: float = 5e-3,
    solver_tol: float = 1e-10,
    delta: float = 0.5,
    matrix_tol: float = 1e-3,
    check_kernel: bool = True,
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> MoscoReport:
    """Compare nonlocal resolvents with the local one for each ``alpha``.

    ``A`` defaults to the extrapolated diffusion matrix of ``kernel`` at
    the centre of Omega's bounding box.  A failed solve stops the sweep
    and the partial report carries the reason in ``error``.
    """
    if pair not in SPACE_PAIRS:
        raise ValueError(f"unknown space pair {pair!r}; choose from {sorted(SPACE_PAIRS)}")
    alphas = tuple(float(a) for a in alpha_sweep)
    if not alphas or np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha_sweep must be non-empty and strictly increasing")
    dom = f_source.domain
    diag = {}
    if check_kernel:
        bad = [a for a in alphas if not check_condition_E(kernel, a).holds]
        if bad:
            raise ValueError(f"kernel fails condition (E) at alpha={bad[0]}")
    if A is None:
        x0 = 0.5 * (dom.omega_lo + dom.omega_hi)
        dm = diffusion_matrix(kernel, x0, delta, alphas, matrix_tol)
        diag.update(diffusion_converged=dm.converged, diffusion_delta_agreement=dm.delta_agreement)
        A = dm.entries
    A = np.atleast_2d(np.asarray(A.entries if isinstance(A, DiffusionMatrix) else A, dtype=float))
    nl_tag, loc_tag = SPACE_PAIRS[pair]
    f_full = GridFunction(dom, f_source.full(), "V_nu_full", f_source.basis)
    loc_prob = VariationalProblem(dom, loc_tag, f_full, A=A, lam=lam, solver_tol=solver_tol)
    loc_sys = assemble(loc_prob)
    u_loc = solve_resolvent(loc_prob, loc_sys)
    x_loc = u_loc.full()[loc_sys.dofs]
    rep = MoscoReport(alphas, pair, [], u_loc, [], [], loc_sys.energy(x_loc), [], float(mosco_tol), A, diag)
    for a in alphas:
        prob = VariationalProblem(
            dom, nl_tag, f_full, kernel=kernel, alpha=a, lam=lam, solver_tol=solver_tol, jobs=jobs, cfg=cfg
        )
        try:
            sysm = assemble(prob)
            u = solve_resolvent(prob, sysm)
        except (SolverError, QuadratureError) as exc:
            rep.error = f"alpha={a}: {exc}"
            break
        x = u.full()[sysm.dofs]
        rep.solutions.append(u)
        rep.l2_distances.append(_l2_distance(u, u_loc))
        rep.nonlocal_energies.append(sysm.energy(x))
        rep.cross_terms.append(sysm.cross_energy(x))
    return rep


# ---------------------------------------------------- limsup / liminf


@dataclass
class LimsupReport:
    """Constant recovery sequence ``u_alpha = u``: energies, gaps and cross terms."""

    alphas: tuple
    energies: list
    inner_energies: list
    cross_terms: list
    local_energy: float
    gaps: list
    A: np.ndarray

    @property
    def gaps_decreasing(self) -> bool:
        return all(_decreasing(self.gaps))

    @property
    def cross_decreasing(self) -> bool:
        return all(_decreasing(self.cross_terms))

    def summary(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "energies": list(self.energies),
            "local_energy": self.local_energy,
            "gaps": list(self.gaps),
            "cross_terms": list(self.cross_terms),
            "gaps_decreasing": self.gaps_decreasing,
            "cross_decreasing": self.cross_decreasing,
        }


def _default_A(kernel, dom, alphas, delta=0.5):
    x0 = 0.5 * (dom.omega_lo + dom.omega_hi)
    return diffusion_matrix(kernel, x0, delta, alphas, delta_check=0).entries


def limsup_diagnostic(
    u: GridFunction,
    kernel: KernelFamily,
    alpha_sweep: Sequence[float] = DEFAULT_ALPHA_SWEEP,
    A=None,
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> LimsupReport:
    """``E^alpha(u, u)`` against ``E^A(u, u)`` for the constant sequence.

    Functions with collar values use the full form (the cross term is
    recorded separately); ``H_nu_on_Omega`` functions use the inner form.
    """
    alphas = tuple(float(a) for a in alpha_sweep)
    dom = u.domain
    A = _default_A(kernel, dom, alphas) if A is None else np.asarray(getattr(A, "entries", A), dtype=float)
    loc = eval_form_local(A, u, u)
    energies, inner, cross, gaps = [], [], [], []
    for a in alphas:
        if u.has_collar:
            rep = eval_form_full(kernel, a, u, u, jobs=jobs, cfg=cfg)
        else:
            rep = eval_form_inner(kernel, a, u, u, jobs=jobs, cfg=cfg)
        energies.append(rep.value)
        inner.append(rep.inner)
        cross.append(rep.cross)
        gaps.append(abs(rep.value - loc))
    return LimsupReport(alphas, energies, inner, cross, loc, gaps, np.atleast_2d(A))


def lattice_mollify(u: GridFunction, m: int) -> GridFunction:
    """Average of lattice shifts ``u(. - k spacing)``, ``|k spacing| < m spacing``, with bump weights.

    Each shift maps lattice functions to lattice functions, so the result
    is an exact convex combination of translates of ``u``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    from .forms import bump

    dom = u.domain
    shape = dom.node_shape if u.basis == "linear" else dom.cell_shape
    grid = u.full().reshape(shape)
    eps = m * float(np.min(dom.spacing))
    ks = [np.array(k) - m for k in np.ndindex(*(2 * m + 1,) * dom.dim)]
    w = np.array([float(bump(np.array(np.linalg.norm(k * dom.spacing) / eps))) for k in ks])
    keep = w > 0
    ks, w = [k for k, kp in zip(ks, keep) if kp], w[keep] / w[keep].sum()
    out = np.zeros(shape)
    for k, wk in zip(ks, w):
        src = tuple(slice(max(0, -s), n - max(0, s)) for s, n in zip(k, shape))
        dst = tuple(slice(max(0, s), n - max(0, -s)) for s, n in zip(k, shape))
        out[dst] += wk * grid[src]
    return GridFunction(dom, out.ravel(), "V_nu_full", u.basis)


@dataclass
class LiminfReport:
    """Liminf inequality along a sequence plus the mollified-shift comparison."""

    alphas: tuple
    l2_distances: list
    energies: list
    local_energy: float
    tail_min: float
    liminf_tol: float
    mollified_energies: list
    jensen_margin: list
    shrink_cells: int

    @property
    def converging(self) -> bool:
        return all(_decreasing(self.l2_distances))

    @property
    def liminf_holds(self) -> bool:
        return self.local_energy <= self.tail_min + self.liminf_tol

    @property
    def jensen_holds(self) -> bool:
        return all(m >= 0 for m in self.jensen_margin)

    @property
    def passed(self) -> bool:
        return self.liminf_holds and self.jensen_holds

    def summary(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "l2_distances": list(self.l2_distances),
            "energies": list(self.energies),
            "local_energy": self.local_energy,
            "tail_min": self.tail_min,
            "liminf_tol": self.liminf_tol,
            "liminf_holds": self.liminf_holds,
            "mollified_energies": list(self.mollified_energies),
            "jensen_margin": list(self.jensen_margin),
            "jensen_holds": self.jensen_holds,
            "passed": self.passed,
        }


def liminf_diagnostic(
    u_sequence: Sequence[GridFunction],
    u_limit: GridFunction,
    kernel: KernelFamily,
    alpha_sweep: Sequence[float] = DEFAULT_ALPHA_SWEEP,
    A=None,
    liminf_tol: float = 1e-3,
    tail: Optional[int] = None,
    shrink_cells: int = 1,
    jobs: int = 1,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> LiminfReport:
    """Check ``E^A(u) <= liminf E^alpha_Omega(u_n)`` and the mollified-shift inequality.

    The liminf is read as the minimum over the last ``tail`` entries
    (default: the second half of the sweep).  For each ``alpha`` the
    lattice mollification of ``u_n`` with radius ``shrink_cells`` cells
    is compared, on Omega shrunk by that many cells, with the raw inner
    energy of ``u_n``; the recorded margin subtracts the quadrature error
    estimates, so a negative value is a genuine violation.
    """
    alphas = tuple(float(a) for a in alpha_sweep)
    if len(u_sequence) != len(alphas):
        raise ValueError(f"sequence has {len(u_sequence)} entries but the sweep has {len(alphas)}")
    dom = u_limit.domain
    if any(v.domain is not dom for v in u_sequence):
        raise ValueError("all functions must live on the limit's domain")
    A = _default_A(kernel, dom, alphas) if A is None else np.asarray(getattr(A, "entries", A), dtype=float)
    loc = eval_form_local(A, u_limit, u_limit)
    sub = dom.shrink(shrink_cells)
    dists, energies, moll, margin = [], [], [], []
    for a, un in zip(alphas, u_sequence):
        dists.append(_l2_distance(un, u_limit))
        U = un.full()
        e, _, _, err = nonlocal_integral(kernel, a, dom, U, U, "inner", un.basis, jobs, cfg)
        V = lattice_mollify(un, shrink_cells).full()
        em, _, _, errm = nonlocal_integral(kernel, a, dom, V, V, "inner", un.basis, jobs, cfg, omega_cells=sub.omega_cells)
        energies.append(e)
        moll.append(em)
        margin.append(e - em + err + errm)
    k = tail if tail is not None else max(1, len(alphas) // 2)
    return LiminfReport(
        alphas, dists, energies, loc, float(min(energies[-k:])), float(liminf_tol), moll, margin, shrink_cells
    )
