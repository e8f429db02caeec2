"""Increment-space quadrature for double integrals over lattice regions.

Every form handled by the package can be written as

    int j(|h|) G(h) dh,   G(h) = int_{X(h)} c(x, x+h) du(x, h) dv(x, h) dx,

with ``du(x, h) = u(x+h) - u(x)``.  For lattice functions (P1/Q1 or
piecewise constant) on a uniform grid and regions made of lattice cells,
``G`` is a polynomial on every increment cell ``[k D, (k+1) D]`` of degree
at most 3 per axis (1 for the constant basis).  It is sampled exactly with
composite Gauss rules in ``x``, and integrated against ``j`` with product
weights ``w_k = int_cell j l_k``.  On the cells touching ``h = 0`` the
interpolant is restricted to monomials of the right vanishing order and the
weights use exact radial moments of ``j``, which absorbs the singularity.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .domains import Domain, basis_at
from .radial import RadialProfile

REGIONS = ("inner", "cross", "all")


@dataclass(frozen=True)
class QuadratureConfig:
    """Orders of the fixed rules used by the engine."""

    n_regular: int = 20  # Gauss points per radial/1D piece on regular cells
    n_theta: int = 24  # Gauss points per angular piece
    n_origin_theta: int = 32  # angular points for origin-cell moments


DEFAULT_CONFIG = QuadratureConfig()


@lru_cache(maxsize=64)
def _gauss01_cached(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss01(n: int):
    return _gauss01_cached(n)


def _lagrange(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lagrange basis on ``nodes`` evaluated at ``t``: shape (len(t), len(nodes))."""
    out = np.ones((len(t), len(nodes)))
    for j, xj in enumerate(nodes):
        for l, xl in enumerate(nodes):
            if l != j:
                out[:, j] *= (t - xl) / (xj - xl)
    return out


@dataclass
class CellRule:
    nodes: np.ndarray  # (K, d) increments
    weights: np.ndarray  # (K,)
    origin: bool
    projector: Optional[np.ndarray] = None  # residual projector of the fit
    scale: float = 0.0  # kernel mass of the lowest fitted order


class IncrementRules:
    """Product-integration rules for one radial profile on one lattice."""

    def __init__(self, prof: RadialProfile, spacing: np.ndarray, basis: str, cfg: QuadratureConfig = DEFAULT_CONFIG):
        self.prof = prof
        self.spacing = np.asarray(spacing, dtype=float)
        self.d = len(self.spacing)
        self.basis = basis
        self.cfg = cfg
        self.m = 4 if basis == "linear" else 2  # interpolation points per axis
        self.min_order = 2 if basis == "linear" else 1
        self.support = prof.support_radius
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._bps = prof.breakpoints

    # -- cell geometry ---------------------------------------------------
    def cell_bounds(self, k):
        lo = np.asarray(k, dtype=float) * self.spacing
        return lo, lo + self.spacing

    def min_radius(self, k) -> float:
        lo, hi = self.cell_bounds(k)
        near = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        return float(np.linalg.norm(near))

    def rule(self, k) -> CellRule:
        k = tuple(int(v) for v in k)
        r = self._cache.get(k)
        if r is None:
            r = self._build(k)
            with self._lock:
                self._cache[k] = r
        return r

    def _build(self, k) -> CellRule:
        origin = all(v in (-1, 0) for v in k)
        return self._origin_rule(k) if origin else self._regular_rule(k)

    # -- regular cells ---------------------------------------------------
    def _regular_rule(self, k) -> CellRule:
        lo, hi = self.cell_bounds(k)
        t, _ = _gauss01(self.m)
        if self.d == 1:
            nodes = (lo + t * self.spacing)[:, None]
            pts, wts = self._radial_1d(lo[0], hi[0])
            L = _lagrange(t, (pts - lo[0]) / self.spacing[0])
            weights = (wts * self.prof(np.abs(pts))) @ L
            return CellRule(nodes, weights, False)
        grid = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
        nodes = lo + grid * self.spacing
        pts, wts = self._polar_2d(lo, hi)
        s = (pts - lo) / self.spacing
        L0, L1 = _lagrange(t, s[:, 0]), _lagrange(t, s[:, 1])
        L = (L0[:, :, None] * L1[:, None, :]).reshape(len(pts), -1)
        weights = (wts * self.prof(np.linalg.norm(pts, axis=1))) @ L
        return CellRule(nodes, weights, False)

    def _radial_1d(self, lo: float, hi: float):
        a, b = sorted((abs(lo), abs(hi)))
        sign = 1.0 if hi > 0 else -1.0
        edges = np.unique(np.concatenate([[a, b], self._bps[(self._bps > a) & (self._bps < b)]]))
        x, w = _gauss01(self.cfg.n_regular)
        pts = np.concatenate([e0 + x * (e1 - e0) for e0, e1 in zip(edges[:-1], edges[1:])])
        wts = np.concatenate([w * (e1 - e0) for e0, e1 in zip(edges[:-1], edges[1:])])
        return sign * pts, wts

    def _polar_2d(self, lo: np.ndarray, hi: np.ndarray):
        """Gauss points in polar coordinates covering a cell away from 0."""
        center = 0.5 * (lo + hi)
        thc = math.atan2(center[1], center[0])

        def rel(th):
            return (th - thc + math.pi) % (2 * math.pi) - math.pi

        corners = [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])]
        ang = [rel(math.atan2(c[1], c[0])) for c in corners]
        tmin, tmax = min(ang), max(ang)
        splits = set(ang)
        rmin = self.min_radius(tuple(np.round(lo / self.spacing).astype(int)))
        rmax = max(math.hypot(*c) for c in corners)
        bps = [b for b in self._bps if rmin < b < rmax]
        for b in bps:
            for x in (lo[0], hi[0]):
                if b > abs(x):
                    y = math.sqrt(b * b - x * x)
                    for s in (y, -y):
                        if lo[1] <= s <= hi[1]:
                            splits.add(rel(math.atan2(s, x)))
            for y in (lo[1], hi[1]):
                if b > abs(y):
                    x = math.sqrt(b * b - y * y)
                    for s in (x, -x):
                        if lo[0] <= s <= hi[0]:
                            splits.add(rel(math.atan2(y, s)))
        th_edges = np.array(sorted(v for v in splits if tmin <= v <= tmax))
        gt, gw = _gauss01(self.cfg.n_theta)
        gr, grw = _gauss01(self.cfg.n_regular)
        pts, wts = [], []
        for t0, t1 in zip(th_edges[:-1], th_edges[1:]):
            if t1 - t0 < 1e-15:
                continue
            thm = thc + 0.5 * (t0 + t1)
            r_in_m, r_out_m = _ray_box(np.array([thm]), lo, hi)
            inner_bps = [b for b in bps if r_in_m[0] < b < r_out_m[0]]
            th = thc + t0 + gt * (t1 - t0)
            r_in, r_out = _ray_box(th, lo, hi)
            edges = [r_in] + [np.full_like(r_in, b) for b in inner_bps] + [r_out]
            for e0, e1 in zip(edges[:-1], edges[1:]):
                r = e0[:, None] + gr[None, :] * (e1 - e0)[:, None]
                w = (gw * (t1 - t0))[:, None] * grw[None, :] * (e1 - e0)[:, None] * r
                pts.append(np.stack([r * np.cos(th)[:, None], r * np.sin(th)[:, None]], axis=-1).reshape(-1, 2))
                wts.append(w.ravel())
        return np.concatenate(pts), np.concatenate(wts)

    # -- origin cells ----------------------------------------------------
    def _monomials(self):
        m, q = self.m, self.min_order
        if self.d == 1:
            return [(a,) for a in range(q, m)]
        return [(a, b) for a in range(m) for b in range(m) if a + b >= q]

    def _origin_rule(self, k) -> CellRule:
        lo, hi = self.cell_bounds(k)
        signs = np.where(np.asarray(k) < 0, -1.0, 1.0)
        mons = self._monomials()
        base = self._first_quadrant_moments()
        mom = np.array([base[mn] * np.prod(signs ** np.array(mn)) for mn in mons])
        t, _ = _gauss01(self.m + 1)
        if self.d == 1:
            nodes = (lo + t * self.spacing)[:, None]
        else:
            grid = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
            nodes = lo + grid * self.spacing
        scale = np.max(self.spacing)
        V = np.stack([np.prod((nodes / scale) ** np.array(mn), axis=1) for mn in mons], axis=1)
        pinv = np.linalg.pinv(V)
        mom_scaled = mom / np.array([scale ** sum(mn) for mn in mons])
        if np.any(~np.isfinite(mom_scaled)):
            weights = np.full(len(nodes), math.inf)
        else:
            weights = pinv.T @ mom_scaled
        proj = np.eye(len(nodes)) - V @ pinv
        low = [i for i, mn in enumerate(mons) if sum(mn) == self.min_order]
        mass = float(np.sum(np.abs(mom_scaled[low]))) if np.all(np.isfinite(mom_scaled)) else math.inf
        return CellRule(nodes, weights, True, proj, mass)

    def _first_quadrant_moments(self) -> dict:
        """``int_{[0,D1] x [0,D2]} j(|h|) h^a`` for all fitted monomials."""
        key = "__moments__"
        if key in self._cache:
            return self._cache[key]
        mons = self._monomials()
        out = {}
        if self.d == 1:
            D = self.spacing[0]
            for (a,) in mons:
                out[(a,)] = self.prof.moment(a, 0.0, D)
        else:
            D1, D2 = self.spacing
            ts = math.atan2(D2, D1)
            splits = {0.0, ts, math.pi / 2}
            for b in self._bps:
                if b > D1 and math.acos(min(1.0, D1 / b)) < ts:
                    splits.add(math.acos(D1 / b))
                if b > D2 and math.asin(min(1.0, D2 / b)) > ts:
                    splits.add(math.asin(D2 / b))
            edges = sorted(splits)
            gt, gw = _gauss01(self.cfg.n_origin_theta)
            th = np.concatenate([e0 + gt * (e1 - e0) for e0, e1 in zip(edges[:-1], edges[1:])])
            tw = np.concatenate([gw * (e1 - e0) for e0, e1 in zip(edges[:-1], edges[1:])])
            R = np.minimum(D1 / np.maximum(np.cos(th), 1e-300), D2 / np.maximum(np.sin(th), 1e-300))
            radial = {}
            for p in sorted({a + b + 1 for a, b in mons}):
                radial[p] = np.array([self.prof.moment(p, 0.0, float(r)) for r in R])
            for a, b in mons:
                out[(a, b)] = float(np.sum(tw * np.cos(th) ** a * np.sin(th) ** b * radial[a + b + 1]))
        with self._lock:
            self._cache[key] = out
        return out


def _ray_box(th: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Entry and exit radius of rays from 0 through an axis-aligned box."""
    c = np.stack([np.cos(th), np.sin(th)], axis=1)
    r_in = np.zeros(len(th))
    r_out = np.full(len(th), np.inf)
    for i in range(2):
        ci = c[:, i]
        pos, neg = ci > 1e-15, ci < -1e-15
        with np.errstate(divide="ignore"):
            a = np.where(pos, lo[i] / ci, np.where(neg, hi[i] / ci, -np.inf))
            b = np.where(pos, hi[i] / ci, np.where(neg, lo[i] / ci, np.inf))
        r_in = np.maximum(r_in, a)
        r_out = np.minimum(r_out, b)
    return r_in, r_out


# ------------------------------------------------------------------ G(h)


def _axis_points(domain: Domain, axis: int, lo: float, hi: float, shift: float, npts: int):
    """Composite Gauss points on ``[lo, hi]`` split at lattice nodes and nodes - shift."""
    D = domain.spacing[axis]
    o = domain.lattice_origin[axis]
    if hi - lo <= 1e-12 * D:
        return np.empty(0), np.empty(0)
    k0, k1 = math.floor((lo - o) / D), math.ceil((hi - o) / D)
    nodes = o + np.arange(k0, k1 + 1) * D
    # kinks of x -> u(x + shift) sit at the lattice nodes of [lo, hi] + shift
    s0, s1 = math.floor((lo + shift - o) / D), math.ceil((hi + shift - o) / D)
    shifted = o + np.arange(s0, s1 + 1) * D - shift
    cuts = np.concatenate([[lo, hi], nodes, shifted])
    cuts = np.unique(cuts[(cuts >= lo) & (cuts <= hi)])
    keep = np.concatenate([[True], np.diff(cuts) > 1e-12 * D])
    cuts = cuts[keep]
    if cuts[-1] < hi:
        cuts[-1] = hi
    g, w = _gauss01(npts) if npts > 1 else (np.array([0.5]), np.array([1.0]))
    lens = np.diff(cuts)
    pts = (cuts[:-1, None] + lens[:, None] * g[None, :]).ravel()
    wts = (lens[:, None] * w[None, :]).ravel()
    return pts, wts


_BBOX: dict = {}


def _mask_bbox(mask: np.ndarray):
    key = (id(mask), mask.shape)
    hit = _BBOX.get(key)
    if hit is not None and hit[0] is mask:
        return hit[1], hit[2]
    idx = np.argwhere(mask)
    start, stop = idx.min(axis=0), idx.max(axis=0) + 1
    if len(_BBOX) > 256:
        _BBOX.clear()
    _BBOX[key] = (mask, start, stop)
    return start, stop


@dataclass
class DifferenceSample:
    """Quadrature data of ``x -> u(x+h) - u(x)`` over the regions ``X(h)``.

    Points of all increments are stacked; ``seg[p]`` is the increment index
    of point ``p``.
    """

    x: np.ndarray
    q: np.ndarray
    seg: np.ndarray
    n_h: int
    idx_plus: np.ndarray
    w_plus: np.ndarray
    idx_minus: np.ndarray
    w_minus: np.ndarray

    def apply(self, U: np.ndarray) -> np.ndarray:
        """``u(x+h) - u(x)`` at all points, for each column of ``U``.

        Values are taken relative to one corner of the ``x`` cell so that
        constants cancel exactly instead of up to the rounding of the weights.
        """
        ref = U[self.idx_minus[:, 0]]
        if U.ndim == 1:
            return np.einsum("pk,pk->p", U[self.idx_plus] - ref[:, None], self.w_plus) - np.einsum(
                "pk,pk->p", U[self.idx_minus] - ref[:, None], self.w_minus
            )
        return np.einsum("pkm,pk->pm", U[self.idx_plus] - ref[:, None], self.w_plus) - np.einsum(
            "pkm,pk->pm", U[self.idx_minus] - ref[:, None], self.w_minus
        )

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum point values per increment: shape ``(n_h,) + values.shape[1:]``."""
        if values.ndim == 1:
            return np.bincount(self.seg, weights=values, minlength=self.n_h)
        S = sparse.csr_matrix(
            (np.ones(len(self.seg)), (self.seg, np.arange(len(self.seg)))), shape=(self.n_h, len(self.seg))
        )
        return np.asarray(S @ values)

    def operator(self, n_dof: int) -> sparse.csr_matrix:
        """Sparse map from full-lattice coefficients to point differences."""
        P, k = self.idx_plus.shape
        rows = np.repeat(np.arange(P), k)
        data = np.concatenate([self.w_plus.ravel(), -self.w_minus.ravel()])
        cols = np.concatenate([self.idx_plus.ravel(), self.idx_minus.ravel()])
        return sparse.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(P, n_dof))


def difference_sample(
    domain: Domain,
    H: np.ndarray,
    region: str,
    basis: str,
    modulation: Optional[Callable] = None,
    omega_cells: Optional[np.ndarray] = None,
) -> Optional[DifferenceSample]:
    """Exact quadrature of ``X(h) = {x in Omega : x + h in R}`` for each row ``h`` of ``H``.

    ``R`` is Omega (``inner``), the truncation box minus Omega (``cross``)
    or the whole truncation box (``all``).  ``omega_cells`` overrides the
    cell mask of Omega (used for sub-domains on the same lattice).
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    mask = domain.omega_cells if omega_cells is None else omega_cells
    start, stop = _mask_bbox(mask)
    blo = domain.lattice_origin + start * domain.spacing
    bhi = domain.lattice_origin + stop * domain.spacing
    if region == "inner":
        tlo, thi = blo, bhi
    else:
        tlo, thi = domain.trunc_lo, domain.trunc_hi
    npts = 2 if basis == "linear" else 1
    xs, qs, segs = [], [], []
    for j, h in enumerate(H):
        axes = []
        for i in range(domain.dim):
            lo, hi = max(blo[i], tlo[i] - h[i]), min(bhi[i], thi[i] - h[i])
            p, w = _axis_points(domain, i, lo, hi, h[i], npts)
            if len(p) == 0:
                break
            axes.append((p, w))
        else:
            if domain.dim == 1:
                x = axes[0][0][:, None]
                q = axes[0][1]
            else:
                x = np.stack(
                    [np.repeat(axes[0][0], len(axes[1][0])), np.tile(axes[1][0], len(axes[0][0]))], axis=1
                )
                q = np.outer(axes[0][1], axes[1][1]).ravel()
            xs.append(x)
            qs.append(q)
            segs.append(np.full(len(q), j))
    if not xs:
        return None
    x, q, seg = np.concatenate(xs), np.concatenate(qs), np.concatenate(segs)
    y = x + H[seg]
    cell_x, _ = domain.locate(x)
    cell_y, _ = domain.locate(y)
    in_x = mask[tuple(cell_x.T)]
    in_y = mask[tuple(cell_y.T)]
    if region == "inner":
        keep = in_x & in_y
    elif region == "cross":
        keep = in_x & ~in_y
    else:
        keep = in_x
    if not np.any(keep):
        return None
    x, y, q, seg = x[keep], y[keep], q[keep], seg[keep]
    if modulation is not None:
        q = q * modulation(x[:, 0] if domain.dim == 1 else x, y[:, 0] if domain.dim == 1 else y)
    ip, wp = basis_at(domain, y, basis)
    im, wm = basis_at(domain, x, basis)
    return DifferenceSample(x, q, seg, len(H), ip, wp, im, wm)


def increment_cells(domain: Domain, region: str, support: float, rules: IncrementRules, omega_cells=None):
    """Increment-lattice cells that can contribute, in a fixed order."""
    mask = domain.omega_cells if omega_cells is None else omega_cells
    start, stop = _mask_bbox(mask)
    if region == "inner":
        kmin, kmax = -(stop - start), (stop - start) - 1
    else:
        kmin = -stop
        kmax = np.array(domain.cell_shape) - start - 1
    ranges = [range(int(a), int(b) + 1) for a, b in zip(kmin, kmax)]
    cells = []
    for k in np.ndindex(*[len(r) for r in ranges]):
        kk = tuple(r[i] for r, i in zip(ranges, k))
        if rules.min_radius(kk) < support:
            cells.append(kk)
    return cells


# ------------------------------------------------------------- rule cache

_RULES: "OrderedDict[tuple, tuple]" = OrderedDict()
_RULES_LOCK = threading.Lock()


def rules_for(kernel, alpha: float, spacing, basis: str, cfg: QuadratureConfig = DEFAULT_CONFIG) -> IncrementRules:
    key = (id(kernel), float(alpha), tuple(np.asarray(spacing).tolist()), basis, cfg)
    with _RULES_LOCK:
        hit = _RULES.get(key)
        if hit is not None and hit[0] is kernel:
            _RULES.move_to_end(key)
            return hit[1]
    rules = IncrementRules(kernel.profile(alpha), spacing, basis, cfg)
    with _RULES_LOCK:
        _RULES[key] = (kernel, rules)
        while len(_RULES) > 64:
            _RULES.popitem(last=False)
    return rules
