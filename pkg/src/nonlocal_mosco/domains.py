"""Computational domains, lattice functions and the interaction regions.

A :class:`Domain` is an interval or an axis-aligned polygon in ``R^d``
(``d = 1, 2``) carrying a uniform lattice.  The lattice is extended over
the truncation box ``[-r_trunc, r_trunc]^d``; lattice nodes in the closure
of Omega are *interior* nodes and the remaining ones form the *collar*.

Node and cell orderings are C-order over the full lattice, so two domains
built from the same spec enumerate everything identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .kernels import KernelFamily, sphere_area

__all__ = [
    "Domain",
    "GridFunction",
    "CellPair",
    "SPACE_TAGS",
    "BASES",
    "build_domain",
    "sample_function",
    "region_pairs",
]

SPACE_TAGS = ("H_nu_on_Omega", "V_nu_full", "V_nu_zero_complement")
BASES = ("linear", "constant")
_BASIS_ALIASES = {"piecewise-linear": "linear", "piecewise-constant": "constant", "P1": "linear", "P0": "constant"}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule; ``pts`` never lie on edges here (cell centres)."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    for (x0, y0), (x1, y1) in zip(poly, np.roll(poly, -1, axis=0)):
        if y0 == y1:
            continue
        cross = ((y0 > y) != (y1 > y)) & (x < x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        inside ^= cross
    return inside


class Domain:
    """Bounded domain with a uniform lattice over the truncation box.

    Parameters
    ----------
    dim : 1 or 2.
    geometry : ``("interval", (a, b))``, ``("box", ((a1, b1), (a2, b2)))`` or
        ``("polygon", vertices)``.  Polygon edges must be axis-parallel and
        vertices must lie on the lattice of the bounding box.
    n : cells per axis across the bounding box of Omega.
    r_trunc : half-width of the truncation box centred at the origin.
    tail_tol : admissible kernel mass beyond the collar (see :func:`build_domain`).
    """

    def __init__(self, dim: int, geometry, n: int, r_trunc: float, tail_tol: float = 1e-10):
        if dim not in (1, 2):
            raise ValueError("only d = 1 and d = 2 are supported")
        if int(n) != n or n < 1:
            raise ValueError("grid resolution n must be a positive integer")
        if not tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        kind, data = geometry
        self.dim, self.n, self.r_trunc, self.tail_tol = dim, int(n), float(r_trunc), float(tail_tol)
        self.geometry_kind = kind
        if kind == "interval":
            if dim != 1:
                raise ValueError("interval geometry is one-dimensional")
            a, b = map(float, data)
            lo, hi = np.array([a]), np.array([b])
            vertices = None
        elif kind == "box":
            if dim != 2:
                raise ValueError("box geometry is two-dimensional")
            (a1, b1), (a2, b2) = data
            lo, hi = np.array([a1, a2], float), np.array([b1, b2], float)
            vertices = np.array([[a1, a2], [b1, a2], [b1, b2], [a1, b2]], float)
        elif kind == "polygon":
            if dim != 2:
                raise ValueError("polygon geometry is two-dimensional")
            vertices = np.asarray(data, dtype=float)
            if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 4:
                raise ValueError("polygon needs at least four 2D vertices")
            edges = np.roll(vertices, -1, axis=0) - vertices
            if np.any((edges[:, 0] != 0) & (edges[:, 1] != 0)):
                raise ValueError("polygon edges must be axis-parallel")
            lo, hi = vertices.min(axis=0), vertices.max(axis=0)
        else:
            raise ValueError(f"unknown geometry {kind!r}")
        if np.any(hi <= lo):
            raise ValueError("degenerate geometry: empty bounding box")
        self.geometry_data = data
        self.spacing = _readonly((hi - lo) / self.n)
        self.omega_lo, self.omega_hi = _readonly(lo), _readonly(hi)

        R = self.r_trunc
        self.diam = float(np.linalg.norm(hi - lo)) if vertices is None else float(
            max(np.linalg.norm(v - w) for v in vertices for w in vertices)
        )
        if not R > self.diam:
            raise ValueError(f"r_trunc={R} must exceed diam(Omega)={self.diam}")
        if np.any(lo <= -R) or np.any(hi >= R):
            raise ValueError("Omega must lie inside the truncation box")
        kmin = np.floor((-R - lo) / self.spacing + 1e-9).astype(int)
        kmax = np.ceil((R - lo) / self.spacing - 1e-9).astype(int)
        self.lattice_origin = _readonly(lo + kmin * self.spacing)
        self.cell_shape = tuple(int(v) for v in kmax - kmin)
        self.node_shape = tuple(s + 1 for s in self.cell_shape)
        self.trunc_lo = _readonly(self.lattice_origin.copy())
        self.trunc_hi = _readonly(lo + kmax * self.spacing)
        # Omega's bounding box in lattice cell indices [start, stop)
        self.omega_start = tuple(int(v) for v in -kmin)
        self.omega_stop = tuple(int(v) for v in -kmin + self.n)

        centers = [self.lattice_origin[i] + (np.arange(self.cell_shape[i]) + 0.5) * self.spacing[i] for i in range(dim)]
        mesh = np.stack(np.meshgrid(*centers, indexing="ij"), axis=-1).reshape(-1, dim)
        if kind == "polygon":
            steps = (vertices - lo) / self.spacing
            if np.any(np.abs(steps - np.round(steps)) > 1e-9):
                raise ValueError("polygon vertices must lie on the grid of its bounding box")
            mask = _points_in_polygon(mesh, vertices)
        else:
            mask = np.all((mesh > lo) & (mesh < hi), axis=1)
        self.omega_cells = _readonly(mask.reshape(self.cell_shape))
        if not self.omega_cells.any():
            raise ValueError("degenerate geometry: no grid cell inside Omega")
        self.cell_centers = _readonly(mesh)
        self.vertices = None if vertices is None else _readonly(vertices)

        # node classification: closure nodes touch an Omega cell, boundary
        # nodes touch both an Omega cell and a non-Omega cell
        touch_in = np.zeros(self.node_shape, dtype=bool)
        touch_out = np.zeros(self.node_shape, dtype=bool)
        for corner in np.ndindex(*(2,) * dim):
            sl = tuple(slice(c, c + s) for c, s in zip(corner, self.cell_shape))
            touch_in[sl] |= self.omega_cells
            touch_out[sl] |= ~self.omega_cells
        self.closure_nodes = _readonly(touch_in)
        self.boundary_nodes = _readonly(touch_in & touch_out)
        axes = [self.lattice_origin[i] + np.arange(self.node_shape[i]) * self.spacing[i] for i in range(dim)]
        self.node_coords = _readonly(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim))
        flat = touch_in.ravel()
        self.interior_index = _readonly(np.flatnonzero(flat))
        self.collar_index = _readonly(np.flatnonzero(~flat))
        self.open_index = _readonly(np.flatnonzero(flat & ~self.boundary_nodes.ravel()))
        self.omega_cell_index = _readonly(np.flatnonzero(self.omega_cells.ravel()))
        self.collar_cell_index = _readonly(np.flatnonzero(~self.omega_cells.ravel()))

        self.cell_volume = float(np.prod(self.spacing))
        self.measure = self.cell_volume * len(self.omega_cell_index)
        self.collar_width = float(min(np.min(lo - self.trunc_lo), np.min(self.trunc_hi - hi)))
        corners = vertices if vertices is not None else np.stack([lo, hi])
        self.outer_radius = float(np.max(np.linalg.norm(corners, axis=1)))

    # ------------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape))

    def spec(self) -> dict:
        geo = {"interval": "interval", "box": "box", "polygon": "polygon"}[self.geometry_kind]
        data = np.asarray(self.geometry_data, dtype=float).tolist()
        return {"dim": self.dim, "geometry": {geo: data}, "n": self.n, "r_trunc": self.r_trunc, "tail_tol": self.tail_tol}

    def kernel_tail(self, kernel: KernelFamily, alpha: float) -> float:
        """Mass of ``J^alpha`` beyond the collar width (upper bound for modulated kernels)."""
        prof = kernel.profile(alpha)
        tail = sphere_area(self.dim) * prof.moment(self.dim - 1, self.collar_width, math.inf)
        if kernel.kind == "perturbed":
            tail *= kernel.lam
        return tail

    def shrink(self, m: int) -> "Domain":
        """Sub-box ``Omega_delta`` with ``m`` lattice cells removed on each side.

        The result shares this domain's lattice and truncation box.
        """
        if self.geometry_kind == "polygon":
            raise ValueError("shrinking is only defined for intervals and boxes")
        if not 0 < 2 * m < self.n:
            raise ValueError("shrink amount too large")
        lo = self.omega_lo + m * self.spacing
        hi = self.omega_hi - m * self.spacing
        if self.dim == 1:
            geo = ("interval", (lo[0], hi[0]))
        else:
            geo = ("box", ((lo[0], hi[0]), (lo[1], hi[1])))
        sub = Domain(self.dim, geo, self.n - 2 * m, self.r_trunc, self.tail_tol)
        assert sub.node_shape == self.node_shape
        return sub

    def locate(self, points: np.ndarray):
        """Cell multi-index (clipped) and local coordinates in ``[0, 1]^d``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        s = (pts - self.lattice_origin) / self.spacing
        cell = np.clip(np.floor(s).astype(np.int64), 0, np.array(self.cell_shape) - 1)
        return cell, s - cell

    def __repr__(self):
        return (
            f"Domain(dim={self.dim}, {self.geometry_kind}={self.geometry_data!r}, n={self.n}, "
            f"r_trunc={self.r_trunc})"
        )


def _parse_geometry(dim: int, geometry):
    if isinstance(geometry, str):
        if geometry in ("unit_interval",):
            return ("interval", (0.0, 1.0))
        if geometry in ("unit_square",):
            return ("box", ((0.0, 1.0), (0.0, 1.0)))
        raise ValueError(f"unknown named geometry {geometry!r}")
    if isinstance(geometry, dict):
        if len(geometry) != 1:
            raise ValueError("geometry mapping needs exactly one of interval/box/polygon")
        (kind, data), = geometry.items()
        return (kind, data)
    if isinstance(geometry, tuple) and len(geometry) == 2 and isinstance(geometry[0], str):
        return geometry
    arr = np.asarray(geometry, dtype=float)
    if dim == 1 and arr.shape == (2,):
        return ("interval", tuple(arr))
    if dim == 2 and arr.shape == (2, 2):
        return ("box", tuple(map(tuple, arr)))
    if dim == 2 and arr.ndim == 2 and arr.shape[1] == 2:
        return ("polygon", arr)
    raise ValueError(f"cannot interpret geometry {geometry!r}")


def build_domain(spec: dict, kernel: Optional[KernelFamily] = None, alphas: Sequence[float] = ()) -> Domain:
    """Build a :class:`Domain` from a spec ``{dim, geometry, n, r_trunc, tail_tol}``.

    When a kernel and an alpha sweep are given, the kernel mass beyond the
    collar (distance from Omega to the edge of the truncation box) must stay
    below ``tail_tol`` for every alpha; otherwise ``ValueError`` is raised.
    """
    try:
        dim = int(spec["dim"])
        geo = _parse_geometry(dim, spec["geometry"])
        n = spec["n"]
        r_trunc = float(spec["r_trunc"])
    except KeyError as exc:
        raise ValueError(f"domain spec is missing {exc.args[0]!r}") from None
    dom = Domain(dim, geo, n, r_trunc, float(spec.get("tail_tol", 1e-10)))
    if kernel is not None:
        for a in alphas:
            t = dom.kernel_tail(kernel, a)
            if t > dom.tail_tol:
                raise ValueError(
                    f"r_trunc={r_trunc} too small: kernel tail {t:.3e} beyond the collar "
                    f"exceeds tail_tol={dom.tail_tol:.1e} at alpha={a}"
                )
    return dom


# --------------------------------------------------------------- functions


@dataclass
class GridFunction:
    """Finite-element function on a domain's lattice.

    ``basis="linear"`` stores nodal values (P1 in 1D, tensor Q1 in 2D);
    ``basis="constant"`` stores cell values.  Functions tagged
    ``H_nu_on_Omega`` store only the values in the closure of Omega, the
    other tags store the full lattice.  ``V_nu_zero_complement`` functions
    vanish identically outside Omega, which for the linear basis also pins
    the nodes on the boundary of Omega to 0.
    """

    domain: Domain
    coefficients: np.ndarray
    space_tag: str = "V_nu_full"
    basis: str = "linear"

    def __post_init__(self):
        self.basis = _BASIS_ALIASES.get(self.basis, self.basis)
        if self.space_tag not in SPACE_TAGS:
            raise ValueError(f"unknown space tag {self.space_tag!r}")
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        c = np.array(self.coefficients, dtype=float).ravel()
        if len(c) != self.expected_length(self.domain, self.space_tag, self.basis):
            raise ValueError(
                f"coefficient vector has length {len(c)}, expected "
                f"{self.expected_length(self.domain, self.space_tag, self.basis)} for {self.space_tag}/{self.basis}"
            )
        if self.space_tag == "V_nu_zero_complement":
            outside = self._outside_index()
            if np.any(c[outside] != 0.0):
                raise ValueError("V_nu_zero_complement function has nonzero values outside Omega")
        c.setflags(write=False)
        self.coefficients = c

    @staticmethod
    def expected_length(domain: Domain, space_tag: str, basis: str) -> int:
        if basis == "linear":
            return len(domain.interior_index) if space_tag == "H_nu_on_Omega" else domain.n_nodes
        return len(domain.omega_cell_index) if space_tag == "H_nu_on_Omega" else domain.n_cells

    def _outside_index(self) -> np.ndarray:
        d = self.domain
        if self.basis == "constant":
            return d.collar_cell_index
        return np.setdiff1d(np.arange(d.n_nodes), d.open_index)

    @property
    def n_dof_full(self) -> int:
        return self.domain.n_nodes if self.basis == "linear" else self.domain.n_cells

    def full(self) -> np.ndarray:
        """Values on the full lattice (zero off Omega for ``H_nu_on_Omega``)."""
        if self.space_tag != "H_nu_on_Omega":
            return np.array(self.coefficients)
        out = np.zeros(self.n_dof_full)
        idx = self.domain.interior_index if self.basis == "linear" else self.domain.omega_cell_index
        out[idx] = self.coefficients
        return out

    @property
    def has_collar(self) -> bool:
        return self.space_tag != "H_nu_on_Omega"

    def evaluate(self, points) -> np.ndarray:
        """Point values (points outside the truncation box give 0)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.domain.dim)
        idx, w = basis_at(self.domain, pts, self.basis)
        vals = np.sum(self.full()[idx] * w, axis=1)
        inside = np.all((pts >= self.domain.trunc_lo) & (pts <= self.domain.trunc_hi), axis=1)
        return np.where(inside, vals, 0.0)

    def gradients(self) -> np.ndarray:
        """Per-cell gradients at the 2^d Gauss points, shape (cells, gp, d)."""
        if self.basis != "linear":
            raise ValueError("gradients need the linear basis")
        return cell_gradients(self.domain, self.full())

    def _combine(self, other: "GridFunction", a: float, b: float) -> "GridFunction":
        if other.domain is not self.domain or other.basis != self.basis:
            raise ValueError("functions live on different discretisations")
        tag = self.space_tag if self.space_tag == other.space_tag else _common_tag(self.space_tag, other.space_tag)
        if tag == "H_nu_on_Omega":
            if self.space_tag == other.space_tag:
                return GridFunction(self.domain, a * self.coefficients + b * other.coefficients, tag, self.basis)
            idx = self.domain.interior_index if self.basis == "linear" else self.domain.omega_cell_index
            return GridFunction(self.domain, (a * self.full() + b * other.full())[idx], tag, self.basis)
        return GridFunction(self.domain, a * self.full() + b * other.full(), tag, self.basis)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, c: float):
        return GridFunction(self.domain, c * self.coefficients, self.space_tag, self.basis)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def l2_norm(self, region: str = "omega") -> float:
        """L2 norm over Omega (``"omega"``) or the truncation box (``"truncation"``)."""
        return math.sqrt(max(l2_inner(self, self, region), 0.0))


def _common_tag(a: str, b: str) -> str:
    if "H_nu_on_Omega" in (a, b):
        return "H_nu_on_Omega"
    return "V_nu_full"


def basis_at(domain: Domain, points: np.ndarray, basis: str = "linear"):
    """Lattice indices and weights of the basis functions at ``points``.

    Returns ``(idx, w)`` of shape ``(n_points, k)`` with ``k = 2^d`` for the
    linear basis and ``k = 1`` for the constant basis.
    """
    cell, t = domain.locate(points)
    if basis == "constant":
        return np.ravel_multi_index(cell.T, domain.cell_shape)[:, None], np.ones((len(cell), 1))
    d = domain.dim
    idx, w = [], []
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner)
        idx.append(np.ravel_multi_index((cell + c).T, domain.node_shape))
        w.append(np.prod(np.where(c == 1, t, 1.0 - t), axis=1))
    return np.stack(idx, axis=1), np.stack(w, axis=1)


_G2 = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


def _cell_gauss(domain: Domain):
    """Reference 2^d Gauss points/weights on the unit cell."""
    d = domain.dim
    pts = np.stack(np.meshgrid(*([_G2] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return pts, np.full(len(pts), 0.5**d)


def cell_gradients(domain: Domain, full_nodal: np.ndarray, cells: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradients of the Q1/P1 interpolant at each cell's Gauss points."""
    d = domain.dim
    cells = domain.omega_cell_index if cells is None else cells
    multi = np.stack(np.unravel_index(cells, domain.cell_shape), axis=1)
    gp, _ = _cell_gauss(domain)
    grads = np.zeros((len(cells), len(gp), d))
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner)
        vals = full_nodal[np.ravel_multi_index((multi + c).T, domain.node_shape)]
        for i in range(d):
            # derivative of the tensor hat along axis i
            f = np.ones(len(gp))
            for j in range(d):
                if j == i:
                    f = f * (1.0 if c[j] else -1.0) / domain.spacing[j]
                else:
                    f = f * np.where(c[j] == 1, gp[:, j], 1.0 - gp[:, j])
            grads[:, :, i] += vals[:, None] * f[None, :]
    return grads


def l2_inner(u: GridFunction, v: GridFunction, region: str = "omega") -> float:
    """Exact L2 inner product over Omega or over the truncation box."""
    dom = u.domain
    cells = dom.omega_cell_index if region == "omega" else np.arange(dom.n_cells)
    if u.basis == "constant":
        return float(dom.cell_volume * np.sum(u.full()[cells] * v.full()[cells]))
    # 2-point Gauss per axis is exact for products of Q1 functions
    gp, gw = _cell_gauss(dom)
    multi = np.stack(np.unravel_index(cells, dom.cell_shape), axis=1)
    pts = (multi[:, None, :] + gp[None]) * dom.spacing + dom.lattice_origin
    pts = pts.reshape(-1, dom.dim)
    idx, w = basis_at(dom, pts, "linear")
    uu = np.sum(u.full()[idx] * w, axis=1)
    vv = np.sum(v.full()[idx] * w, axis=1)
    return float(dom.cell_volume * np.sum((uu * vv).reshape(len(cells), -1) @ gw))


def sample_function(
    domain: Domain,
    u: Callable[[np.ndarray], np.ndarray],
    space_tag: str = "V_nu_full",
    basis: str = "linear",
) -> GridFunction:
    """Interpolate a closed-form ``u`` (nodal values, or cell-centre values).

    ``u`` receives an array of shape ``(m,)`` in 1D and ``(m, 2)`` in 2D.
    For ``V_nu_zero_complement`` the values outside Omega are set to 0.
    """
    basis = _BASIS_ALIASES.get(basis, basis)
    pts = domain.node_coords if basis == "linear" else domain.cell_centers
    if space_tag == "H_nu_on_Omega":
        pts = pts[domain.interior_index if basis == "linear" else domain.omega_cell_index]
    arg = pts[:, 0] if domain.dim == 1 else pts
    vals = np.broadcast_to(np.asarray(u(arg), dtype=float), (len(pts),)).copy()
    if space_tag == "V_nu_zero_complement":
        outside = domain.collar_cell_index if basis == "constant" else np.setdiff1d(
            np.arange(domain.n_nodes), domain.open_index
        )
        vals[outside] = 0.0
    return GridFunction(domain, vals, space_tag, basis)


# ------------------------------------------------------------ cell pairs


@dataclass(frozen=True)
class CellPair:
    """Ordered pair of lattice cells with quadrature metadata."""

    first: int
    second: int
    singular: bool
    distance: float
    measure: float


def region_pairs(domain: Domain, region: str) -> Iterator[CellPair]:
    """Enumerate cell pairs of ``Omega x Omega`` or ``Omega x (box minus Omega)``.

    A pair is *singular* when the closed cells touch (so the kernel
    singularity on the diagonal is reachable) and *regular* otherwise, in
    which case ``distance`` is the positive minimal distance between them.
    Pairs of the mirrored region ``Omega^c x Omega`` are not enumerated.
    """
    if region == "omega_omega":
        second = domain.omega_cell_index
    elif region == "omega_complement":
        second = domain.collar_cell_index
    else:
        raise ValueError("region must be 'omega_omega' or 'omega_complement'")
    first = domain.omega_cell_index
    mf = np.stack(np.unravel_index(first, domain.cell_shape), axis=1)
    ms = np.stack(np.unravel_index(second, domain.cell_shape), axis=1)
    area = domain.cell_volume**2
    for i, a in enumerate(first):
        gap = np.maximum(np.abs(ms - mf[i]) - 1, 0) * domain.spacing
        dist = np.sqrt(np.sum(gap * gap, axis=1))
        for j, b in enumerate(second):
            yield CellPair(int(a), int(b), bool(dist[j] == 0.0), float(dist[j]), area)
