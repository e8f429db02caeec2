"""Piecewise radial profiles ``j(r)``, ``r > 0``.

Every kernel in the package is radial in the increment ``h`` (up to an
optional modulation), so the numerics only need a handful of operations on
the radial part: pointwise evaluation, the list of breakpoints, and radial
moments ``int_a^b r**p j(r) dr``.  Power pieces get closed-form moments,
which is what keeps the near-singular regime ``alpha -> 2`` accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = ["PowerPiece", "FuncPiece", "RadialProfile"]

_QUAD_KW = dict(epsabs=0.0, epsrel=1e-12, limit=500)


@dataclass(frozen=True)
class PowerPiece:
    """``coef * r**power`` on ``lo <= r < hi``."""

    lo: float
    hi: float
    coef: float
    power: float

    @property
    def near_zero_power(self) -> float:
        return self.power

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r >= self.lo) & (r < self.hi) & (r > 0)
        out = np.zeros_like(r)
        out[inside] = self.coef * r[inside] ** self.power
        return out

    def moment(self, p: float, a: float, b: float) -> float:
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a or self.coef == 0.0:
            return 0.0
        e = p + self.power + 1.0
        if a == 0.0 and e <= 0.0:
            return math.inf
        if math.isinf(b):
            if e >= 0.0:
                return math.inf
            return self.coef * (-(a**e)) / e
        if abs(e) < 1e-300:
            return self.coef * math.log(b / a)
        # (b**e - a**e)/e written to stay accurate for tiny e
        if a == 0.0:
            return self.coef * b**e / e
        return self.coef * a**e * math.expm1(e * math.log(b / a)) / e

    def scaled(self, c: float) -> "PowerPiece":
        return PowerPiece(self.lo, self.hi, self.coef * c, self.power)

    def times_power(self, q: float) -> "PowerPiece":
        return PowerPiece(self.lo, self.hi, self.coef, self.power + q)


@dataclass(frozen=True)
class FuncPiece:
    """A vectorised callable on ``lo <= r < hi``.

    ``near_zero_power`` is the exponent ``q`` with ``func(r) ~ r**q`` as
    ``r -> 0``; it is only consulted when ``lo == 0`` and decides whether
    a moment diverges at the origin.
    """

    lo: float
    hi: float
    func: Callable[[np.ndarray], np.ndarray]
    near_zero_power: float = 0.0
    points: tuple = ()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r >= self.lo) & (r < self.hi) & (r > 0)
        out = np.zeros_like(r)
        if np.any(inside):
            out[inside] = self.func(r[inside])
        return out

    def moment(self, p: float, a: float, b: float) -> float:
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a:
            return 0.0
        if a == 0.0 and p + self.near_zero_power <= -1.0:
            return math.inf

        def integrand(r):
            return r**p * float(self.func(np.array([r]))[0])

        if math.isinf(b):
            val, _ = integrate.quad(integrand, a, b, **_QUAD_KW)
            return val
        pts = [t for t in self.points if a < t < b]
        val, _ = integrate.quad(integrand, a, b, points=pts or None, **_QUAD_KW)
        return val

    def scaled(self, c: float) -> "FuncPiece":
        f = self.func
        return FuncPiece(self.lo, self.hi, lambda r: c * f(r), self.near_zero_power, self.points)

    def times_power(self, q: float) -> "FuncPiece":
        f = self.func
        return FuncPiece(
            self.lo, self.hi, lambda r: r**q * f(r), self.near_zero_power + q, self.points
        )


class RadialProfile:
    """Sum of radial pieces, evaluated as ``j(r) = sum(piece(r))``."""

    def __init__(self, pieces: Sequence[PowerPiece | FuncPiece]):
        self.pieces = tuple(pieces)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for pc in self.pieces:
            out = out + pc(r)
        return out

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        return RadialProfile(self.pieces + other.pieces)

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile([pc.scaled(c) for pc in self.pieces])

    def times_power(self, q: float) -> "RadialProfile":
        return RadialProfile([pc.times_power(q) for pc in self.pieces])

    @property
    def breakpoints(self) -> np.ndarray:
        pts = set()
        for pc in self.pieces:
            for t in (pc.lo, pc.hi, *getattr(pc, "points", ())):
                if 0.0 < t < math.inf:
                    pts.add(float(t))
        return np.array(sorted(pts))

    @property
    def support_radius(self) -> float:
        his = [pc.hi for pc in self.pieces if not (isinstance(pc, PowerPiece) and pc.coef == 0)]
        return max(his) if his else 0.0

    @property
    def near_zero_power(self) -> float:
        """Leading exponent at the origin (``inf`` if the profile vanishes near 0)."""
        qs = [pc.near_zero_power for pc in self.pieces if pc.lo == 0.0]
        return min(qs) if qs else math.inf

    def moment(self, p: float, a: float = 0.0, b: float = math.inf) -> float:
        """``int_a^b r**p j(r) dr`` (``inf`` when divergent)."""
        total = 0.0
        for pc in self.pieces:
            m = pc.moment(p, a, b)
            if math.isinf(m):
                return math.inf
            total += m
        return total

    def covers_half_line(self, n_probe: int = 64) -> bool:
        """True if the profile is strictly positive on ``(0, inf)``."""
        edges = sorted({0.0, *self.breakpoints.tolist()})
        probes = []
        for lo, hi in zip(edges, edges[1:] + [edges[-1] * 4 + 4]):
            probes.extend(np.geomspace(max(lo, 1e-9), hi, 8)[1:-1])
        probes.extend(np.geomspace(1e-6, 1e6, n_probe))
        return bool(np.all(self(np.array(probes)) > 0))
