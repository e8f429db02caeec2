"""Mollifier families, the derived kernels ``nu^alpha`` and the kernel zoo.

A :class:`MollifierFamily` is a one-parameter family ``rho_eps`` of radial
probability densities that concentrate at the origin as ``eps -> 0``.  It
induces ``nu^alpha(h) = |h|^-2 rho_{2-alpha}(h)``.  A :class:`KernelFamily`
is a family ``alpha -> J^alpha(x, y)`` comparable to ``nu^alpha`` near the
diagonal.

Examples
--------
>>> fam = make_mollifier("power_law", d=1)
>>> round(float(eval_mollifier(fam, 0.5, 0.5)), 6)
0.353553
>>> nu = fam.nu(1.9)
>>> round(float(eval_nu_alpha(nu, 0.5)), 6)
0.373213
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .radial import FuncPiece, PowerPiece, RadialProfile

__all__ = [
    "sphere_area",
    "frac_laplacian_constant",
    "normalization_ratio",
    "laplacian_limit_ratio",
    "MollifierFamily",
    "NuAlpha",
    "KernelFamily",
    "ConditionEReport",
    "ConditionLReport",
    "TildeNu",
    "SampleSpec",
    "MOLLIFIER_IDS",
    "KERNEL_KINDS",
    "make_mollifier",
    "make_kernel",
    "random_modulation",
    "violator_kernel",
    "eval_mollifier",
    "eval_nu_alpha",
    "eval_kernel",
    "check_condition_E",
    "check_condition_L",
    "kappa0",
    "tilde_nu",
]


# ---------------------------------------------------------------- constants


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in ``R^d`` (``2`` for ``d = 1``)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def frac_laplacian_constant(d: int, alpha: float) -> float:
    """Normalisation ``C_{d,alpha}`` of the fractional Laplacian.

    ``C = alpha 2^(alpha-1) Gamma((d+alpha)/2) / (pi^(d/2) Gamma(1-alpha/2))``,
    the constant for which ``(-Delta)^(alpha/2)`` has symbol ``|xi|^alpha``.
    """
    _check_alpha(alpha)
    # 1/Gamma(1 - alpha/2) via rgamma stays finite for alpha -> 2
    return (
        alpha
        * 2.0 ** (alpha - 1.0)
        * math.gamma((d + alpha) / 2.0)
        * float(special.rgamma(1.0 - alpha / 2.0))
        / math.pi ** (d / 2.0)
    )


def normalization_ratio(d: int, alpha: float) -> float:
    """``C_{d,alpha} / (2 d omega_{d-1} (2 - alpha))``, exactly as written.

    Its limit as ``alpha -> 2`` is ``1/omega_{d-1}^2`` (1/4 in 1D), see
    :func:`laplacian_limit_ratio` for the combination that tends to 1.
    """
    return frac_laplacian_constant(d, alpha) / (2 * d * sphere_area(d) * (2.0 - alpha))


def laplacian_limit_ratio(d: int, alpha: float) -> float:
    """``C_{d,alpha} omega_{d-1} / (2 d (2 - alpha))``, which tends to 1."""
    return frac_laplacian_constant(d, alpha) * sphere_area(d) / (2 * d * (2.0 - alpha))


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")


# ------------------------------------------------------- mollifier families

MOLLIFIER_IDS = (
    "bounded_poly",
    "log_annulus",
    "power_law",
    "profile",
    "shifted_critical",
    "shifted_power",
    "shifted_ratio",
)

_ALIASES = {
    "power-law": "power_law",
    "bounded-polynomial": "bounded_poly",
    "log-annulus": "log_annulus",
    "shifted-power": "shifted_power",
    "shifted-critical": "shifted_critical",
    "shifted-ratio": "shifted_ratio",
    "profile-scaled": "profile",
}

# parameter schema per id: name -> default (None = required/none)
MOLLIFIER_PARAMS = {
    "power_law": {"d": 1},
    "bounded_poly": {"d": 1, "beta": 2.0, "eps0": 2.0},
    "log_annulus": {"d": 1, "eps0": 1.0},
    "shifted_power": {"d": 1, "beta": 0.0, "eps0": 1.0},
    "shifted_critical": {"d": 1, "eps0": 1.0},
    "shifted_ratio": {"d": 1, "beta": 1.0, "eps0": 1.0},
    "profile": {"d": 1, "eps0": 2.0, "phi": "exp", "c": 1.0},
}


def _t_integral(k: float, m: float, t0: float) -> float:
    """``int_{t0}^1 t^(-k-1) (1-t)^m dt`` via ``t = e^s``."""

    def f(s):
        return math.exp(-k * s) * (-math.expm1(s)) ** m

    val, _ = integrate.quad(f, math.log(t0), 0.0, epsabs=0.0, epsrel=1e-13, limit=500)
    return val


@lru_cache(maxsize=4096)
def _b_eps(family_id: str, d: int, beta: float, eps0: float, eps: float) -> float:
    t0 = eps / (eps + eps0)
    if family_id == "shifted_power":
        return eps ** (d + beta) * _t_integral(d + beta, d - 1, t0)
    if family_id == "shifted_critical":
        return _t_integral(0.0, d - 1, t0)
    if family_id == "shifted_ratio":
        return _t_integral(0.0, d + beta - 1, t0)
    raise KeyError(family_id)


_PHI_LIBRARY = {
    "exp": (lambda s: np.exp(-s), 1.0),
    "half_gaussian": (lambda s: math.sqrt(2.0 / math.pi) * np.exp(-0.5 * s * s), 1.0),
    "box": (lambda s: np.where(s < 1.0, 1.0, 0.0), 1.0),
}


@dataclass(frozen=True)
class MollifierFamily:
    """Radial family ``rho_eps`` with unit mass concentrating at 0.

    ``c_decreasing`` is the stored almost-decreasing constant of
    ``|h|^-2 rho_eps(h)``; ``math.inf`` marks families (or parameter
    ranges) for which no finite constant exists.
    """

    family_id: str
    d: int = 1
    beta: Optional[float] = None
    eps0: Optional[float] = None
    phi: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    phi_name: Optional[str] = None
    c_decreasing: float = 1.0

    def __post_init__(self):
        if self.family_id not in MOLLIFIER_IDS:
            raise ValueError(f"unknown mollifier family {self.family_id!r}")
        if self.d not in (1, 2, 3) or int(self.d) != self.d:
            raise ValueError("dimension d must be a positive integer (1, 2 or 3)")
        fid, beta = self.family_id, self.beta
        if fid in ("bounded_poly", "shifted_power") and not (-self.d < beta <= 2.0):
            raise ValueError(f"beta must lie in (-d, 2], got {beta!r}")
        if fid == "shifted_ratio" and not beta > 0:
            raise ValueError(f"beta must be positive, got {beta!r}")
        if self.eps0 is not None and not self.eps0 > 0:
            raise ValueError("eps0 must be positive")

    # -- validity --------------------------------------------------------
    @property
    def eps_max(self) -> float:
        """Upper end of the admissible ``eps`` range."""
        if self.family_id == "power_law":
            return 2.0
        return min(2.0, self.eps0)

    def check_eps(self, eps: float) -> None:
        if not (0.0 < eps < self.eps_max):
            raise ValueError(
                f"eps={eps!r} outside the valid range (0, {self.eps_max}) of {self.family_id}"
            )

    @property
    def singular_at_origin(self) -> bool:
        return self.profile(min(0.5, self.eps_max / 2)).near_zero_power < 0

    # -- closed forms ----------------------------------------------------
    def b_eps(self, eps: float) -> float:
        """Normalisation constant of the shifted families."""
        self.check_eps(eps)
        return _b_eps(self.family_id, self.d, float(self.beta or 0.0), float(self.eps0), float(eps))

    def profile(self, eps: float) -> RadialProfile:
        """Radial profile ``r -> rho_eps(r)``."""
        self.check_eps(eps)
        d, om, fid = self.d, sphere_area(self.d), self.family_id
        if fid == "power_law":
            return RadialProfile([PowerPiece(0.0, 1.0, eps / om, eps - d)])
        if fid == "bounded_poly":
            b = self.beta
            return RadialProfile([PowerPiece(0.0, eps, (d + b) / (om * eps ** (d + b)), b)])
        if fid == "log_annulus":
            return RadialProfile(
                [PowerPiece(eps, self.eps0, 1.0 / (om * math.log(self.eps0 / eps)), -d)]
            )
        if fid == "profile":
            phi = self.phi
            return RadialProfile(
                [
                    FuncPiece(
                        0.0,
                        math.inf,
                        lambda r: r ** (1.0 - d) * phi(r / eps) / (om * eps),
                        near_zero_power=1.0 - d,
                        points=(eps,),
                    )
                ]
            )
        bnorm = self.b_eps(eps)
        if fid == "shifted_power":
            b = self.beta
            func = lambda r: (r + eps) ** b / (om * bnorm)
            q = 0.0
        elif fid == "shifted_critical":
            func = lambda r: (r + eps) ** (-d) / (om * bnorm)
            q = 0.0
        else:  # shifted_ratio
            b = self.beta
            func = lambda r: r**b / (om * bnorm * (r + eps) ** (d + b))
            q = b
        return RadialProfile([FuncPiece(0.0, self.eps0, func, near_zero_power=q, points=(eps,))])

    def __call__(self, eps: float, h) -> np.ndarray:
        return eval_mollifier(self, eps, h)

    def nu(self, alpha: float) -> "NuAlpha":
        return NuAlpha(self, alpha)

    @property
    def concentrates(self) -> bool:
        """False when the tail mass outside a fixed ball does not vanish.

        The shifted power family tends to ``|x|^beta`` normalised on
        ``B_eps0`` rather than to a point mass.
        """
        return self.family_id != "shifted_power"

    def tail_mass(self, eps: float, delta: float) -> float:
        """``int_{|x| > delta} rho_eps``."""
        return sphere_area(self.d) * self.profile(eps).moment(self.d - 1, delta, math.inf)

    def mass(self, eps: float) -> float:
        return sphere_area(self.d) * self.profile(eps).moment(self.d - 1, 0.0, math.inf)


@dataclass(frozen=True)
class NuAlpha:
    """``nu^alpha(h) = |h|^-2 rho_{2-alpha}(h)`` for a parent family."""

    parent: MollifierFamily
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        self.parent.check_eps(2.0 - self.alpha)

    @property
    def d(self) -> int:
        return self.parent.d

    @cached_property
    def profile(self) -> RadialProfile:
        return self.parent.profile(2.0 - self.alpha).times_power(-2.0)

    @cached_property
    def levy_integral(self) -> float:
        """``int (1 ^ |h|^2) nu^alpha(h) dh``."""
        p, d = self.profile, self.d
        return sphere_area(d) * (p.moment(d + 1, 0.0, 1.0) + p.moment(d - 1, 1.0, math.inf))

    def __call__(self, h) -> np.ndarray:
        return eval_nu_alpha(self, h)


def _radius(h, d: int) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if d == 1 and (h.ndim == 0 or h.shape[-1] != 1):
        return np.abs(h)
    if h.shape[-1] != d:
        raise ValueError(f"point of dimension {h.shape[-1]} for a d={d} object")
    return np.linalg.norm(h, axis=-1)


def eval_mollifier(family: MollifierFamily, eps: float, h) -> np.ndarray:
    """``rho_eps(h)``; ``h`` is a point or an array of points."""
    family.check_eps(eps)
    prof = family.profile(eps)
    r = _radius(h, family.d)
    if np.any(r == 0) and prof.near_zero_power < 0:
        raise ValueError("rho_eps is singular at h = 0 for this family")
    out = prof(r)
    if np.any(r == 0):
        # value at the origin from the limit of the profile
        out = np.where(r == 0, prof(np.full_like(r, 1e-300)) if prof.near_zero_power == 0 else 0.0, out)
    return out


def eval_nu_alpha(k: NuAlpha, h) -> np.ndarray:
    """``nu^alpha(h)``; raises for ``h = 0``."""
    r = _radius(h, k.d)
    if np.any(r == 0):
        raise ValueError("nu^alpha is not defined at h = 0")
    return k.profile(r)


def make_mollifier(family_id: str, **params) -> MollifierFamily:
    """Catalogue constructor addressed by string id (see ``MOLLIFIER_PARAMS``)."""
    fid = _ALIASES.get(family_id, family_id)
    if fid not in MOLLIFIER_PARAMS:
        raise ValueError(f"unknown mollifier family {family_id!r}")
    schema = MOLLIFIER_PARAMS[fid]
    unknown = set(params) - set(schema)
    if unknown:
        raise ValueError(f"unknown parameters for {fid}: {sorted(unknown)}")
    p = {**schema, **params}
    d = int(p["d"])
    if fid == "power_law":
        return MollifierFamily(fid, d)
    if fid == "bounded_poly":
        return MollifierFamily(fid, d, beta=float(p["beta"]), eps0=float(p["eps0"]))
    if fid == "log_annulus":
        # rho vanishes on B_eps, so |h|^-2 rho is not almost decreasing
        return MollifierFamily(fid, d, eps0=float(p["eps0"]), c_decreasing=math.inf)
    if fid in ("shifted_power", "shifted_critical"):
        beta = float(p["beta"]) if fid == "shifted_power" else None
        return MollifierFamily(fid, d, beta=beta, eps0=float(p["eps0"]))
    if fid == "shifted_ratio":
        beta = float(p["beta"])
        c = 1.0 if beta <= 2.0 else math.inf
        return MollifierFamily(fid, d, beta=beta, eps0=float(p["eps0"]), c_decreasing=c)
    # profile
    phi = p["phi"]
    if callable(phi):
        name, func = getattr(phi, "__name__", "custom"), phi
    else:
        if phi not in _PHI_LIBRARY:
            raise ValueError(f"unknown profile phi {phi!r}; choose from {sorted(_PHI_LIBRARY)}")
        name, func = phi, _PHI_LIBRARY[phi][0]
    total, _ = integrate.quad(lambda s: float(func(np.array([s]))[0]), 0, np.inf, epsrel=1e-12)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"profile phi must integrate to 1 over (0, inf), got {total}")
    return MollifierFamily(
        fid, d, eps0=float(p["eps0"]), phi=func, phi_name=name, c_decreasing=float(p["c"])
    )


# ------------------------------------------------------------------ kernels

KERNEL_KINDS = ("j1", "j2", "j3", "j4", "nu", "perturbed")

KERNEL_PARAMS = {
    "j1": {},
    "j2": {"beta": 1.0},
    "j3": {"tail": "exp"},
    "j4": {},
    "nu": {"base": "power_law"},
    "perturbed": {"base": "power_law", "lam": 2.0, "seed": 0},
}

_TAILS = {
    "exp": lambda r: np.exp(-r),
    "gauss": lambda r: np.exp(-r * r),
}


@dataclass(frozen=True)
class KernelFamily:
    """Family ``alpha -> J^alpha(x, y)``.

    Parameters
    ----------
    kind : one of ``KERNEL_KINDS``.
    base : mollifier family defining the reference kernels ``nu^alpha``.
    lam : ellipticity constant; computed from the kernel when omitted.
    beta : tail exponent of ``j2``.
    tail : radial tail ``r -> t(r)`` of ``j3`` (applied for ``r >= 1``).
    modulation : symmetric ``c(x, y)`` for ``perturbed`` kernels.
    alpha0 : lower end of the alpha range over which ``lam`` is computed.
    """

    kind: str
    base: MollifierFamily
    lam: Optional[float] = None
    beta: Optional[float] = None
    tail: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    modulation: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )
    alpha0: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "j2" and not (self.beta and self.beta > 0):
            raise ValueError("j2 needs a tail exponent beta > 0")
        if self.kind == "j3" and self.tail is None:
            raise ValueError("j3 needs a tail function")
        if self.kind == "perturbed" and (self.modulation is None or self.lam is None):
            raise ValueError("perturbed kernels need a modulation and its bound lam")
        if self.lam is None:
            object.__setattr__(self, "lam", self._computed_lambda())
        if not self.lam >= 1.0:
            raise ValueError("ellipticity constant must be >= 1")

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def translation_invariant(self) -> bool:
        return self.kind != "perturbed"

    def nu(self, alpha: float) -> NuAlpha:
        return self.base.nu(alpha)

    def profile(self, alpha: float) -> RadialProfile:
        """Radial profile of ``J^alpha``; for ``perturbed`` kernels this is
        the profile of the reference kernel ``nu^alpha``."""
        _check_alpha(alpha)
        d = self.d
        if self.kind in ("nu", "perturbed"):
            return self.nu(alpha).profile
        if self.kind == "j4":
            e = 2.0 - alpha
            return RadialProfile([PowerPiece(0.0, e, e ** (-(d + 2)), 0.0)])
        c = frac_laplacian_constant(d, alpha)
        if self.kind == "j1":
            return RadialProfile([PowerPiece(0.0, math.inf, c, -d - alpha)])
        near = PowerPiece(0.0, 1.0, c, -d - alpha)
        if self.kind == "j2":
            return RadialProfile([near, PowerPiece(1.0, math.inf, 2.0 - alpha, -d - self.beta)])
        t = self.tail
        return RadialProfile(
            [near, FuncPiece(1.0, math.inf, lambda r: (2.0 - alpha) * t(r), near_zero_power=0.0)]
        )

    def __call__(self, alpha: float, x, y) -> np.ndarray:
        return eval_kernel(self, alpha, x, y)

    def evaluate_increment(self, alpha: float, x, h) -> np.ndarray:
        """``J^alpha(x, x + h)`` for arrays of points ``x`` and increments ``h``."""
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        r = _radius(h, self.d)
        val = self.profile(alpha)(r)
        if self.kind == "perturbed":
            val = val * self.modulation(x, x + h)
        return val

    def _computed_lambda(self) -> float:
        if self.kind == "nu":
            return 1.0
        radii = np.geomspace(1e-6, 1.0, 121)[:-1]
        # the endpoint 2 - 1e-9 captures the limiting ratio as alpha -> 2
        alphas = np.concatenate([np.linspace(self.alpha0, 2.0, 41)[1:-1], 2.0 - np.geomspace(1e-2, 1e-9, 8)])
        alphas = [a for a in alphas if 0 < 2 - a < self.base.eps_max]
        worst = 1.0
        for a in alphas:
            j = self.profile(a)(radii)
            nu = self.nu(a).profile(radii)
            both = (j > 0) & (nu > 0)
            if np.any((j > 0) != (nu > 0)):
                return math.inf
            if not np.any(both):
                continue
            ratio = j[both] / nu[both]
            worst = max(worst, float(ratio.max()), float(1.0 / ratio.min()))
        return worst


def eval_kernel(f: KernelFamily, alpha: float, x, y) -> np.ndarray:
    """``J^alpha(x, y)``; raises when ``x = y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = y - x
    if np.any(_radius(h, f.d) == 0):
        raise ValueError("J^alpha is not defined on the diagonal x = y")
    if f.kind == "perturbed":
        # evaluate symmetrically so that J(x, y) == J(y, x) bit for bit
        r = _radius(h, f.d)
        return f.profile(alpha)(r) * f.modulation(x, y)
    return f.profile(alpha)(_radius(h, f.d))


def random_modulation(d: int, lam: float, seed: int = 0, n_modes: int = 3):
    """Random smooth symmetric ``c(x, y)`` with values in ``(1/lam, lam)``.

    ``c = lam ** tanh(s((x+y)/2) + q(y - x))`` with ``s`` a short random
    Fourier series and ``q`` an even function of the direction, so the
    induced diffusion matrix is anisotropic in 2D.
    """
    rng = np.random.default_rng(seed)
    freq = rng.normal(0.0, 2.0, size=(n_modes, d))
    phase = rng.uniform(0.0, 2 * math.pi, size=n_modes)
    amp = rng.uniform(0.3, 1.0, size=n_modes)
    qa, qb = rng.uniform(0.8, 1.6, size=2) * rng.choice([-1.0, 1.0], size=2)
    llam = math.log(lam)

    def modulation(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x, y = x[..., None], y[..., None]
        m = 0.5 * (x + y)
        s = np.cos(m @ freq.T + phase) @ amp
        q = 0.0
        if d >= 2:
            h = y - x
            r2 = np.sum(h * h, axis=-1)
            r2 = np.where(r2 == 0, 1.0, r2)
            c2 = (h[..., 0] ** 2 - h[..., 1] ** 2) / r2
            s2 = 2 * h[..., 0] * h[..., 1] / r2
            q = qa * c2 + qb * s2
        return np.exp(llam * np.tanh(s + q))

    return modulation


def violator_kernel(base: MollifierFamily, power: float = -0.5, lam: float = 2.0) -> KernelFamily:
    """Test kernel ``nu^alpha(h) |h|^power`` that breaks condition (E)."""
    d = base.d

    def modulation(x, y):
        return _radius(np.asarray(y, float) - np.asarray(x, float), d) ** power

    return KernelFamily("perturbed", base, lam=lam, modulation=modulation, label="violator")


def make_kernel(kind: str, base=None, seed: Optional[int] = None, **params) -> KernelFamily:
    """Catalogue constructor for kernel kinds ``j1 | j2 | j3 | j4 | nu | perturbed``.

    ``base`` is a :class:`MollifierFamily`, a family id or a dict
    ``{"id": ..., **params}``; ``j1``-``j3`` default to the power-law
    family and ``j4`` to the bounded polynomial family with ``beta = 2``.
    """
    kind = {"J1": "j1", "J2": "j2", "J3": "j3", "J4": "j4"}.get(kind, kind)
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}")
    d = int(params.pop("d", 1))
    if base is None:
        base = make_mollifier("bounded_poly", d=d, beta=2.0) if kind == "j4" else make_mollifier(
            "power_law", d=d
        )
    elif isinstance(base, str):
        base = make_mollifier(base, d=d)
    elif isinstance(base, dict):
        b = dict(base)
        base = make_mollifier(b.pop("id"), **{"d": d, **b})
    if kind == "j4" and (base.family_id != "bounded_poly" or base.beta != 2.0):
        raise ValueError("j4 is comparable to the bounded polynomial family with beta = 2 only")
    if kind == "j2":
        return KernelFamily("j2", base, beta=float(params.pop("beta", 1.0)), **params)
    if kind == "j3":
        tail = params.pop("tail", "exp")
        if not callable(tail):
            if tail not in _TAILS:
                raise ValueError(f"unknown j3 tail {tail!r}; choose from {sorted(_TAILS)}")
            tail = _TAILS[tail]
        return KernelFamily("j3", base, tail=tail, **params)
    if kind == "perturbed":
        lam = float(params.pop("lam", 2.0))
        mod = params.pop("modulation", None) or random_modulation(
            base.d, lam, seed=0 if seed is None else seed
        )
        return KernelFamily("perturbed", base, lam=lam, modulation=mod, **params)
    return KernelFamily(kind, base, **params)


# ---------------------------------------------------------------- checkers


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic grid of ``(x, h)`` samples with ``0 < |h| <= 1``."""

    n_radii: int = 60
    r_min: float = 1e-6
    n_directions: int = 8
    n_points: int = 5
    box: float = 1.0

    def samples(self, d: int):
        # |h| = 1 itself is left out: indicator kernels are defined on open balls
        radii = np.geomspace(self.r_min, 1.0, self.n_radii + 1)[:-1]
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
            pts = np.linspace(-self.box, self.box, self.n_points)[:, None]
        else:
            th = (np.arange(self.n_directions) + 0.5) * (2 * math.pi / self.n_directions)
            dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
            g = np.linspace(-self.box, self.box, self.n_points)
            pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        h = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        x = np.repeat(pts, len(h), axis=0)
        h = np.tile(h, (len(pts), 1))
        return x, h


@dataclass(frozen=True)
class ConditionEReport:
    holds: bool
    worst_ratio: float
    min_ratio: float
    max_ratio: float
    lam: float
    witness: Optional[tuple]
    n_samples: int


def check_condition_E(f: KernelFamily, alpha: float, sample_spec: SampleSpec | None = None):
    """Sample-based check of ``lam^-1 nu <= J <= lam nu`` for ``|h| <= 1``."""
    spec = sample_spec or SampleSpec()
    x, h = spec.samples(f.d)
    nu = f.nu(alpha).profile(_radius(h, f.d))
    j = f.evaluate_increment(alpha, x, h)
    lam = f.lam
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(nu > 0, j / nu, np.where(j > 0, np.inf, 1.0))
    slack = 1e-12
    bad = (ratio > lam * (1 + slack)) | (ratio < (1 - slack) / lam)
    logr = np.abs(np.log(np.where(ratio > 0, ratio, 1e-300)))
    iw = int(np.argmax(logr))
    witness = None
    if np.any(bad):
        ib = int(np.argmax(np.where(bad, logr, -1.0)))
        witness = (x[ib].tolist(), h[ib].tolist())
    return ConditionEReport(
        holds=not bool(np.any(bad)),
        worst_ratio=float(ratio[iw]),
        min_ratio=float(ratio.min()),
        max_ratio=float(ratio.max()),
        lam=float(lam),
        witness=witness,
        n_samples=int(len(ratio)),
    )


@dataclass(frozen=True)
class ConditionLReport:
    delta: float
    alphas: tuple
    values: tuple
    trend: str
    diverged: bool


def _far_integral(f: KernelFamily, alpha: float, delta: float, spec: SampleSpec) -> float:
    """``sup_x int_{|h| > delta} J^alpha(x, x+h) dh``."""
    prof = f.profile(alpha)
    d = f.d
    om = sphere_area(d)
    if f.translation_invariant:
        return om * prof.moment(d - 1, delta, math.inf)
    # modulated kernels: polar Gauss rule per sample point up to the support
    # of the reference kernel (catalogue kernels with compact support)
    R = prof.support_radius
    if math.isinf(R):
        raise ValueError("perturbed kernels need a reference kernel of bounded support")
    if R <= delta:
        return 0.0
    if math.isinf(prof.moment(d - 1, delta, R)):
        return math.inf
    edges = np.unique(np.concatenate([[delta, R], prof.breakpoints]))
    edges = edges[(edges >= delta) & (edges <= R)]
    gx, gw = np.polynomial.legendre.leggauss(24)
    rr, ww = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        rr.append(0.5 * (hi - lo) * gx + 0.5 * (hi + lo))
        ww.append(0.5 * (hi - lo) * gw)
    rr, ww = np.concatenate(rr), np.concatenate(ww)
    x_pts, _ = spec.samples(d)
    x_pts = np.unique(x_pts, axis=0)
    if d == 1:
        dirs, dw = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    else:
        th = (np.arange(64) + 0.5) * (2 * math.pi / 64)
        dirs, dw = np.stack([np.cos(th), np.sin(th)], 1), np.full(64, 2 * math.pi / 64)
    best = 0.0
    for x in x_pts:
        h = (rr[:, None, None] * dirs[None]).reshape(-1, d)
        val = prof(np.repeat(rr, len(dirs))) * f.modulation(np.broadcast_to(x, h.shape), x + h)
        val = val.reshape(len(rr), len(dirs))
        best = max(best, float(np.sum(ww * rr ** (d - 1) * (val @ dw))))
    return best


def check_condition_L(
    f: KernelFamily, delta: float, alpha_sweep: Sequence[float], sample_spec: SampleSpec | None = None
) -> ConditionLReport:
    """Far-field masses ``sup_x int_{|h| > delta} J^alpha`` along a sweep.

    Kernels with unbounded radial support are integrated in closed form or
    by adaptive quadrature to infinity, so no truncation is involved.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    spec = sample_spec or SampleSpec()
    vals = tuple(_far_integral(f, a, delta, spec) for a in alpha_sweep)
    diverged = any(math.isinf(v) for v in vals)
    arr = np.array(vals)
    if diverged:
        trend = "divergent"
    elif np.all(arr == 0):
        trend = "zero"
    elif np.all(np.diff(arr) < 0):
        trend = "decreasing"
    elif np.all(np.diff(arr) <= 0):
        trend = "non-increasing"
    else:
        trend = "not monotone"
    return ConditionLReport(float(delta), tuple(alpha_sweep), vals, trend, diverged)


def kappa0(f: KernelFamily, alpha0: float, n_grid: int = 200, sample_spec: SampleSpec | None = None) -> float:
    """``sup_{alpha in (alpha0, 2)} sup_x int_{|h| > 1} J^alpha(x, x+h) dh`` on a grid.

    The grid is uniform in ``(alpha0, 2)`` and clipped to the admissible
    range of the base family.  Raises ``ValueError`` if a far-field
    integral diverges.
    """
    _check_alpha(alpha0)
    spec = sample_spec or SampleSpec(n_points=3)
    grid = np.linspace(alpha0, 2.0, n_grid + 2)[1:-1]
    grid = [a for a in grid if 2.0 - a < f.base.eps_max]
    vals = [_far_integral(f, a, 1.0, spec) for a in grid]
    if any(math.isinf(v) for v in vals):
        raise ValueError("far-field integral diverges: kappa0 is infinite")
    return float(max(vals)) if vals else 0.0


@dataclass(frozen=True)
class TildeNu:
    """``h -> nu(R (1 + |h|))`` with its total mass and the a-priori bound."""

    profile: RadialProfile
    R: float
    d: int
    mass: float
    bound: float
    base: Optional[RadialProfile] = None

    def __call__(self, h) -> np.ndarray:
        r = _radius(h, self.d)
        if self.base is None:
            return self.profile(r)
        # finite at h = 0, unlike the profile pieces which skip the origin
        return self.base(self.R * (1.0 + r))


def tilde_nu(nu, omega=None, d: Optional[int] = None, R: Optional[float] = None) -> TildeNu:
    """Comparison kernel ``nu~(h) = nu(R(1 + |h|))`` for a full-support ``nu``.

    ``nu`` is a :class:`NuAlpha` or a :class:`RadialProfile` (then ``d`` is
    required).  ``R >= 1`` is the smallest radius with ``Omega`` inside
    ``B_R(0)``; pass ``omega`` (a Domain) or ``R`` directly.
    """
    if isinstance(nu, NuAlpha):
        prof, d = nu.profile, nu.d
    else:
        prof = nu
        if d is None:
            raise ValueError("dimension d is required for a bare radial profile")
    if R is None:
        if omega is None:
            raise ValueError("pass the domain or the radius R")
        R = max(1.0, float(omega.outer_radius))
    if not prof.covers_half_line():
        raise ValueError("nu does not have full support; nu~ is not available")
    R = float(R)
    shifted_bps = tuple(b / R - 1.0 for b in prof.breakpoints if b > R)
    func = lambda r: prof(R * (1.0 + r))
    tprof = RadialProfile([FuncPiece(0.0, math.inf, func, near_zero_power=0.0, points=shifted_bps)])
    om = sphere_area(d)
    mass = om * tprof.moment(d - 1, 0.0, math.inf)
    levy = om * (prof.moment(d + 1, 0.0, 1.0) + prof.moment(d - 1, 1.0, math.inf))
    bound = R ** (-d) * levy
    if not mass <= bound * (1 + 1e-9):
        raise ArithmeticError(f"mass {mass} of nu~ exceeds the bound {bound}")
    return TildeNu(tprof, R, d, float(mass), float(bound), prof)
