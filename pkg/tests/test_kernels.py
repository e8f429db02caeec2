import math

import numpy as np
import pytest
from scipy import integrate

from nonlocal_mosco.kernels import (
    KERNEL_KINDS,
    MOLLIFIER_IDS,
    MOLLIFIER_PARAMS,
    SampleSpec,
    check_condition_E,
    check_condition_L,
    eval_kernel,
    eval_mollifier,
    eval_nu_alpha,
    frac_laplacian_constant,
    kappa0,
    laplacian_limit_ratio,
    make_kernel,
    make_mollifier,
    normalization_ratio,
    sphere_area,
    tilde_nu,
    violator_kernel,
)
from nonlocal_mosco.radial import PowerPiece, RadialProfile

SWEEP = (1.5, 1.9, 1.99, 1.999)


def gamma_constant(d, a):
    # independent evaluation of the fractional Laplacian constant
    return a * 2 ** (a - 1) * math.gamma((d + a) / 2) / (math.pi ** (d / 2) * math.gamma(1 - a / 2))


def radial_mass(fam, eps, lo=0.0, hi=math.inf):
    d = fam.d
    f = lambda r: sphere_area(d) * r ** (d - 1) * float(eval_mollifier(fam, eps, np.array([r] + [0.0] * (d - 1))))
    pts = sorted({eps, fam.eps0 or 1.0, 1.0})
    if math.isinf(hi):
        a, _ = integrate.quad(f, lo, max(pts) + 1, points=[p for p in pts if lo < p < max(pts) + 1], limit=400, epsabs=0, epsrel=1e-11)
        b, _ = integrate.quad(f, max(pts) + 1, math.inf, limit=400)
        return a + b
    return integrate.quad(f, lo, hi, points=[p for p in pts if lo < p < hi], limit=400, epsabs=0, epsrel=1e-11)[0]


# ------------------------------------------------------------ constants


def test_sphere_area():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("a", [0.3, 1.0, 1.5, 1.9, 1.999])
def test_fractional_constant_against_gamma_formula(d, a):
    assert frac_laplacian_constant(d, a) == pytest.approx(gamma_constant(d, a), rel=1e-12)


def test_fractional_constant_known_value():
    # d = 1, alpha = 1: C = 1/pi
    assert frac_laplacian_constant(1, 1.0) == pytest.approx(1 / math.pi, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_limit_ratios(d):
    om = sphere_area(d)
    for a in (1.99, 1.999, 1.9999):
        assert laplacian_limit_ratio(d, a) == pytest.approx(1.0, abs=5 * (2 - a))
        assert normalization_ratio(d, a) == pytest.approx(1 / om**2, rel=5 * (2 - a))


@pytest.mark.parametrize("a", [0.0, 2.0, -1.0, 2.5])
def test_alpha_out_of_range(a):
    with pytest.raises(ValueError):
        frac_laplacian_constant(1, a)


# ----------------------------------------------------------- mollifiers


def test_power_law_value():
    fam = make_mollifier("power_law", d=1)
    assert float(eval_mollifier(fam, 0.5, 0.5)) == pytest.approx(0.25 * 0.5**-0.5, rel=1e-15)
    assert float(eval_mollifier(fam, 0.5, 0.5)) == pytest.approx(0.35355339059327373, rel=1e-14)


def test_bounded_poly_outside_support():
    fam = make_mollifier("bounded_poly", d=2, beta=2.0)
    assert float(eval_mollifier(fam, 0.1, [0.2, 0.0])) == 0.0
    assert float(eval_mollifier(fam, 0.1, [0.0, 0.2])) == 0.0


@pytest.mark.parametrize("fid", MOLLIFIER_IDS)
@pytest.mark.parametrize("d", [1, 2])
def test_unit_mass(fid, d):
    fam = make_mollifier(fid, d=d)
    for eps in (0.5, 0.1, 0.01):
        if eps >= fam.eps_max:
            continue
        assert fam.mass(eps) == pytest.approx(1.0, abs=1e-10)
        # independent check by direct quadrature of the point values
        assert radial_mass(fam, eps) == pytest.approx(1.0, abs=1e-6)


def test_eps_and_beta_validation():
    with pytest.raises(ValueError):
        eval_mollifier(make_mollifier("bounded_poly", d=1), 2.5, 0.1)
    with pytest.raises(ValueError):
        make_mollifier("bounded_poly", d=2, beta=-2.0)
    with pytest.raises(ValueError):
        make_mollifier("log_annulus", d=1).check_eps(1.0)
    with pytest.raises(ValueError):
        make_mollifier("no_such_family")
    with pytest.raises(ValueError):
        make_mollifier("power_law", d=1, beta=1.0)


def test_aliases():
    assert make_mollifier("bounded-polynomial", d=1).family_id == "bounded_poly"


@pytest.mark.parametrize("fid", ["shifted_power", "shifted_critical", "shifted_ratio"])
def test_b_eps_normalises(fid):
    fam = make_mollifier(fid, d=2)
    for eps in (0.3, 0.05, 0.001):
        b = fam.b_eps(eps)
        prof = fam.profile(eps)
        mass = sphere_area(2) * prof.moment(1, 0.0, math.inf)
        assert mass == pytest.approx(1.0, rel=1e-10)
        assert b > 0


@pytest.mark.parametrize("fid", ["power_law", "bounded_poly", "profile"])
def test_tail_mass_vanishes(fid):
    fam = make_mollifier(fid, d=1)
    eps = [0.5, 0.1, 0.01, 1e-3, 1e-4]
    tails = [fam.tail_mass(e, 0.2) for e in eps]
    assert all(b <= a for a, b in zip(tails, tails[1:]))
    assert tails[-1] < 1e-3


def test_power_law_tail_closed_form():
    fam = make_mollifier("power_law", d=2)
    for e in (0.5, 0.1):
        assert fam.tail_mass(e, 0.2) == pytest.approx(1 - 0.2**e, rel=1e-12)


@pytest.mark.parametrize("fid", ["log_annulus", "shifted_critical", "shifted_ratio"])
def test_log_type_tails_are_monotone(fid):
    fam = make_mollifier(fid, d=1)
    tails = [fam.tail_mass(e, 0.2) for e in (0.5, 0.1, 0.01, 1e-3, 1e-4)]
    assert all(b <= a for a, b in zip(tails, tails[1:]))


def test_shifted_power_does_not_concentrate():
    fam = make_mollifier("shifted_power", d=1)
    assert not fam.concentrates
    assert fam.tail_mass(1e-4, 0.2) == pytest.approx(0.8, abs=1e-3)


@pytest.mark.parametrize("fid", MOLLIFIER_IDS)
def test_almost_decreasing(fid):
    fam = make_mollifier(fid, d=1)
    if math.isinf(fam.c_decreasing):
        pytest.skip("no finite constant for this family")
    r = np.geomspace(1e-4, 3.0, 300)
    for eps in (0.5, 0.05):
        if eps >= fam.eps_max:
            continue
        g = fam.profile(eps)(r) / r**2
        # g(y) <= c g(x) whenever y >= x
        later_max = np.maximum.accumulate(g[::-1])[::-1]
        pos = g > 0
        assert np.all(later_max[pos] <= fam.c_decreasing * g[pos] * (1 + 1e-12))


# -------------------------------------------------------------- nu^alpha


@pytest.mark.parametrize("d", [1, 2])
def test_nu_power_law_closed_form(d):
    fam = make_mollifier("power_law", d=d)
    om = sphere_area(d)
    for a in (0.5, 1.5, 1.9):
        nu = fam.nu(a)
        for r in (0.01, 0.3, 0.99, 1.5):
            h = np.array([r] + [0.0] * (d - 1))
            ref = (2 - a) / om * r ** (-d - a) * (r < 1)
            assert float(eval_nu_alpha(nu, h)) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_nu_bounded_poly_closed_form(d):
    fam = make_mollifier("bounded_poly", d=d, beta=2.0)
    om = sphere_area(d)
    a = 1.9
    e = 2 - a
    nu = fam.nu(a)
    for r in (0.01, 0.05, 0.099, 0.2):
        h = np.array([r] + [0.0] * (d - 1))
        ref = (d + 2) / (om * e ** (d + 2)) * (r < e)
        assert float(eval_nu_alpha(nu, h)) == pytest.approx(ref, rel=1e-12)


def test_nu_undefined_at_origin():
    with pytest.raises(ValueError):
        eval_nu_alpha(make_mollifier("power_law", d=1).nu(1.5), 0.0)


def test_nu_zero_outside_unit_ball():
    for fid in ("power_law", "bounded_poly", "log_annulus"):
        nu = make_mollifier(fid, d=1).nu(1.5)
        assert float(eval_nu_alpha(nu, 1.2)) == 0.0


@pytest.mark.parametrize("fid", ["power_law", "bounded_poly", "log_annulus", "shifted_critical"])
def test_levy_integral_uniformly_bounded(fid):
    fam = make_mollifier(fid, d=2)
    vals = [fam.nu(a).levy_integral for a in np.linspace(1.2, 1.999, 30) if 2 - a < fam.eps_max]
    assert all(np.isfinite(vals))
    assert max(vals) < 10 * min(vals)


def test_levy_integral_power_law():
    # int_{B_1} |h|^2 nu = 1 and nu vanishes outside B_1
    for a in (0.5, 1.5, 1.99):
        assert make_mollifier("power_law", d=2).nu(a).levy_integral == pytest.approx(1.0, rel=1e-12)


# --------------------------------------------------------------- kernels


def test_j1_value():
    f = make_kernel("j1", d=1)
    ref = gamma_constant(1, 1.5) * 0.5**-2.5
    assert float(eval_kernel(f, 1.5, [0.0], [0.5])) == pytest.approx(ref, rel=1e-12)


def test_j4_support():
    f = make_kernel("j4", d=1)
    assert float(eval_kernel(f, 1.9, [0.0], [0.2])) == 0.0
    assert float(eval_kernel(f, 1.9, [0.0], [0.05])) == pytest.approx(0.1**-3, rel=1e-12)


@pytest.mark.parametrize("kind", KERNEL_KINDS)
@pytest.mark.parametrize("d", [1, 2])
def test_kernel_symmetry(kind, d, rng):
    f = make_kernel(kind, d=d, seed=3)
    x = rng.uniform(-1, 1, size=(200, d))
    y = x + rng.uniform(-0.7, 0.7, size=(200, d))
    if d == 1:
        x, y = x[:, 0], y[:, 0]
    for a in (1.5, 1.95):
        np.testing.assert_array_equal(eval_kernel(f, a, x, y), eval_kernel(f, a, y, x))


def test_kernel_diagonal_is_an_error():
    with pytest.raises(ValueError):
        eval_kernel(make_kernel("j1"), 1.5, [0.2], [0.2])


def test_translation_invariance_flag():
    assert make_kernel("j1").translation_invariant
    assert not make_kernel("perturbed").translation_invariant


@pytest.mark.parametrize("d", [1, 2])
def test_lambda_values(d):
    assert make_kernel("nu", d=d).lam == 1.0
    # J4 / nu = om / (d + 2) on the common support
    ratio = sphere_area(d) / (d + 2)
    assert make_kernel("j4", d=d).lam == pytest.approx(max(ratio, 1 / ratio), rel=1e-9)


def test_j4_requires_bounded_poly_base():
    with pytest.raises(ValueError):
        make_kernel("j4", base="power_law")


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_kernel("j9")


# -------------------------------------------------------------- checkers


@pytest.mark.parametrize("kind", ["j1", "j2", "j3", "j4", "nu", "perturbed"])
@pytest.mark.parametrize("d", [1, 2])
def test_condition_E_catalogue(kind, d):
    f = make_kernel(kind, d=d, seed=1)
    for a in SWEEP:
        assert check_condition_E(f, a).holds


def test_condition_E_nu_ratio_one():
    rep = check_condition_E(make_kernel("nu", d=2), 1.7)
    assert rep.worst_ratio == 1.0 and rep.min_ratio == 1.0 and rep.max_ratio == 1.0


def test_condition_E_j1_ratio_is_constant():
    # J1 / nu = C om / (2 - alpha), independent of h
    f = make_kernel("j1", d=1)
    rep = check_condition_E(f, 1.8)
    ref = gamma_constant(1, 1.8) * 2 / 0.2
    assert rep.min_ratio == pytest.approx(ref, rel=1e-12)
    assert rep.max_ratio == pytest.approx(ref, rel=1e-12)


def test_condition_E_violator():
    v = violator_kernel(make_mollifier("power_law", d=1))
    rep = check_condition_E(v, 1.5)
    assert not rep.holds
    assert rep.witness is not None
    assert abs(rep.witness[1][0]) == pytest.approx(1e-6)
    rep = check_condition_E(v, 1.5, SampleSpec(r_min=1e-3))
    assert not rep.holds and abs(rep.witness[1][0]) < 2e-3


@pytest.mark.parametrize("d", [1, 2])
def test_condition_L_j1_closed_form(d):
    f = make_kernel("j1", d=d)
    rep = check_condition_L(f, 1.0, SWEEP)
    ref = [gamma_constant(d, a) * sphere_area(d) / a for a in SWEEP]
    np.testing.assert_allclose(rep.values, ref, rtol=1e-12)
    assert rep.trend == "decreasing"


def test_condition_L_j2_closed_form():
    f = make_kernel("j2", d=2, beta=1.0)
    rep = check_condition_L(f, 1.0, SWEEP)
    ref = [(2 - a) * sphere_area(2) / 1.0 for a in SWEEP]
    np.testing.assert_allclose(rep.values, ref, rtol=1e-12)


def test_condition_L_j4_zero():
    rep = check_condition_L(make_kernel("j4", d=1), 1.0, (1.1, 1.5, 1.9))
    assert rep.values == (0.0, 0.0, 0.0) and rep.trend == "zero"


def test_condition_L_perturbed_bounded_by_lambda():
    f = make_kernel("perturbed", d=1, seed=2)
    nu = make_kernel("nu", d=1)
    for a in (1.5, 1.9):
        v = check_condition_L(f, 0.3, (a,)).values[0]
        ref = check_condition_L(nu, 0.3, (a,)).values[0]
        assert ref / f.lam <= v <= ref * f.lam


def test_kappa0():
    assert kappa0(make_kernel("j4", d=2), 1.2) == 0.0
    assert kappa0(make_kernel("nu", d=1), 1.0) == 0.0
    grid = np.linspace(1.0, 2.0, 202)[1:-1]
    ref = max(gamma_constant(1, a) * 2 / a for a in grid)
    assert kappa0(make_kernel("j1", d=1), 1.0) == pytest.approx(ref, rel=1e-12)


def test_tilde_nu_closed_form():
    prof = RadialProfile([PowerPiece(0.0, math.inf, 1.0, -2.0)])  # |h|^(-1-alpha), alpha = 1
    tn = tilde_nu(prof, d=1, R=1.0)
    assert tn.mass == pytest.approx(2.0, rel=1e-10)
    for r in (0.0, 0.5, 3.0):
        assert float(tn(np.array(r))) == pytest.approx((1 + r) ** -2, rel=1e-14)
    assert tn.mass <= tn.bound


def test_tilde_nu_mass_bound_2d():
    prof = RadialProfile([PowerPiece(0.0, math.inf, 1.0, -3.5)])
    for R in (1.0, 1.5, 3.0):
        tn = tilde_nu(prof, d=2, R=R)
        assert tn.mass <= tn.bound


def test_tilde_nu_needs_full_support():
    with pytest.raises(ValueError):
        tilde_nu(make_mollifier("power_law", d=1).nu(1.5), R=1.0)


def test_catalogue_schema_is_complete():
    assert set(MOLLIFIER_PARAMS) == set(MOLLIFIER_IDS)
    assert MOLLIFIER_PARAMS["power_law"] == {"d": 1}
