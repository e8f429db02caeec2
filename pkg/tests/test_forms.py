import math

import numpy as np
import pytest
from scipy import integrate

from nonlocal_mosco.domains import GridFunction, build_domain, sample_function
from nonlocal_mosco.forms import (
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
from nonlocal_mosco.kernels import frac_laplacian_constant, make_kernel, make_mollifier, sphere_area

SWEEP = (1.5, 1.9, 1.99, 1.999)


def power_law_1d_energy(a):
    # int_0^1 int_0^1 (x - y)^2 nu^a, reduced to the increment h
    v, _ = integrate.quad(lambda h: (2 - a) * (1 - h), 0, 1, weight="alg", wvar=(1 - a, 0), epsabs=0, epsrel=1e-13)
    return v


def square_energy(pieces, grad):
    """E_Omega(u, u) on the unit square for u(x) = grad . x.

    ``pieces`` lists radial pieces ``(coef, power, lo, hi)`` of ``J(r) = coef r^power``.
    By symmetry E = |grad|^2 / 2 * int |h|^2 J(h) (1 - |h1|)(1 - |h2|) dh.
    """

    def prim(p, c, s, r):
        return r ** (p + 1) / (p + 1) - (c + s) * r ** (p + 2) / (p + 2) + c * s * r ** (p + 3) / (p + 3)

    def inner(t):
        c, s = math.cos(t), math.sin(t)
        top = 1 / max(c, s)
        out = 0.0
        for coef, power, lo, hi in pieces:
            a, b = lo, min(hi, top)
            if b > a:
                p = 3 + power
                out += coef * (prim(p, c, s, b) - (prim(p, c, s, a) if a > 0 else 0.0))
        return out

    v, _ = integrate.quad(inner, 0, math.pi / 2, points=[math.pi / 4], epsabs=0, epsrel=1e-12, limit=200)
    return 0.5 * float(np.dot(grad, grad)) * 4 * v


@pytest.fixture(scope="module")
def line8():
    return build_domain({"dim": 1, "geometry": [0, 1], "n": 8, "r_trunc": 2})


@pytest.fixture(scope="module")
def square4():
    return build_domain({"dim": 2, "geometry": "unit_square", "n": 4, "r_trunc": 2})


# ------------------------------------------------------------ inner form


@pytest.mark.parametrize("a", SWEEP)
def test_1d_power_law_closed_form(line8, a):
    u = sample_function(line8, lambda x: x, "H_nu_on_Omega")
    val = eval_form_inner(make_kernel("nu", d=1), a, u, u).value
    assert val == pytest.approx(1 - (2 - a) / (3 - a), rel=1e-10)
    assert val == pytest.approx(power_law_1d_energy(a), rel=1e-10)


def test_1d_power_law_value_at_19(line8):
    u = sample_function(line8, lambda x: x, "H_nu_on_Omega")
    assert eval_form_inner(make_kernel("nu", d=1), 1.9, u, u).value == pytest.approx(0.9090909090909091, rel=1e-10)


@pytest.mark.parametrize("kind", ["nu", "j1", "j2", "j4"])
@pytest.mark.parametrize("a", [1.5, 1.9])
def test_2d_linear_against_polar_oracle(square4, kind, a):
    grad = np.array([1.0, 2.0])
    u = sample_function(square4, lambda p: p @ grad, "H_nu_on_Omega")
    C = frac_laplacian_constant(2, a)
    pieces = {
        "nu": [((2 - a) / (2 * math.pi), -2 - a, 0.0, 1.0)],
        "j1": [(C, -2 - a, 0.0, math.inf)],
        "j2": [(C, -2 - a, 0.0, 1.0), (2 - a, -3.0, 1.0, math.inf)],
        "j4": [((2 - a) ** -4, 0.0, 0.0, 2 - a)],
    }[kind]
    val = eval_form_inner(make_kernel(kind, d=2), a, u, u).value
    assert val == pytest.approx(square_energy(pieces, grad), rel=1e-9)


@pytest.mark.parametrize("kind", ["nu", "j1", "j3", "j4", "perturbed"])
def test_constant_gives_zero(square4, kind):
    u = sample_function(square4, lambda p: 3.0 + 0 * p[:, 0])
    f = make_kernel(kind, d=2, seed=1)
    assert eval_form_inner(f, 1.7, u, u).value == 0.0
    assert eval_form_full(f, 1.7, u, u).value == 0.0


def test_diagonal_report_split(square4, rng):
    u = GridFunction(square4, rng.standard_normal(square4.n_nodes))
    rep = eval_form_full(make_kernel("j4", d=2), 1.5, u, u)
    assert rep.value >= 0
    assert rep.value == pytest.approx(rep.singular_part + rep.regular_part, rel=1e-13)
    assert rep.value == pytest.approx(rep.inner + 2 * rep.cross, rel=1e-12)
    inner = eval_form_inner(make_kernel("j4", d=2), 1.5, u, u)
    assert inner.value == pytest.approx(rep.inner, rel=1e-12)


# ------------------------------------------------ algebraic properties


@pytest.fixture(scope="module")
def random_triple(square4):
    g = np.random.default_rng(7)
    return [GridFunction(square4, g.standard_normal(square4.n_nodes)) for _ in range(3)]


@pytest.mark.parametrize("kind", ["j1", "j4", "perturbed"])
def test_symmetry(random_triple, kind):
    u, v, _ = random_triple
    f = make_kernel(kind, d=2, seed=4)
    assert eval_form_full(f, 1.8, u, v).value == eval_form_full(f, 1.8, v, u).value
    assert eval_form_inner(f, 1.8, u, v).value == eval_form_inner(f, 1.8, v, u).value


@pytest.mark.parametrize("kind", ["j1", "j4"])
def test_bilinearity(random_triple, kind):
    u, w, v = random_triple
    f = make_kernel(kind, d=2)
    lhs = eval_form_full(f, 1.8, 2.0 * u - 0.5 * w, v).value
    rhs = 2.0 * eval_form_full(f, 1.8, u, v).value - 0.5 * eval_form_full(f, 1.8, w, v).value
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11 * abs(eval_form_full(f, 1.8, u, u).value))


def test_cauchy_schwarz_and_positivity(random_triple):
    f = make_kernel("j4", d=2)
    for u in random_triple:
        assert eval_form_full(f, 1.6, u, u).value > 0
    for u in random_triple:
        for v in random_triple:
            uv = eval_form_full(f, 1.6, u, v).value
            assert uv**2 <= eval_form_full(f, 1.6, u, u).value * eval_form_full(f, 1.6, v, v).value * (1 + 1e-12)


def test_scaling(random_triple):
    u = random_triple[0]
    f = make_kernel("j1", d=2)
    base = eval_form_inner(f, 1.7, u, u).value
    assert eval_form_inner(f, 1.7, 3.0 * u, 3.0 * u).value == pytest.approx(9 * base, rel=1e-14)


def test_jobs_determinism(random_triple):
    u, v, _ = random_triple
    f = make_kernel("j1", d=2)
    a = eval_form_full(f, 1.9, u, v, jobs=1)
    b = eval_form_full(f, 1.9, u, v, jobs=4)
    assert a == b


# ------------------------------------------------------------ full form


def test_full_form_zero_collar_oracle(line8):
    # E(u, v) = E_Omega(u, v) + 2 int_Omega u v m(x) dx, m = int_{Omega^c} J
    a = 1.6
    e = 2 - a
    u = sample_function(line8, lambda x: x * (1 - x), "V_nu_zero_complement")
    v = sample_function(line8, lambda x: np.sin(np.pi * x), "V_nu_zero_complement")
    f = make_kernel("j4", d=1)
    rep = eval_form_full(f, a, u, v)
    m = lambda x: e**-3 * (max(0.0, e - x) + max(0.0, e - (1 - x)))
    g = lambda x: float(u.evaluate([x])[0] * v.evaluate([x])[0]) * m(x)
    pts = sorted(set(np.linspace(0, 1, 9).tolist() + [e, 1 - e]))
    cross = sum(integrate.quad(g, p, q, epsabs=0, epsrel=1e-12)[0] for p, q in zip(pts[:-1], pts[1:]))
    assert rep.cross == pytest.approx(cross, rel=1e-10)
    assert rep.value == pytest.approx(eval_form_inner(f, a, u, v).value + 2 * cross, rel=1e-10)


def test_full_form_needs_collar(line8):
    u = sample_function(line8, lambda x: x, "H_nu_on_Omega")
    with pytest.raises(ValueError):
        eval_form_full(make_kernel("j1", d=1), 1.5, u, u)


def test_mismatched_domains(line8, square4):
    u = sample_function(line8, lambda x: x)
    v = sample_function(build_domain({"dim": 1, "geometry": [0, 1], "n": 8, "r_trunc": 2}), lambda x: x)
    with pytest.raises(ValueError):
        eval_form_inner(make_kernel("j1", d=1), 1.5, u, v)


def test_cross_term_vanishes_for_compact_support():
    dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 32, "r_trunc": 3})
    u = sample_function(dom, lambda x: np.where(np.abs(x - 0.5) < 0.3, np.cos(np.pi * (x - 0.5) / 0.6) ** 2, 0.0))
    f = make_kernel("j1", d=1)
    cross = [eval_form_full(f, a, u, u).cross for a in SWEEP]
    assert all(b < a for a, b in zip(cross, cross[1:]))
    assert cross[-1] < 1e-3


def test_tail_bound_reported(line8):
    u = sample_function(line8, lambda x: 1 + 0 * x)
    rep = eval_form_full(make_kernel("j1", d=1), 1.5, u, u)
    tail = line8.kernel_tail(make_kernel("j1", d=1), 1.5)
    assert rep.tail_bound == pytest.approx(8 * tail, rel=1e-12)
    assert eval_form_full(make_kernel("j4", d=1), 1.5, u, u).tail_bound == 0.0


def test_quad_tol(line8):
    u = sample_function(line8, lambda x: np.sin(3 * x))
    f = make_kernel("j1", d=1)
    rep = eval_form_full(f, 1.9, u, u)
    assert rep.quadrature_error_estimate > 0
    with pytest.raises(QuadratureError):
        eval_form_full(f, 1.9, u, u, quad_tol=rep.quadrature_error_estimate / 10)
    eval_form_full(f, 1.9, u, u, quad_tol=1e-6)


# ------------------------------------------------------ norms/seminorms


def test_norm_relations(line8):
    nu = make_mollifier("power_law", d=1).nu(1.9)
    u = sample_function(line8, lambda x: x, "H_nu_on_Omega")
    assert seminorm_H_nu(nu, u) ** 2 == pytest.approx(1 - 0.1 / 1.1, rel=1e-10)
    assert norm_H_nu(nu, u) ** 2 == pytest.approx(1 / 3 + 1 - 0.1 / 1.1, rel=1e-10)
    z = sample_function(line8, lambda x: 0 * x, "H_nu_on_Omega")
    assert seminorm_H_nu(nu, z) == 0.0


def test_bounded_kernel_accepts_indicator(line8):
    u = sample_function(line8, lambda x: (x < 0.5).astype(float), "H_nu_on_Omega", basis="constant")
    s = seminorm_H_nu((make_kernel("j4", d=1), 1.5), u)
    assert np.isfinite(s) and s > 0


def test_triple_norm_below_full(line8, rng):
    nu = make_mollifier("power_law", d=1).nu(1.5)
    u = GridFunction(line8, rng.standard_normal(line8.n_nodes))
    assert norm_V_nu_triple(nu, u) <= norm_V_nu_full(nu, u)


def test_norms_coincide_on_zero_complement(line8):
    nu = make_mollifier("power_law", d=1).nu(1.5)
    u = sample_function(line8, lambda x: 1 + 0 * x, "V_nu_zero_complement")
    t = norm_V_nu_triple(nu, u)
    assert t == pytest.approx(norm_V_nu_full(nu, u), rel=1e-14)
    assert t**2 == pytest.approx(u.l2_norm() ** 2 + seminorm_V_nu(nu, u) ** 2, rel=1e-14)


def test_norm_bad_argument(line8):
    u = sample_function(line8, lambda x: x)
    with pytest.raises(TypeError):
        seminorm_V_nu("nu", u)


# ------------------------------------------------------------ local form


def test_local_form(line8, square4):
    u = sample_function(line8, lambda x: x, "H_nu_on_Omega")
    assert eval_form_local(np.eye(1), u, u) == pytest.approx(1.0, rel=1e-14)
    w = sample_function(square4, lambda p: p[:, 0] + p[:, 1])
    assert eval_form_local(np.eye(2), w, w) == pytest.approx(2.0, rel=1e-14)
    assert eval_form_local(2 * np.eye(2), w, w) == pytest.approx(4.0, rel=1e-14)
    q = sample_function(square4, lambda p: p[:, 0] * p[:, 1])
    # bilinear functions are reproduced exactly: int x^2 + y^2 = 2/3
    assert eval_form_local(np.eye(2), q, q) == pytest.approx(2 / 3, rel=1e-14)
    with pytest.raises(ValueError):
        eval_form_local(np.eye(3), w, w)


# ------------------------------------------------------ diffusion matrix


@pytest.mark.parametrize("d", [1, 2])
def test_diffusion_matrix_nu(d):
    dm = diffusion_matrix(make_kernel("nu", d=d), np.full(d, 0.5), 1.0, SWEEP)
    # every iterate already equals I/d: int h_i h_j nu = delta_ij / d
    for m in dm.matrices:
        np.testing.assert_allclose(m, np.eye(d) / d, atol=1e-10)
    np.testing.assert_allclose(dm.entries, np.eye(d) / d, atol=1e-10)
    assert dm.converged and dm.delta_independent


@pytest.mark.parametrize("d", [1, 2])
def test_diffusion_matrix_j1_iterates(d):
    dm = diffusion_matrix(make_kernel("j1", d=d), np.zeros(d), 0.5, SWEEP)
    om = sphere_area(d)
    for a, m in zip(SWEEP, dm.matrices):
        ref = frac_laplacian_constant(d, a) * om / d * 0.5 ** (2 - a) / (2 - a)
        np.testing.assert_allclose(m, ref * np.eye(d), rtol=1e-10, atol=1e-12)
    # C ~ 2 d (2 - alpha) / om makes the limit twice the identity
    np.testing.assert_allclose(dm.entries, 2 * np.eye(d), atol=1e-5)


@pytest.mark.parametrize("d", [1, 2])
def test_diffusion_matrix_j4(d):
    dm = diffusion_matrix(make_kernel("j4", d=d), np.zeros(d), 0.5, SWEEP)
    om = sphere_area(d)
    np.testing.assert_allclose(dm.entries, om / (d * (d + 2)) * np.eye(d), atol=1e-10)


def test_diffusion_matrix_scaled_nu_gives_2I():
    # the kernel 2 d |h|^-2 rho, i.e. 2 d nu, has A = 2 I
    dm = diffusion_matrix(make_kernel("nu", d=2), np.zeros(2), 1.0, SWEEP)
    np.testing.assert_allclose(2 * 2 * dm.entries, 2 * np.eye(2), atol=1e-10)


def test_diffusion_matrix_ellipticity_perturbed():
    f = make_kernel("perturbed", d=2, seed=7)
    dm = diffusion_matrix(f, [0.3, 0.6], 0.5, SWEEP)
    ev = dm.eigenvalues()
    assert np.all(ev >= 1 / (2 * f.lam) - 1e-3) and np.all(ev <= f.lam / 2 + 1e-3)
    np.testing.assert_allclose(dm.entries, dm.entries.T)


def test_diffusion_matrix_validation():
    f = make_kernel("j1", d=1)
    with pytest.raises(ValueError):
        diffusion_matrix(f, [0.0], 0.0, SWEEP)
    with pytest.raises(ValueError):
        diffusion_matrix(f, [0.0], 1.0, (1.9, 1.5))


def test_diffusion_matrix_not_cauchy_flag():
    dm = diffusion_matrix(make_kernel("j1", d=1), [0.0], 1.0, (0.5, 1.0), matrix_tol=1e-3)
    assert not dm.converged
    assert dm.cauchy_gaps[0] > 1e-3


# --------------------------------------------------------- concentration


def test_concentration_power_law():
    fam = make_mollifier("power_law", d=2)
    eps = [0.5, 0.1, 0.01]
    vals = concentration_integral(fam, 2.0, 1.0, eps)
    for e, v in zip(eps, vals):
        ref, _ = integrate.quad(lambda r: e, 0, 1, weight="alg", wvar=(1 + e, 0), epsabs=0, epsrel=1e-13)
        assert v == pytest.approx(ref, rel=1e-12)
        assert v == pytest.approx(e / (2 + e), rel=1e-14)
    assert vals[-1] == pytest.approx(0.004975124378109453, rel=1e-12)


@pytest.mark.parametrize("fid", ["power_law", "bounded_poly", "log_annulus"])
def test_concentration_limits(fid):
    fam = make_mollifier(fid, d=1)
    eps = [e for e in (0.5, 0.1, 0.01, 1e-3) if e < fam.eps_max]
    zero = concentration_integral(fam, 0.0, 1.0, eps)
    np.testing.assert_allclose(zero, 1.0, atol=1e-10)
    one = concentration_integral(fam, 1.0, 1.0, eps)
    assert all(b < a for a, b in zip(one, one[1:]))
    with pytest.raises(ValueError):
        concentration_integral(fam, -1.0, 1.0, eps)


# ------------------------------------------------------------- smoothing


def test_smoothing_constant(square4):
    u = sample_function(square4, lambda p: 2.5 + 0 * p[:, 0])
    v = smooth_approximation(u, 0.2)
    inside = square4.closure_nodes.ravel()
    np.testing.assert_allclose(v.full()[inside], 2.5, rtol=1e-14)


def test_smoothing_converges(line8):
    dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 64, "r_trunc": 2})
    u = sample_function(dom, lambda x: np.sin(2 * x))
    errs = [(smooth_approximation(u, e) - u).l2_norm() for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]
    # the shift dominates: error ~ tau eps |u'|
    assert errs[-1] < 0.2


def test_smoothing_indicator_seminorm_decreases():
    dom = build_domain({"dim": 1, "geometry": [0, 1], "n": 64, "r_trunc": 2})
    u = sample_function(dom, lambda x: ((x > 0) & (x < 0.5)).astype(float), basis="constant")
    nu = make_mollifier("power_law", d=1).nu(0.5)
    s = [seminorm_V_nu(nu, smooth_approximation(u, e) - u) for e in (0.2, 0.1, 0.05, 0.025)]
    assert all(b < a for a, b in zip(s, s[1:]))


def test_smoothing_errors(line8):
    u = sample_function(line8, lambda x: x)
    with pytest.raises(ValueError):
        smooth_approximation(u, 0.5)
    with pytest.raises(ValueError):
        smooth_approximation(u, 0.1, direction=[2.0])
    with pytest.raises(ValueError):
        smooth_approximation(sample_function(line8, lambda x: x, "H_nu_on_Omega"), 0.1)


# ------------------------------------------------------ property checks

from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

_SMALL = build_domain({"dim": 1, "geometry": [0, 1], "n": 4, "r_trunc": 1.5})
_coef = arrays(np.float64, _SMALL.n_nodes, elements=st.floats(-10, 10, allow_nan=False, width=64))


@settings(max_examples=40, deadline=None)
@given(_coef, _coef, st.sampled_from([0.7, 1.3, 1.9]))
def test_property_symmetry_and_cauchy_schwarz(a, b, alpha):
    f = make_kernel("j4", d=1)
    u, v = GridFunction(_SMALL, a), GridFunction(_SMALL, b)
    uv = eval_form_full(f, alpha, u, v).value
    assert uv == eval_form_full(f, alpha, v, u).value
    uu = eval_form_full(f, alpha, u, u).value
    vv = eval_form_full(f, alpha, v, v).value
    assert uu >= 0 and vv >= 0
    assert uv**2 <= uu * vv * (1 + 1e-10) + 1e-20
