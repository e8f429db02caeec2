import numpy as np
import pytest

from nonlocal_mosco.domains import (
    GridFunction,
    build_domain,
    l2_inner,
    region_pairs,
    sample_function,
)
from nonlocal_mosco.kernels import make_kernel

UNIT = {"dim": 1, "geometry": {"interval": [0.0, 1.0]}, "n": 4, "r_trunc": 2.0}
SQUARE = {"dim": 2, "geometry": "unit_square", "n": 2, "r_trunc": 1.5}


def test_interval_nodes():
    dom = build_domain(UNIT)
    x = dom.node_coords[dom.interior_index, 0]
    np.testing.assert_allclose(x, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    col = dom.node_coords[dom.collar_index, 0]
    assert np.all((col < 0) | (col > 1))
    assert col.min() == pytest.approx(-2.0) and col.max() == pytest.approx(2.0)


def test_square_nodes():
    dom = build_domain(SQUARE)
    assert len(dom.interior_index) == 9
    pts = dom.node_coords[dom.collar_index]
    assert np.all(np.any((pts < 0) | (pts > 1), axis=1))


@pytest.mark.parametrize("spec", [UNIT, SQUARE])
def test_node_partition(spec):
    dom = build_domain(spec)
    both = np.concatenate([dom.interior_index, dom.collar_index])
    assert len(np.unique(both)) == len(both) == dom.n_nodes


def test_open_nodes_exclude_boundary():
    dom = build_domain(UNIT)
    np.testing.assert_allclose(dom.node_coords[dom.open_index, 0], [0.25, 0.5, 0.75], atol=1e-15)


def test_deterministic():
    a, b = build_domain(SQUARE), build_domain(SQUARE)
    np.testing.assert_array_equal(a.node_coords, b.node_coords)
    pa = [(p.first, p.second, p.singular) for p in region_pairs(a, "omega_complement")]
    pb = [(p.first, p.second, p.singular) for p in region_pairs(b, "omega_complement")]
    assert pa == pb


def test_polygon_l_shape():
    L = [[0, 0], [1, 0], [1, 0.5], [0.5, 0.5], [0.5, 1], [0, 1]]
    dom = build_domain({"dim": 2, "geometry": {"polygon": L}, "n": 4, "r_trunc": 2.0})
    assert dom.measure == pytest.approx(0.75)
    # 3x3 block of the bounding box nodes plus the inner arm
    assert len(dom.interior_index) == 25 - 4


@pytest.mark.parametrize(
    "spec",
    [
        {"dim": 1, "geometry": [0, 1], "n": 4, "r_trunc": 0.9},
        {"dim": 1, "geometry": [0, 1], "n": 0, "r_trunc": 2},
        {"dim": 3, "geometry": [0, 1], "n": 4, "r_trunc": 2},
        {"dim": 1, "geometry": [1, 1], "n": 4, "r_trunc": 2},
        {"dim": 2, "geometry": {"polygon": [[0, 0], [1, 0], [0, 1]]}, "n": 4, "r_trunc": 2},
        {"dim": 2, "geometry": {"polygon": [[0, 0], [1, 0], [1, 1], [0.3, 1]]}, "n": 4, "r_trunc": 2},
        {"dim": 1, "n": 4, "r_trunc": 2},
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(ValueError):
        build_domain(spec)


def test_truncation_tail_check():
    j1 = make_kernel("j1", d=1)
    with pytest.raises(ValueError, match="r_trunc"):
        build_domain({**UNIT, "tail_tol": 1e-10}, j1, [1.5])
    j4 = make_kernel("j4", d=1)
    build_domain({**UNIT, "tail_tol": 1e-10}, j4, [1.5])


def test_sample_linear():
    dom = build_domain(UNIT)
    u = sample_function(dom, lambda x: x, "H_nu_on_Omega")
    np.testing.assert_allclose(u.coefficients, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    full = sample_function(dom, lambda x: x)
    np.testing.assert_allclose(full.coefficients, dom.node_coords[:, 0])


def test_sample_zero_complement():
    dom = build_domain(UNIT)
    u = sample_function(dom, lambda x: 1 + 0 * x, "V_nu_zero_complement")
    assert u.full()[dom.open_index].tolist() == [1.0, 1.0, 1.0]
    assert np.count_nonzero(u.full()) == 3


def test_gridfunction_validation():
    dom = build_domain(UNIT)
    with pytest.raises(ValueError):
        GridFunction(dom, np.zeros(3), "H_nu_on_Omega")
    with pytest.raises(ValueError):
        GridFunction(dom, np.ones(dom.n_nodes), "V_nu_zero_complement")
    with pytest.raises(ValueError):
        GridFunction(dom, np.zeros(dom.n_nodes), "H1")
    c = np.zeros(dom.n_nodes)
    u = GridFunction(dom, c)
    c[0] = 5.0
    assert u.coefficients[0] == 0.0


def test_gridfunction_arithmetic():
    dom = build_domain(SQUARE)
    u = sample_function(dom, lambda p: p[:, 0])
    v = sample_function(dom, lambda p: p[:, 1], "H_nu_on_Omega")
    w = 2.0 * u - v
    assert w.space_tag == "H_nu_on_Omega"
    np.testing.assert_allclose(w.evaluate([[0.3, 0.7]]), [2 * 0.3 - 0.7])


def test_l2_inner_exact():
    dom = build_domain({**UNIT, "n": 8})
    u = sample_function(dom, lambda x: x)
    assert l2_inner(u, u) == pytest.approx(1 / 3, rel=1e-14)
    dom2 = build_domain({**SQUARE, "n": 4})
    u = sample_function(dom2, lambda p: p[:, 0] * p[:, 1])
    assert l2_inner(u, u) == pytest.approx(1 / 9, rel=1e-14)


def test_constant_basis():
    dom = build_domain(UNIT)
    u = sample_function(dom, lambda x: x, basis="P0")
    assert u.basis == "constant"
    assert len(u.coefficients) == dom.n_cells
    assert l2_inner(u, u) == pytest.approx(0.25 * (0.125**2 + 0.375**2 + 0.625**2 + 0.875**2))


def test_region_pairs_1d_n2():
    dom = build_domain({**UNIT, "n": 2})
    pairs = list(region_pairs(dom, "omega_omega"))
    assert len(pairs) == 4
    # with two cells every pair touches (self or adjacent)
    assert sum(p.singular for p in pairs) == 4


def test_region_pairs_regular_distance():
    dom = build_domain(UNIT)
    pairs = list(region_pairs(dom, "omega_omega"))
    reg = [p for p in pairs if not p.singular]
    assert len(reg) == 16 - 4 - 6
    assert sorted({round(p.distance, 12) for p in reg}) == [0.25, 0.5]


@pytest.mark.parametrize("spec", [UNIT, SQUARE])
def test_region_pair_counts_and_measure(spec):
    dom = build_domain(spec)
    oo = list(region_pairs(dom, "omega_omega"))
    oc = list(region_pairs(dom, "omega_complement"))
    assert len(oc) == len(dom.omega_cell_index) * len(dom.collar_cell_index)
    assert sum(p.measure for p in oo) == pytest.approx(dom.measure**2, abs=1e-12)


def test_decomposition_identity():
    # sum over Omega x Omega + 2 sum over Omega x collar equals the integral of
    # a symmetric F over the box squared minus collar x collar
    dom = build_domain(SQUARE)
    c = dom.cell_centers
    F = lambda a, b: np.exp(-np.sum((c[a] - c[b]) ** 2, axis=-1))
    s = sum(F(p.first, p.second) * p.measure for p in region_pairs(dom, "omega_omega"))
    s += 2 * sum(F(p.first, p.second) * p.measure for p in region_pairs(dom, "omega_complement"))
    idx = np.arange(dom.n_cells)
    A, B = np.meshgrid(idx, idx, indexing="ij")
    keep = dom.omega_cells.ravel()[A] | dom.omega_cells.ravel()[B]
    ref = np.sum(F(A, B)[keep]) * dom.cell_volume**2
    assert s == pytest.approx(ref, rel=1e-12)


def test_region_invalid():
    with pytest.raises(ValueError):
        list(region_pairs(build_domain(UNIT), "complement_complement"))


def test_shrink():
    dom = build_domain({**SQUARE, "n": 8})
    sub = dom.shrink(2)
    assert sub.measure == pytest.approx(0.25)
    assert sub.node_shape == dom.node_shape
    with pytest.raises(ValueError):
        dom.shrink(4)


def test_immutable_arrays():
    dom = build_domain(UNIT)
    with pytest.raises(ValueError):
        dom.node_coords[0, 0] = 1.0
