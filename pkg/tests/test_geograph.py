import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphreg import (
    BUMP,
    FLAT_TORUS,
    INDICATOR,
    SPHERE,
    UNIT_SQUARE,
    DimensionMismatch,
    KernelSpec,
    PointCloud,
    build_graph,
    degrees,
    dirichlet_energy,
    laplacian_apply,
    random_walk_laplacian_apply,
    sample_cloud,
    tau_eta,
)


# --------------------------------------------------------------------------
# Kernel constants, checked against quadrature oracles


def _quad_moments(kernel, order=200):
    """Gauss-Legendre oracle for int eta and int z1^2 eta over R^m."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    r = 0.5 * (nodes + 1.0)
    wr = 0.5 * weights
    eta_r = kernel.eval(r)
    m = kernel.m
    if m == 1:
        # int_{-1}^{1} eta(|z|) dz and int z^2 eta(|z|) dz
        return 2.0 * wr @ eta_r, 2.0 * wr @ (r ** 2 * eta_r)
    if m == 2:
        tnodes, tweights = np.polynomial.legendre.leggauss(order)
        theta = np.pi * (tnodes + 1.0)
        wt = np.pi * tweights
        mass = (wr * r) @ eta_r * wt.sum()
        second = (wr @ (r ** 3 * eta_r)) * (wt @ np.cos(theta) ** 2)
        return mass, second
    raise NotImplementedError


@pytest.mark.parametrize(
    "kernel,expected_tau",
    [
        (BUMP, 3.0 / 20.0),
        (INDICATOR, 0.25),
        (KernelSpec("indicator", 1), 1.0 / 3.0),
        (KernelSpec("bump", 1), 1.0 / 6.0),
    ],
)
def test_tau_eta_closed_forms_match_quadrature(kernel, expected_tau):
    mass, second = _quad_moments(kernel)
    assert abs(mass - 1.0) <= 1e-12
    assert abs(second - kernel.tau_eta) <= 1e-10
    assert tau_eta(kernel) == pytest.approx(expected_tau, rel=1e-14)


def test_kernel_properties():
    assert BUMP.lipschitz and not INDICATOR.lipschitz
    t = np.linspace(0, 2, 101)
    vals = BUMP.eval(t)
    assert (np.diff(vals) <= 1e-15).all()  # non-increasing
    assert (vals[t >= 1.0] == 0.0).all()
    assert (vals >= 0).all()


# --------------------------------------------------------------------------
# Construction


def test_far_apart_points_have_no_edges():
    pts = np.array([[0.1, 0.5], [0.6, 0.5]])  # distance 0.5
    cloud = PointCloud(manifold=UNIT_SQUARE, points=pts, n=2, seed=0)
    g = build_graph(cloud, 0.4, BUMP)
    assert g.indices.size == 0
    assert np.all(g.degrees == 0.0)


def test_hand_three_point_graph(hand_cloud, hand_graph):
    g = hand_graph
    assert list(g.neighbors(0)) == [1]
    assert list(g.neighbors(1)) == [0, 2]
    assert list(g.neighbors(2)) == [1]

    eps, n = 0.15, 3
    # hand evaluation of the weight formula for the (0, 1) edge
    expected_w = 2.0 / (BUMP.tau_eta * eps ** 4 * n) * BUMP.eval(0.1 / 0.15)
    w01 = g.w[g.indptr[0]]
    assert w01 == pytest.approx(expected_w, rel=1e-13)

    # degrees from hand-evaluated eta_ij = eta(dist/eps) / (n eps^2)
    eta01 = BUMP.eval(0.1 / 0.15) / (n * eps ** 2)
    assert degrees(g) == pytest.approx([eta01, 2 * eta01, eta01], rel=1e-13)
    # w and eta tied by the closed-form ratio
    assert g.w == pytest.approx(2.0 / (BUMP.tau_eta * eps ** 2) * g.eta, rel=1e-13)


@pytest.mark.parametrize(
    "manifold,eps_list",
    [
        (UNIT_SQUARE, (0.05, 0.12, 0.3, 0.5, 2.0)),
        (FLAT_TORUS, (0.05, 0.12, 0.3, 0.34, 0.9)),
        (SPHERE, (0.2, 0.5, 0.7, 2.5)),
    ],
)
def test_bucketed_equals_all_pairs_bit_exactly(manifold, eps_list):
    cloud = sample_cloud(manifold, 300, 42)
    for eps in eps_list:
        a = build_graph(cloud, eps, BUMP)
        b = build_graph(cloud, eps, BUMP, method="all_pairs")
        assert np.array_equal(a.indptr, b.indptr), eps
        assert np.array_equal(a.indices, b.indices), eps
        assert np.array_equal(a.w, b.w), eps
        assert np.array_equal(a.eta, b.eta), eps


def test_weights_symmetric_exactly():
    cloud = sample_cloud(FLAT_TORUS, 200, 7)
    g = build_graph(cloud, 0.15, BUMP)
    w = g.w_csr
    assert (w != w.T).nnz == 0
    assert (w.diagonal() == 0).all()
    assert (g.w >= 0).all()


def test_eps_must_be_positive_and_kernel_dim_checked():
    cloud = sample_cloud(UNIT_SQUARE, 10, 0)
    with pytest.raises(ValueError):
        build_graph(cloud, 0.0, BUMP)
    with pytest.raises(ValueError):
        build_graph(cloud, 0.1, KernelSpec("bump", 1))


# --------------------------------------------------------------------------
# Operators


def test_laplacian_kills_constants(hand_graph):
    out = laplacian_apply(hand_graph, np.full(3, 3.7))
    assert np.all(out == 0.0)


def test_laplacian_two_vertex(two_vertex):
    _, g = two_vertex
    w = g.w[0]
    out = laplacian_apply(g, np.array([1.0, 0.0]))
    assert out == pytest.approx([w, -w], rel=1e-15)


def test_dirichlet_energy_two_vertex(two_vertex):
    # (1/2) * (w + w) * 1 = w for u = (1, 0) on the single edge
    _, g = two_vertex
    assert dirichlet_energy(g, np.array([1.0, 0.0])) == pytest.approx(g.w[0], rel=1e-15)
    assert dirichlet_energy(g, np.full(2, 5.0)) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_laplacian_identities_random_vectors(seed):
    cloud = sample_cloud(UNIT_SQUARE, 50, 11)
    g = build_graph(cloud, 0.25, BUMP)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(50)
    v = rng.standard_normal(50)
    lap_u = laplacian_apply(g, u)
    lap_v = laplacian_apply(g, v)
    quad = float(u @ lap_u)
    assert quad >= -1e-12
    # symmetry <u, Lv> = <v, Lu>
    scale = max(abs(float(u @ lap_v)), 1e-30)
    assert abs(float(u @ lap_v) - float(v @ lap_u)) / scale <= 1e-12
    # energy identity <u, Lu> = (n/2) R(u)
    energy = dirichlet_energy(g, u)
    assert abs(quad - 0.5 * g.n * energy) <= 1e-12 * max(quad, 1.0)


def test_random_walk_laplacian(two_vertex):
    _, g = two_vertex
    u = np.array([2.0, -1.0])
    # the weight cancels: output is (u1 - u2, u2 - u1)
    assert random_walk_laplacian_apply(g, u) == pytest.approx([3.0, -3.0], rel=1e-15)
    assert np.all(random_walk_laplacian_apply(g, np.full(2, 0.3)) == 0.0)


def test_random_walk_row_sums_and_isolated_vertices():
    pts = np.array([[0.0, 0.0], [0.05, 0.0], [0.9, 0.9]])
    cloud = PointCloud(manifold=UNIT_SQUARE, points=pts, n=3, seed=0)
    g = build_graph(cloud, 0.1, BUMP)
    # implied random-walk weights sum to one on non-isolated rows
    for i in range(2):
        nbrs = g.neighbors(i)
        row_w = g.w[g.indptr[i]:g.indptr[i + 1]]
        assert row_w.sum() / g.weight_degrees[i] == pytest.approx(1.0, rel=1e-15)
        assert nbrs.size == 1
    # isolated vertex maps to zero
    out = random_walk_laplacian_apply(g, np.array([1.0, 2.0, 3.0]))
    assert out[2] == 0.0


def test_degrees_isolated_vertex_zero_and_recompute_exact():
    pts = np.array([[0.0, 0.0], [0.05, 0.0], [0.9, 0.9]])
    cloud = PointCloud(manifold=UNIT_SQUARE, points=pts, n=3, seed=0)
    g = build_graph(cloud, 0.1, BUMP)
    assert g.degrees[2] == 0.0
    recomputed = np.array([g.eta[g.indptr[i]:g.indptr[i + 1]].sum() for i in range(3)])
    assert np.array_equal(recomputed, degrees(g))


def test_degree_concentration_monte_carlo():
    # dense limit: degrees concentrate around the kernel mass K_eps(x) = 1;
    # mirrors the two-sided bound 1/(2 C) <= g <= 2 C
    hits = 0
    for seed in range(20):
        cloud = sample_cloud(FLAT_TORUS, 5000, seed)
        g = build_graph(cloud, 0.1, BUMP)
        if g.degrees.min() > 0.2 and g.degrees.max() < 5.0:
            hits += 1
    assert hits >= 19


def test_dimension_mismatch_raised(hand_graph):
    for op in (laplacian_apply, random_walk_laplacian_apply, dirichlet_energy):
        with pytest.raises(DimensionMismatch):
            op(hand_graph, np.ones(4))
