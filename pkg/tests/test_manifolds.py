import numpy as np
import pytest

from graphreg import (
    FLAT_TORUS,
    PAPER_SINE,
    SPHERE,
    UNIT_SQUARE,
    InvalidLabelCount,
    UnsupportedTrendManifoldPair,
    asym_bernoulli,
    constant_trend,
    make_dataset,
    sample_cloud,
    sum_of_sines,
    sym_bernoulli,
    trend_eval,
    trend_laplacian,
    uniform_noise,
)


def test_sampling_is_deterministic():
    a = sample_cloud(UNIT_SQUARE, 4, 7)
    b = sample_cloud(UNIT_SQUARE, 4, 7)
    assert np.array_equal(a.points, b.points)
    c = sample_cloud(UNIT_SQUARE, 4, 8)
    assert not np.array_equal(a.points, c.points)


def test_square_points_in_bounds():
    cloud = sample_cloud(UNIT_SQUARE, 200, 1)
    assert UNIT_SQUARE.contains(cloud.points).all()


def test_sphere_points_unit_norm():
    cloud = sample_cloud(SPHERE, 100, 1)
    norms = np.linalg.norm(cloud.points, axis=1)
    assert np.abs(norms - 1.0).max() <= 1e-12


def test_uniform_first_coordinate_monte_carlo():
    # Monte-Carlo over 100 seeds; the sample mean of x1 has sd ~ 0.0029 at
    # n = 10000, so |mean - 0.5| < 0.02 should hold essentially always
    hits = 0
    for seed in range(100):
        pts = sample_cloud(UNIT_SQUARE, 10000, seed).points
        if abs(pts[:, 0].mean() - 0.5) < 0.02:
            hits += 1
    assert hits >= 95


def test_torus_metric_wraps():
    a = np.array([[0.05, 0.5]])
    b = np.array([[0.95, 0.5]])
    assert FLAT_TORUS.pair_distance(a, b)[0] == pytest.approx(0.1)
    assert UNIT_SQUARE.pair_distance(a, b)[0] == pytest.approx(0.9)


def test_paper_sine_values():
    assert trend_eval(PAPER_SINE, np.array([0.5, 0.5])) == pytest.approx(1.0)
    assert trend_eval(PAPER_SINE, np.array([0.0, 0.0])) == pytest.approx(0.0, abs=1e-15)


def test_constant_trend():
    t = constant_trend(2.5)
    pts = sample_cloud(UNIT_SQUARE, 10, 0).points
    assert np.all(trend_eval(t, pts) == 2.5)
    assert np.all(trend_laplacian(t, pts) == 0.0)


def test_paper_sine_laplacian_center():
    # by hand: -(d2/dx2 + d2/dy2)[0.5 sin(pi x) + 0.5 sin(pi y)] at (.5, .5)
    # = pi^2 * (0.5 + 0.5) = pi^2
    val = trend_laplacian(PAPER_SINE, np.array([0.5, 0.5]))
    assert val == pytest.approx(np.pi ** 2, rel=1e-14)


def test_single_mode_laplacian():
    # by hand: -(d2/dx2) sin(2 pi x) = 4 pi^2 sin(2 pi x); at x = 0.25 -> 4 pi^2
    t = sum_of_sines([1.0], [(1, 0)])
    val = trend_laplacian(t, np.array([0.25, 0.7]), FLAT_TORUS)
    assert val == pytest.approx(4.0 * np.pi ** 2, rel=1e-14)


def _fd_laplacian(trend, manifold, pts, h=1e-4):
    out = np.zeros(pts.shape[0])
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = h
        out += (
            trend_eval(trend, pts + shift, manifold)
            - 2.0 * trend_eval(trend, pts, manifold)
            + trend_eval(trend, pts - shift, manifold)
        )
    return -out / h ** 2


@pytest.mark.parametrize(
    "trend,manifold",
    [
        (PAPER_SINE, UNIT_SQUARE),
        (sum_of_sines([1.0, -0.3], [(1, 0), (1, 2)]), FLAT_TORUS),
    ],
)
def test_laplacian_matches_finite_differences(trend, manifold):
    rng = np.random.default_rng(5)
    pts = 0.1 + 0.8 * rng.random((100, 2))
    exact = trend_laplacian(trend, pts, manifold)
    approx = _fd_laplacian(trend, manifold, pts)
    rel = np.abs(approx - exact) / np.maximum(np.abs(exact), 1.0)
    assert rel.max() <= 1e-5


def test_sphere_harmonic_laplacian_eigenvalue():
    # <k, x> restricted to the sphere is a degree-1 harmonic: Delta = 2 * value
    t = sum_of_sines([0.7], [(1, 2, -1)])
    pts = sample_cloud(SPHERE, 50, 3).points
    assert np.allclose(trend_laplacian(t, pts, SPHERE), 2.0 * trend_eval(t, pts, SPHERE), rtol=1e-14)


def test_paper_sine_sphere_laplacian_rejected():
    with pytest.raises(UnsupportedTrendManifoldPair):
        trend_laplacian(PAPER_SINE, np.array([0.0, 0.0, 1.0]), SPHERE)


def test_noise_exact_mean_and_bounds():
    for noise in (sym_bernoulli(0.3), asym_bernoulli(0.3, 0.8), uniform_noise(0.5)):
        assert noise.mean() == 0.0
        if noise.is_discrete:
            assert abs(noise.probs() @ noise.atoms()) <= 1e-15
            assert np.abs(noise.atoms()).max() <= noise.support_bound + 1e-15
        draws = noise.sample(np.random.default_rng(0), 1000)
        assert np.abs(draws).max() <= noise.support_bound + 1e-15


def test_asym_bernoulli_support():
    noise = asym_bernoulli(0.3, 0.8)
    assert noise.support_bound == pytest.approx(1.2)
    assert set(np.round(noise.atoms(), 12)) == {0.3, -1.2}


def test_asym_mean_zero_monte_carlo():
    noise = asym_bernoulli(0.3, 0.8)
    draws = noise.sample(np.random.default_rng(123), 10 ** 5)
    assert abs(draws.mean()) < 0.01


def test_make_dataset_fully_supervised():
    cloud = sample_cloud(UNIT_SQUARE, 50, 2)
    ds = make_dataset(cloud, PAPER_SINE, sym_bernoulli(0.3), 50, 9)
    assert ds.q == cloud.n
    assert ds.labels.shape == (50,)
    # two-point support: every label differs from mu by exactly +/- sigma
    assert np.allclose(np.abs(ds.labels - ds.trend_values), 0.3, rtol=0, atol=1e-15)


def test_make_dataset_bounds_and_errors():
    cloud = sample_cloud(UNIT_SQUARE, 20, 2)
    noise = asym_bernoulli(0.3, 0.8)
    ds = make_dataset(cloud, PAPER_SINE, noise, 5, 1)
    assert np.abs(ds.labels - ds.trend_values[:5]).max() <= noise.support_bound + 1e-15
    for bad_q in (0, 21):
        with pytest.raises(InvalidLabelCount):
            make_dataset(cloud, PAPER_SINE, noise, bad_q, 1)


def test_make_dataset_deterministic():
    cloud = sample_cloud(FLAT_TORUS, 30, 4)
    a = make_dataset(cloud, PAPER_SINE, uniform_noise(0.2), 30, 11)
    b = make_dataset(cloud, PAPER_SINE, uniform_noise(0.2), 30, 11)
    assert np.array_equal(a.labels, b.labels)
