import numpy as np
import pytest

from graphreg import BUMP, UNIT_SQUARE, PointCloud, build_graph


@pytest.fixture
def hand_cloud():
    """Three collinear points at 0, 0.1, 0.2 on the unit square."""
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0]])
    return PointCloud(manifold=UNIT_SQUARE, points=pts, n=3, seed=0)


@pytest.fixture
def hand_graph(hand_cloud):
    """eps = 0.15 with the bump kernel: edges (0,1) and (1,2) only."""
    return build_graph(hand_cloud, 0.15, BUMP)


@pytest.fixture
def two_vertex():
    """Two points at distance 0.2 with eps = 0.5: a single edge."""
    pts = np.array([[0.1, 0.5], [0.3, 0.5]])
    cloud = PointCloud(manifold=UNIT_SQUARE, points=pts, n=2, seed=0)
    return cloud, build_graph(cloud, 0.5, BUMP)
