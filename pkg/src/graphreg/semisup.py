"""Semi-supervised label handling: Voronoi extension, 1-NN prediction, k-NN.

The Voronoi extension assigns every sample the label of its nearest labeled
sample (ties broken by lowest labeled index, so the assignment is
deterministic).  Out-of-sample prediction is the 1-NN extension of a solved
regressor to arbitrary ambient points, with exact distance ties averaged.

Distances follow the manifold: plain Euclidean on the unit square and the
sphere (chordal), the periodic metric on the flat torus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidK
from .geograph import eps_pairs
from .manifolds import LabeledDataset, ManifoldSpec, PointCloud

__all__ = [
    "VoronoiAssignment",
    "VoronoiStats",
    "voronoi_extend",
    "out_of_sample",
    "voronoi_stats",
    "knn_regress",
]

_CHUNK = 256


@dataclass
class VoronoiAssignment:
    """owner[i] = index (< q) of the nearest labeled sample; extended_y = labels[owner]."""

    owner: np.ndarray
    extended_y: np.ndarray


def _nearest_labeled(points: np.ndarray, labeled: np.ndarray, manifold: ManifoldSpec) -> np.ndarray:
    """Index of the nearest labeled point per row, lowest index on exact ties."""
    n = points.shape[0]
    owner = np.empty(n, dtype=np.int64)
    for start in range(0, n, _CHUNK):
        block = points[start:start + _CHUNK]
        d2 = manifold.sq_distance_matrix(block, labeled)
        owner[start:start + _CHUNK] = np.argmin(d2, axis=1)  # first occurrence = lowest index
    return owner


def voronoi_extend(dataset: LabeledDataset) -> VoronoiAssignment:
    """Extend the q labels to all n samples by nearest labeled point.

    Labeled samples own themselves (distance zero); this holds even for
    exactly duplicated labeled points, where the lowest-index rule would
    otherwise reassign them.
    """
    cloud, q = dataset.cloud, dataset.q
    owner = np.empty(cloud.n, dtype=np.int64)
    owner[:q] = np.arange(q)
    if q < cloud.n:
        owner[q:] = _nearest_labeled(cloud.points[q:], cloud.points[:q], cloud.manifold)
    return VoronoiAssignment(owner=owner, extended_y=dataset.labels[owner])


def out_of_sample(cloud: PointCloud, u: np.ndarray, x: np.ndarray):
    """1-NN extension of u to query point(s) x; exact ties are averaged.

    Accepts a single point (d,) or a batch (k, d); returns a scalar or (k,).
    Ties are decided on exact squared-distance equality, so a query midway
    between two samples averages their values.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (cloud.n,):
        raise DimensionMismatch(f"expected u of length {cloud.n}, got shape {u.shape}")
    queries = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 1
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], _CHUNK):
        block = queries[start:start + _CHUNK]
        d2 = cloud.manifold.sq_distance_matrix(block, cloud.points)
        mins = d2.min(axis=1, keepdims=True)
        ties = d2 == mins
        out[start:start + _CHUNK] = (ties @ u) / ties.sum(axis=1)
    return float(out[0]) if scalar else out


@dataclass
class VoronoiStats:
    """Empirical Voronoi diagnostics over the sampled points."""

    max_diameter: float
    max_cell_count_in_ball: int
    nonempty_cells_per_ball_max: int


def voronoi_stats(dataset: LabeledDataset, eps: float) -> VoronoiStats:
    """Diagnostics: largest cell diameter, and cell occupancy within eps-balls.

    ``max_cell_count_in_ball`` is the largest number of samples of a single
    cell inside any ball B(x_i, eps); ``nonempty_cells_per_ball_max`` the
    largest number of distinct cells meeting such a ball.  Balls use the
    strict predicate dist < eps and include their own center.
    """
    cloud, q = dataset.cloud, dataset.q
    pts, manifold = cloud.points, cloud.manifold
    owner = voronoi_extend(dataset).owner

    max_diam = 0.0
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(q + 1))
    for c in range(q):
        members = order[bounds[c]:bounds[c + 1]]
        if members.size < 2:
            continue
        cell_pts = pts[members]
        for start in range(0, members.size, _CHUNK):
            d2 = manifold.sq_distance_matrix(cell_pts[start:start + _CHUNK], cell_pts)
            max_diam = max(max_diam, float(d2.max()))
    max_diam = float(np.sqrt(max_diam))

    ii, jj, _ = eps_pairs(pts, manifold, eps)
    centers = np.concatenate([ii, jj, np.arange(cloud.n)])
    cell_of = np.concatenate([owner[jj], owner[ii], owner])
    pair_key = centers * q + cell_of
    uniq_pairs, counts = np.unique(pair_key, return_counts=True)
    k_max = int(counts.max()) if counts.size else 0
    n_max = int(np.bincount(uniq_pairs // q, minlength=cloud.n).max()) if uniq_pairs.size else 0
    return VoronoiStats(
        max_diameter=max_diam,
        max_cell_count_in_ball=k_max,
        nonempty_cells_per_ball_max=n_max,
    )


def knn_regress(dataset: LabeledDataset, k: int) -> np.ndarray:
    """Mean label of the k nearest labeled points, per sample.

    Distance ties at the k-th neighbor are resolved toward lower labeled
    indices, so k=1 reproduces the Voronoi extension exactly.
    """
    q = dataset.q
    if not 1 <= k <= q:
        raise InvalidK(f"k={k} outside [1, {q}]")
    cloud = dataset.cloud
    labeled = cloud.points[:q]
    if k == q:
        return np.full(cloud.n, dataset.labels.mean())
    out = np.empty(cloud.n)
    for start in range(0, cloud.n, _CHUNK):
        block = cloud.points[start:start + _CHUNK]
        d2 = cloud.manifold.sq_distance_matrix(block, labeled)
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        ambiguous = (d2 <= kth[:, None]).sum(axis=1) > k
        out[start:start + _CHUNK] = dataset.labels[part].mean(axis=1)
        for r in np.flatnonzero(ambiguous):
            row = d2[r]
            cand = np.flatnonzero(row <= kth[r])
            # stable sort on distance keeps lowest indices among ties
            cand = cand[np.argsort(row[cand], kind="stable")][:k]
            out[start + r] = dataset.labels[cand].mean()
    return out
