#
# posefeat.geometry - Rigid-body math and exact neighbor search (2026-10-17)
# Copyright (c) 2026, the posefeat developers
#
# Permission to use, copy, modify, and/or distribute this software for any
# purpose with or without fee is hereby granted, provided that the above
# copyright notice and this permission notice appear in all copies.
#
# THE SOFTWARE IS PROVIDED "AS IS" AND THE AUTHOR DISCLAIMS ALL WARRANTIES WITH
# REGARD TO THIS SOFTWARE INCLUDING ALL IMPLIED WARRANTIES OF MERCHANTABILITY
# AND FITNESS. IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR ANY SPECIAL, DIRECT,
# INDIRECT, OR CONSEQUENTIAL DAMAGES OR ANY DAMAGES WHATSOEVER RESULTING FROM
# LOSS OF USE, DATA OR PROFITS, WHETHER IN AN ACTION OF CONTRACT, NEGLIGENCE OR
# OTHER TORTIOUS ACTION, ARISING OUT OF OR IN CONNECTION WITH THE USE OR
# PERFORMANCE OF THIS SOFTWARE.
#

"""Rigid-body math every other module builds on

Point clouds and poses are immutable once constructed: their arrays are
flagged read-only, so they can be shared between worker threads.
"""

import posefeat

import logging

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

# Clouds larger than this get a seeded subsample for the diameter
DIAMETER_EXACT_LIMIT = 5000
DIAMETER_SEED = 5000

ORTHONORMAL_TOLERANCE = 1e-9


class InvalidCloudError(posefeat.DataError):
    pass


class InvalidPoseError(posefeat.DataError):
    pass


class DegenerateFitError(posefeat.NumericalError):
    pass


def _frozen(array):
    array.setflags(write=False)
    return array


class PointCloud(object):
    """Positions in mm plus optional per-point RGB in [0, 1]

    >>> cloud = PointCloud([[0, 0, 0], [0, 0, 10]])
    >>> len(cloud), cloud.has_colors
    (2, False)
    """

    def __init__(self, positions, colors=None):
        positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(positions)):
            raise InvalidCloudError('Point positions must be finite')

        if colors is not None:
            colors = np.array(colors, dtype=np.float64).reshape(-1, 3)
            if len(colors) != len(positions):
                raise InvalidCloudError('Got %d colors for %d points' % (len(colors), len(positions)))
            if not np.all(np.isfinite(colors)):
                raise InvalidCloudError('Point colors must be finite')
            colors = _frozen(colors)

        self.positions = _frozen(positions)
        self.colors = colors

    def __len__(self):
        return len(self.positions)

    def __repr__(self):
        return '<PointCloud with %d points%s>' % (len(self), ', colored' if self.has_colors else '')

    @property
    def has_colors(self):
        return self.colors is not None

    def colors_or_zeros(self):
        if self.colors is None:
            return np.zeros_like(self.positions)
        return self.colors

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        colors = self.colors[indices] if self.colors is not None else None
        return PointCloud(self.positions[indices], colors)

    def with_colors(self, colors):
        return PointCloud(self.positions, colors)

    def with_positions(self, positions):
        return PointCloud(positions, self.colors)

    def require_points(self, minimum=1, what='point cloud'):
        if len(self) < minimum:
            raise InvalidCloudError('%s needs at least %d points, has %d' % (what, minimum, len(self)))


def concatenate(clouds):
    """Join clouds; colors are kept only if every cloud has them"""
    positions = np.concatenate([c.positions for c in clouds], axis=0)
    if all(c.has_colors for c in clouds):
        colors = np.concatenate([c.colors for c in clouds], axis=0)
    else:
        colors = None
    return PointCloud(positions, colors)


def orthonormality_error(rotation):
    rotation = np.asarray(rotation, dtype=np.float64)
    return float(np.max(np.abs(rotation.T @ rotation - np.eye(3))))


def nearest_rotation(matrix):
    """Project a 3x3 matrix onto SO(3) (polar decomposition via SVD)"""
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt)) or 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


class RigidPose(object):
    """Rotation (3x3) and translation (mm) mapping model into scene coordinates"""

    def __init__(self, rotation, translation):
        rotation = np.array(rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(translation, dtype=np.float64).reshape(3)

        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise InvalidPoseError('Pose contains non-finite values')

        error = orthonormality_error(rotation)
        if error > ORTHONORMAL_TOLERANCE:
            raise InvalidPoseError('Rotation is not orthonormal (max deviation %g)' % error)

        det = np.linalg.det(rotation)
        if abs(det - 1.0) > ORTHONORMAL_TOLERANCE:
            raise InvalidPoseError('Rotation determinant is %g, expected +1' % det)

        self.rotation = _frozen(rotation)
        self.translation = _frozen(translation)

    def __repr__(self):
        return '<RigidPose t=(%.3f, %.3f, %.3f) mm>' % tuple(self.translation)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(matrix[:3, :3], matrix[:3, 3])

    def as_matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self):
        rotation_t = self.rotation.T
        return RigidPose(rotation_t, -rotation_t @ self.translation)

    def compose(self, other):
        """Return self after other, i.e. x -> self(other(x))"""
        return RigidPose(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def to_json(self):
        return {'R': self.rotation.reshape(-1).tolist(), 't': self.translation.tolist()}

    @classmethod
    def from_json(cls, data):
        return cls(np.reshape(data['R'], (3, 3)), data['t'])


def rotation_about_axis(axis, angle):
    """Rodrigues rotation matrix for angle (rad) about axis"""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def random_rotation(rng):
    """Uniformly distributed rotation from a normalized Gaussian quaternion"""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    rotation = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    return nearest_rotation(rotation)


def transform_cloud(cloud, pose):
    return PointCloud(pose.apply(cloud.positions), cloud.colors)


def cloud_diameter(cloud):
    """Maximum pairwise distance between points of the cloud

    Exact up to DIAMETER_EXACT_LIMIT points, otherwise computed on a seeded
    subsample of that size so the result is reproducible.

    >>> cloud_diameter(PointCloud([[0, 0, 0], [0, 0, 10]]))
    10.0
    """
    positions = cloud.positions
    if len(positions) < 2:
        raise InvalidCloudError('Diameter needs at least 2 points, got %d' % len(positions))

    if len(positions) > DIAMETER_EXACT_LIMIT:
        rng = np.random.default_rng(DIAMETER_SEED)
        keep = np.sort(rng.choice(len(positions), DIAMETER_EXACT_LIMIT, replace=False))
        positions = positions[keep]

    best = 0.0
    block = 512
    for start in range(0, len(positions), block):
        chunk = positions[start:start + block]
        distances = np.linalg.norm(chunk[:, None, :] - positions[None, :, :], axis=2)
        best = max(best, float(distances.max()))
    return best


def kabsch_fit(src, dst):
    """Least-squares rigid pose mapping src onto dst

    Reflections are removed by flipping the third singular direction.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if src.shape != dst.shape:
        raise ValueError('kabsch_fit needs equally sized point sets (%d vs %d)' % (len(src), len(dst)))
    if len(src) < 3:
        raise DegenerateFitError('kabsch_fit needs at least 3 point pairs, got %d' % len(src))

    src_centroid = src.mean(axis=0)
    dst_centroid = dst.mean(axis=0)
    covariance = (src - src_centroid).T @ (dst - dst_centroid)

    u, s, vt = np.linalg.svd(covariance)
    if s[0] <= 0.0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateFitError('Cross-covariance has rank < 2 (singular values %s); '
                                 'points are coincident or collinear' % np.array2string(s, precision=3))

    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T)) or 1.0
    rotation = v @ np.diag([1.0, 1.0, d]) @ u.T
    translation = dst_centroid - rotation @ src_centroid
    return RigidPose(rotation, translation)


class NeighborIndex(object):
    """Exact k-nearest and radius queries over a fixed point set

    Backed by a scipy cKDTree. Distances are recomputed with numpy so that
    they agree with a linear scan, and equidistant points are ordered by
    ascending point id.
    """

    # Relative slack when widening a query ball to catch ties
    TIE_SLACK = 1e-9

    def __init__(self, points):
        points = np.array(points, dtype=np.float64).reshape(-1, 3)
        if len(points) == 0:
            raise InvalidCloudError('Cannot build a neighbor index over zero points')
        self.points = _frozen(points)
        self._tree = cKDTree(self.points)

    def __len__(self):
        return len(self.points)

    def _distances(self, query, ids):
        return np.linalg.norm(self.points[ids] - query, axis=1)

    def knn(self, query, k):
        """Return (ids, distances) of the k nearest points, ties by lowest id"""
        if k > len(self.points):
            raise ValueError('Requested k=%d neighbors from an index of %d points' % (k, len(self.points)))
        if k < 1:
            raise ValueError('k must be at least 1')

        query = np.asarray(query, dtype=np.float64).reshape(3)
        distances, _ = self._tree.query(query, k=k)
        radius = float(np.max(distances))
        candidates = np.asarray(self._tree.query_ball_point(query, radius * (1.0 + self.TIE_SLACK) + 1e-12),
                                dtype=np.int64)
        exact = self._distances(query, candidates)
        order = np.lexsort((candidates, exact))[:k]
        return candidates[order], exact[order]

    def nearest(self, queries):
        """Vectorized 1-NN for many queries: (ids, distances)"""
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(queries) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0)

        k = min(2, len(self.points))
        distances, ids = self._tree.query(queries, k=k)
        if k == 1:
            ids = ids.reshape(-1, 1)
            distances = distances.reshape(-1, 1)

        ids = ids[:, 0].astype(np.int64)
        if k == 2:
            near_tie = distances[:, 1] <= distances[:, 0] * (1.0 + self.TIE_SLACK) + 1e-12
            for row in np.flatnonzero(near_tie):
                tie_ids, _ = self.knn(queries[row], 1)
                ids[row] = tie_ids[0]

        exact = np.linalg.norm(self.points[ids] - queries, axis=1)
        return ids, exact

    def within(self, query, radius):
        """Ids (ascending) of all points with distance <= radius"""
        query = np.asarray(query, dtype=np.float64).reshape(3)
        candidates = np.asarray(self._tree.query_ball_point(query, radius * (1.0 + self.TIE_SLACK) + 1e-12),
                                dtype=np.int64)
        if len(candidates) == 0:
            return candidates
        candidates = np.sort(candidates)
        return candidates[self._distances(query, candidates) <= radius]

    def ball_pairs(self, queries, radius):
        """All (query row, point id) pairs within radius, as two flat arrays"""
        neighbors = self._tree.query_ball_point(np.asarray(queries, dtype=np.float64).reshape(-1, 3), radius)
        lengths = np.fromiter((len(n) for n in neighbors), dtype=np.int64, count=len(neighbors))
        rows = np.repeat(np.arange(len(neighbors), dtype=np.int64), lengths)
        if lengths.sum() == 0:
            return rows, np.zeros(0, dtype=np.int64)
        cols = np.concatenate([np.asarray(n, dtype=np.int64) for n in neighbors if len(n)])
        return rows, cols


def nn_query(index, query, k):
    """k nearest neighbors as a list of (point id, distance) tuples

    >>> index = NeighborIndex([[1, 0, 0], [-1, 0, 0]])
    >>> nn_query(index, [0, 0, 0], 1)
    [(0, 1.0)]
    """
    ids, distances = index.knn(query, k)
    return [(int(i), float(d)) for i, d in zip(ids, distances)]


def nearest_rows(queries, targets, exclusion=None, chunk_elements=1 << 22):
    """Exact nearest target row for every query row, in any dimension

    exclusion(start, stop) may return a boolean mask of shape
    (stop - start, len(targets)) marking forbidden targets. Ties go to the
    lowest target id. Rows without any allowed target get id -1 and an
    infinite distance.

    >>> nearest_rows(np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]]))[0].tolist()
    [1, 0]
    """
    queries = np.asarray(queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if queries.ndim != 2 or targets.ndim != 2 or queries.shape[1] != targets.shape[1]:
        raise ValueError('Row sets must be 2-D with equal width, got %r and %r' % (queries.shape, targets.shape))

    count = len(queries)
    ids = np.full(count, -1, dtype=np.int64)
    distances = np.full(count, np.inf)
    if count == 0 or len(targets) == 0:
        return ids, distances

    target_sq = np.einsum('ij,ij->i', targets, targets)
    scale = float(target_sq.max())
    step = max(1, chunk_elements // len(targets))
    for start in range(0, count, step):
        stop = min(count, start + step)
        block = queries[start:stop]
        block_sq = np.einsum('ij,ij->i', block, block)
        squared = block_sq[:, None] + target_sq[None, :] - 2.0 * (block @ targets.T)
        if exclusion is not None:
            squared[exclusion(start, stop)] = np.inf

        best = np.argmin(squared, axis=1)
        rows = np.arange(stop - start)
        low = squared[rows, best]
        found = np.isfinite(low)

        # The expanded form can reorder near-ties; settle those exactly
        tolerance = 1e-9 * (block_sq + scale) + 1e-12
        near = squared <= (low + tolerance)[:, None]
        for row in np.flatnonzero(found & (near.sum(axis=1) > 1)):
            candidates = np.flatnonzero(near[row])
            exact = np.linalg.norm(targets[candidates] - block[row], axis=1)
            best[row] = candidates[np.lexsort((candidates, exact))[0]]

        ids[start:stop][found] = best[found]

    valid = ids >= 0
    distances[valid] = np.linalg.norm(targets[ids[valid]] - queries[valid], axis=1)
    return ids, distances
