#
# posefeat.mining - Positive correspondences and safe negative candidates (2026-10-17)
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

"""Correspondence mining

Positives pair each ground-truth-transformed object point with its nearest
scene point when they are closer than tau_p. Negatives for an anchor are
all points of a candidate pool except those inside the safety sphere
around the anchor; candidate sets are stored as pool plus exclusions,
since the spheres are small compared to the pools.
"""

import posefeat

from posefeat.geometry import NeighborIndex

import logging

import numpy as np

logger = logging.getLogger(__name__)


class NoCorrespondencesError(posefeat.DataError):
    pass


class CorrespondenceSet(object):
    """Object to scene index pairs with their spatial distances (mm)"""

    def __init__(self, object_ids, scene_ids, distances):
        self.object_ids = np.asarray(object_ids, dtype=np.int64)
        self.scene_ids = np.asarray(scene_ids, dtype=np.int64)
        self.distances = np.asarray(distances, dtype=np.float64)

        if not (len(self.object_ids) == len(self.scene_ids) == len(self.distances)):
            raise ValueError('Correspondence arrays differ in length')
        if len(np.unique(self.object_ids)) != len(self.object_ids):
            raise ValueError('Object ids must be unique within a correspondence set')

    def __len__(self):
        return len(self.object_ids)

    def __repr__(self):
        return '<CorrespondenceSet %d pairs>' % len(self)

    def pairs(self):
        return list(zip(self.object_ids.tolist(), self.scene_ids.tolist()))

    def to_json(self):
        return {'object_ids': self.object_ids.tolist(),
                'scene_ids': self.scene_ids.tolist(),
                'distances': self.distances.tolist()}


def mine_positives(object_cloud, scene_cloud, gt, tau_p, max_pairs=None, seed=0, scene_index=None):
    """Pairs (i, NN_scene(gt * x_i)) with distance < tau_p, capped at max_pairs"""
    object_cloud.require_points(1, 'object cloud')
    scene_cloud.require_points(1, 'scene cloud')
    if not tau_p > 0:
        raise ValueError('tau_p must be positive, got %r' % tau_p)

    if scene_index is None:
        scene_index = NeighborIndex(scene_cloud.positions)

    transformed = gt.apply(object_cloud.positions)
    nearest, distances = scene_index.nearest(transformed)
    keep = np.flatnonzero(distances < tau_p)

    if len(keep) == 0:
        raise NoCorrespondencesError('No scene point within %g mm of the transformed object '
                                     '(wrong pose or disjoint clouds?)' % tau_p)

    if max_pairs is not None and len(keep) > max_pairs:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(keep, size=max_pairs, replace=False))

    return CorrespondenceSet(keep, nearest[keep], distances[keep])


class CandidateSet(object):
    """Negative candidates of one side: pool minus each anchor's safety sphere

    pool holds sorted point ids. For anchor k, the excluded pool positions
    are excluded[offsets[k]:offsets[k + 1]].
    """

    def __init__(self, pool, anchor_ids, offsets, excluded, radius):
        self.pool = pool
        self.anchor_ids = anchor_ids
        self.offsets = offsets
        self.excluded = excluded
        self.radius = radius

    def __len__(self):
        return len(self.anchor_ids)

    def counts(self):
        return len(self.pool) - np.diff(self.offsets)

    def exclusion_mask(self, start, stop):
        """Boolean (stop - start) x len(pool) matrix, True where excluded"""
        mask = np.zeros((stop - start, len(self.pool)), dtype=bool)
        lo, hi = self.offsets[start], self.offsets[stop]
        rows = np.repeat(np.arange(stop - start), np.diff(self.offsets[start:stop + 1]))
        mask[rows, self.excluded[lo:hi]] = True
        return mask

    def candidates(self, k):
        keep = np.ones(len(self.pool), dtype=bool)
        keep[self.excluded[self.offsets[k]:self.offsets[k + 1]]] = False
        return self.pool[keep]


class NegativeCandidates(object):
    def __init__(self, object_side, scene_side, safety_radius):
        self.object_side = object_side
        self.scene_side = scene_side
        self.safety_radius = safety_radius

    def __repr__(self):
        return '<NegativeCandidates %d anchors, radius %g mm>' % (len(self.object_side), self.safety_radius)

    def object_candidates(self, k):
        return self.object_side.candidates(k)

    def scene_candidates(self, k):
        return self.scene_side.candidates(k)


def _candidate_set(positions, pool, anchor_ids, radius):
    pool_positions = positions[pool]
    anchors = positions[anchor_ids]

    index = NeighborIndex(pool_positions)
    rows, cols = index.ball_pairs(anchors, radius * (1.0 + NeighborIndex.TIE_SLACK) + 1e-12)

    # Exact test so that every kept candidate is strictly farther than radius
    inside = np.linalg.norm(pool_positions[cols] - anchors[rows], axis=1) <= radius
    rows, cols = rows[inside], cols[inside]

    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    offsets = np.zeros(len(anchor_ids) + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=len(anchor_ids)), out=offsets[1:])
    return CandidateSet(pool, anchor_ids, offsets, cols, radius)


def build_negative_candidates(object_cloud, scene_cloud, positives, t_scale, diameter,
                              scene_sample_cap=None, seed=0, scene_radius=None):
    """Safety-thresholded candidate sets for every positive pair

    Both sides exclude points within t_scale * diameter of the anchor unless
    scene_radius overrides the scene side. The scene pool is a seeded sample
    of at most scene_sample_cap points, drawn before the safety filter.
    """
    if t_scale < 0:
        raise ValueError('t_scale must be >= 0, got %r' % t_scale)
    if not diameter > 0:
        raise ValueError('Diameter must be positive, got %r' % diameter)

    radius = t_scale * diameter
    if scene_radius is None:
        scene_radius = radius

    object_pool = np.arange(len(object_cloud), dtype=np.int64)
    scene_pool = np.arange(len(scene_cloud), dtype=np.int64)
    if scene_sample_cap is not None and len(scene_pool) > scene_sample_cap:
        rng = np.random.default_rng(seed)
        scene_pool = np.sort(rng.choice(len(scene_pool), size=scene_sample_cap, replace=False))

    object_side = _candidate_set(object_cloud.positions, object_pool, positives.object_ids, radius)
    scene_side = _candidate_set(scene_cloud.positions, scene_pool, positives.scene_ids, scene_radius)

    logger.debug('Mined negatives for %d anchors: radius %g mm, %d object / %d scene pool points',
                 len(positives), radius, len(object_pool), len(scene_pool))
    return NegativeCandidates(object_side, scene_side, radius)
