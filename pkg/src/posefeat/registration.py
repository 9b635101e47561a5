#
# posefeat.registration - Feature matching and RANSAC pose estimation (2026-10-17)
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

import posefeat

from posefeat.geometry import DegenerateFitError, kabsch_fit, nearest_rows

import collections
import logging

import numpy as np

logger = logging.getLogger(__name__)

MIN_SAMPLE = 3
LOW_INLIER_RATIO = 0.1


class EmptyFeaturesError(posefeat.DataError):
    pass


class RegistrationFailure(posefeat.NumericalError):
    pass


class MatchSet(object):
    """One scene match per matched object point, with feature distances"""

    def __init__(self, object_ids, scene_ids, distances):
        self.object_ids = np.asarray(object_ids, dtype=np.int64)
        self.scene_ids = np.asarray(scene_ids, dtype=np.int64)
        self.distances = np.asarray(distances, dtype=np.float64)

    def __len__(self):
        return len(self.object_ids)

    def __repr__(self):
        return '<MatchSet %d matches>' % len(self)

    def pairs(self):
        return list(zip(self.object_ids.tolist(), self.scene_ids.tolist()))


def match_features(f_obj, f_scn, mutual=False):
    """Nearest scene feature for every object feature, ties by lowest id"""
    f_obj = np.asarray(f_obj, dtype=np.float64)
    f_scn = np.asarray(f_scn, dtype=np.float64)
    if len(f_obj) == 0 or len(f_scn) == 0:
        raise EmptyFeaturesError('Cannot match empty feature sets (%d object, %d scene rows)' %
                                 (len(f_obj), len(f_scn)))
    if f_obj.shape[1] != f_scn.shape[1]:
        raise ValueError('Feature widths differ (%d vs %d)' % (f_obj.shape[1], f_scn.shape[1]))

    scene_ids, distances = nearest_rows(f_obj, f_scn)
    object_ids = np.arange(len(f_obj), dtype=np.int64)

    if mutual:
        back, _ = nearest_rows(f_scn[scene_ids], f_obj)
        reciprocal = back == object_ids
        object_ids, scene_ids, distances = object_ids[reciprocal], scene_ids[reciprocal], distances[reciprocal]
        logger.debug('Mutual check kept %d of %d matches', len(object_ids), len(f_obj))

    return MatchSet(object_ids, scene_ids, distances)


class RansacConfig(object):
    def __init__(self, max_iterations=10000, inlier_threshold=6.0, confidence=0.999, seed=0):
        if max_iterations < 1:
            raise ValueError('max_iterations must be >= 1')
        if not inlier_threshold > 0:
            raise ValueError('Inlier threshold must be positive')
        if not 0 < confidence < 1:
            raise ValueError('Confidence must lie in (0, 1)')

        self.max_iterations = int(max_iterations)
        self.inlier_threshold = float(inlier_threshold)
        self.confidence = float(confidence)
        self.seed = seed

    @classmethod
    def from_config(cls, section, voxel_size, seed=0):
        return cls(section.max_iterations, section.threshold_voxels * voxel_size, section.confidence, seed)


# inliers index into the MatchSet
RegistrationResult = collections.namedtuple('RegistrationResult', 'pose inliers iterations inlier_ratio flagged')


def _inlier_mask(pose, src, dst, threshold):
    return np.linalg.norm(pose.apply(src) - dst, axis=1) < threshold


def ransac_register(object_cloud, scene_cloud, matches, cfg):
    """Robust rigid pose from feature matches

    Each iteration fits three sampled matches; the hypothesis with the most
    inliers wins (earliest iteration on ties) and is refined by a fit on all
    of its inliers.
    """
    count = len(matches)
    if count < MIN_SAMPLE:
        raise RegistrationFailure('Registration needs at least %d matches, got %d' % (MIN_SAMPLE, count))

    src = object_cloud.positions[matches.object_ids]
    dst = scene_cloud.positions[matches.scene_ids]
    rng = np.random.default_rng(cfg.seed)
    failure_bound = 1.0 - cfg.confidence

    best_count = 0
    best_pose = None
    best_mask = None
    iterations = 0
    for iteration in range(cfg.max_iterations):
        iterations = iteration + 1
        sample = rng.choice(count, MIN_SAMPLE, replace=False)
        try:
            pose = kabsch_fit(src[sample], dst[sample])
        except DegenerateFitError:
            continue

        mask = _inlier_mask(pose, src, dst, cfg.inlier_threshold)
        inliers = int(mask.sum())
        if inliers > best_count:
            best_count, best_pose, best_mask = inliers, pose, mask

        ratio = best_count / float(count)
        if ratio > 0 and (1.0 - ratio ** 3) ** iterations < failure_bound:
            break

    if best_count < MIN_SAMPLE:
        raise RegistrationFailure('Best hypothesis has %d inliers after %d iterations' % (best_count, iterations))

    # Final pose is the least-squares fit on the best inlier set
    pose = best_pose
    try:
        pose = kabsch_fit(src[best_mask], dst[best_mask])
    except DegenerateFitError:
        logger.debug('Refit on %d inliers is degenerate; keeping the sampled hypothesis', best_count)

    inliers = np.flatnonzero(best_mask)
    ratio = len(inliers) / float(count)
    flagged = ratio < LOW_INLIER_RATIO
    if flagged:
        logger.warning('Low RANSAC inlier ratio %.3f (%d of %d matches)', ratio, len(inliers), count)

    return RegistrationResult(pose, inliers, iterations, ratio, flagged)
