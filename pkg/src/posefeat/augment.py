#
# posefeat.augment - Training-time augmentations (2026-10-17)
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

"""Per-epoch augmentations: resampling, color jitter, random erasing

Color jitter works on RGB in [0, 1] with one factor per call:

    brightness   c <- b * c
    contrast     c <- m + k * (c - m)       m = mean luma of the cloud
    saturation   c <- l + s * (c - l)       l = luma of the point
    hue          c <- R(2 pi h) c           rotation about the gray axis

with luma = 0.299 r + 0.587 g + 0.114 b, and a final clamp to [0, 1].
"""

import posefeat

from posefeat.geometry import NeighborIndex, rotation_about_axis

import collections
import logging

import numpy as np

logger = logging.getLogger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
GRAY_AXIS = np.ones(3) / np.sqrt(3.0)


class MissingColorsError(posefeat.DataError):
    pass


class AugmentConfig(object):
    """Resample counts, jitter ranges (low, high) and the erase radius scale"""

    def __init__(self, resample_counts=(4000, 50000), brightness=(0.8, 1.2), contrast=(0.8, 1.2),
                 saturation=(0.8, 1.2), hue=(-0.05, 0.05), erase_rho_scale=0.1,
                 resample_enabled=True, jitter_enabled=True, erase_enabled=True):
        for name, (low, high) in (('brightness', brightness), ('contrast', contrast),
                                  ('saturation', saturation), ('hue', hue)):
            if low > high:
                raise ValueError('%s range is not ordered: (%g, %g)' % (name, low, high))
        for name, (low, _) in (('brightness', brightness), ('contrast', contrast), ('saturation', saturation)):
            if low < 0:
                raise ValueError('%s factors must be >= 0' % name)
        if erase_rho_scale < 0:
            raise ValueError('erase_rho_scale must be >= 0')

        self.resample_counts = tuple(resample_counts)
        self.brightness = tuple(brightness)
        self.contrast = tuple(contrast)
        self.saturation = tuple(saturation)
        self.hue = tuple(hue)
        self.erase_rho_scale = erase_rho_scale
        self.resample_enabled = resample_enabled
        self.jitter_enabled = jitter_enabled
        self.erase_enabled = erase_enabled

    @classmethod
    def from_config(cls, cfg):
        section = cfg.augment
        return cls((cfg.data.object_points, cfg.data.scene_points),
                   (1.0 - section.brightness, 1.0 + section.brightness),
                   (1.0 - section.contrast, 1.0 + section.contrast),
                   (1.0 - section.saturation, 1.0 + section.saturation),
                   (-section.hue, section.hue),
                   section.erase_rho_scale,
                   section.resample, section.color_jitter, section.random_erase)

    @classmethod
    def identity(cls):
        return cls(brightness=(1.0, 1.0), contrast=(1.0, 1.0), saturation=(1.0, 1.0), hue=(0.0, 0.0))


def resample(cloud, count, seed):
    """Seeded uniform subsample of exactly count points, without replacement"""
    if count > len(cloud):
        raise ValueError('Cannot resample %d points from a cloud of %d' % (count, len(cloud)))
    if count < 0:
        raise ValueError('Resample count must be >= 0')

    order = np.random.default_rng(seed).permutation(len(cloud))
    return cloud.subset(order[:count])


def luma(colors):
    return colors @ LUMA_WEIGHTS


def jitter_colors(colors, brightness=1.0, contrast=1.0, saturation=1.0, hue_turns=0.0):
    """Apply fixed jitter factors to an N x 3 color array

    >>> jitter_colors(np.array([[0.3, 0.3, 0.3]]), brightness=2.0).round(12).tolist()
    [[0.6, 0.6, 0.6]]
    """
    colors = np.asarray(colors, dtype=np.float64) * brightness
    if contrast != 1.0 and len(colors):
        mean = luma(colors).mean()
        colors = mean + contrast * (colors - mean)
    if saturation != 1.0:
        gray = luma(colors)[:, None]
        colors = gray + saturation * (colors - gray)
    if hue_turns:
        colors = colors @ rotation_about_axis(GRAY_AXIS, 2.0 * np.pi * hue_turns).T
    return np.clip(colors, 0.0, 1.0)


def color_jitter(cloud, config, seed):
    """Jitter the cloud colors with one random factor per property"""
    if not cloud.has_colors:
        raise MissingColorsError('Color jitter needs a colored point cloud')

    rng = np.random.default_rng(seed)
    brightness = rng.uniform(*config.brightness)
    contrast = rng.uniform(*config.contrast)
    saturation = rng.uniform(*config.saturation)
    hue_turns = rng.uniform(*config.hue)
    return cloud.with_colors(jitter_colors(cloud.colors, brightness, contrast, saturation, hue_turns))


EraseResult = collections.namedtuple('EraseResult', 'cloud center_id removed_ids emptied noop')


def random_erase(scene, object_transformed, rho, seed, max_distance=None, scene_index=None):
    """Remove every scene point within rho of a random object-covered scene point

    The center is drawn uniformly among the scene points that are nearest
    neighbors of the transformed object points (closer than max_distance
    when given). Without such points the scene is returned unchanged.
    """
    if rho < 0:
        raise ValueError('Erase radius must be >= 0, got %r' % rho)

    positions = getattr(object_transformed, 'positions', object_transformed)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(scene) == 0 or len(positions) == 0:
        logger.warning('Random erase skipped: no correspondence region')
        return EraseResult(scene, -1, np.zeros(0, dtype=np.int64), False, True)

    if scene_index is None:
        scene_index = NeighborIndex(scene.positions)
    nearest, distances = scene_index.nearest(positions)
    if max_distance is not None:
        nearest = nearest[distances < max_distance]
    region = np.unique(nearest)
    if len(region) == 0:
        logger.warning('Random erase skipped: object is not visible in the scene')
        return EraseResult(scene, -1, np.zeros(0, dtype=np.int64), False, True)

    rng = np.random.default_rng(seed)
    center_id = int(region[rng.integers(len(region))])
    center = scene.positions[center_id]

    inside = np.linalg.norm(scene.positions - center, axis=1) <= rho
    removed_ids = np.flatnonzero(inside)
    kept = scene.subset(np.flatnonzero(~inside))
    emptied = len(kept) == 0
    if emptied:
        logger.warning('Random erase with radius %g mm removed the whole scene', rho)

    return EraseResult(kept, center_id, removed_ids, emptied, False)
