#
# posefeat.voxel - Sparse voxel quantization (2026-10-17)
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

from posefeat.geometry import PointCloud

import logging

import numpy as np

logger = logging.getLogger(__name__)

MODE_BARYCENTER = 'barycenter'
MODE_RANDOM = 'random'


class QuantizedCloud(object):
    """One representative per occupied voxel, sorted by voxel key

    inverse maps every input point to the row of its representative.
    """

    def __init__(self, representatives, voxel_keys, voxel_size, origin, inverse):
        self.representatives = representatives
        self.voxel_keys = voxel_keys
        self.voxel_size = voxel_size
        self.origin = origin
        self.inverse = inverse

    def __len__(self):
        return len(self.representatives)

    def __repr__(self):
        return '<QuantizedCloud %d voxels of %g mm>' % (len(self), self.voxel_size)


def voxel_keys_for(positions, origin, voxel_size):
    return np.floor((positions - origin) / voxel_size).astype(np.int64)


def quantize(cloud, voxel_size, mode=MODE_BARYCENTER, seed=0):
    """Group points by voxel and emit one representative per voxel

    >>> q = quantize(PointCloud([[0, 0, 0], [0.9, 0, 0], [5, 0, 0]]), 2.0)
    >>> q.representatives.positions.tolist()
    [[0.45, 0.0, 0.0], [5.0, 0.0, 0.0]]
    """
    if not voxel_size > 0:
        raise ValueError('Voxel size must be positive, got %r' % voxel_size)
    if mode not in (MODE_BARYCENTER, MODE_RANDOM):
        raise ValueError('Unknown quantization mode %r' % mode)
    cloud.require_points(1, 'quantized cloud')

    positions = cloud.positions
    origin = positions.min(axis=0)
    keys = voxel_keys_for(positions, origin, voxel_size)

    # np.unique on rows sorts lexicographically by (kx, ky, kz)
    unique_keys, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    count = len(unique_keys)

    if mode == MODE_BARYCENTER:
        sizes = np.bincount(inverse, minlength=count).astype(np.float64)
        sums = np.zeros((count, 3))
        np.add.at(sums, inverse, positions)
        rep_positions = sums / sizes[:, None]

        # Averages can drift across a cell wall by rounding; clamp into the cell
        low = origin + unique_keys * voxel_size
        inside = np.all(voxel_keys_for(rep_positions, origin, voxel_size) == unique_keys, axis=1)
        if not inside.all():
            rep_positions[~inside] = np.clip(rep_positions[~inside], low[~inside],
                                             np.nextafter(low[~inside] + voxel_size, -np.inf))

        rep_colors = None
        if cloud.has_colors:
            color_sums = np.zeros((count, 3))
            np.add.at(color_sums, inverse, cloud.colors)
            rep_colors = color_sums / sizes[:, None]
    else:
        # A random score per point; the lowest score in each voxel wins
        scores = np.random.default_rng(seed).random(len(positions))
        order = np.lexsort((scores, inverse))
        first = np.ones(len(order), dtype=bool)
        first[1:] = inverse[order][1:] != inverse[order][:-1]
        chosen = order[first]
        rep_positions = positions[chosen]
        rep_colors = cloud.colors[chosen] if cloud.has_colors else None

    logger.debug('Quantized %d points into %d voxels of %g mm (%s)', len(positions), count, voxel_size, mode)
    return QuantizedCloud(PointCloud(rep_positions, rep_colors), unique_keys, float(voxel_size), origin, inverse)
