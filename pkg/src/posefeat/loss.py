#
# posefeat.loss - Safety-thresholded hardest contrastive loss (2026-10-17)
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

"""Hardest contrastive loss with safety thresholds

For positive pairs (i, j) with object features f_i and scene features f_j:

    l_p  = mean over pairs of (|f_i - f_j| - mu_p)_+^2
    l_no = sum over anchors i of (mu_n - min_k |f_i - f_k|)_+^2 / n_o
    l_ns = sum over anchors j of (mu_n - min_k |f_j - f_k|)_+^2 / n_s
    total = lambda_p * l_p + lambda_no * l_no + lambda_ns * l_ns

where k runs over the anchor's negative candidates in its own cloud and
n_o, n_s count the anchors whose candidate set is non-empty (or all pairs
with negative_normalization = 'positives'). The halves of the two-sided
negative term are folded into lambda_no and lambda_ns.

Features are used unnormalized: a margin of mu_n = 10 is unreachable on
the unit sphere. Gradients treat each hardest negative as fixed and are
zero where a hinge sits exactly on its margin or a distance is zero.
"""

import posefeat

from posefeat.geometry import nearest_rows

import collections
import logging

import numpy as np

logger = logging.getLogger(__name__)

NORMALIZE_ANCHORS = 'anchors'
NORMALIZE_POSITIVES = 'positives'


class LossInputError(posefeat.NumericalError):
    pass


class LossConfig(object):
    FIELDS = ('mu_p', 'mu_n', 'lambda_p', 'lambda_no', 'lambda_ns', 't_scale', 'tau_p',
              'max_pairs', 'scene_sample_cap', 'tau_ns_scale', 'per_side_diameter', 'negative_normalization')

    def __init__(self, mu_p=0.1, mu_n=10.0, lambda_p=1.0, lambda_no=0.6, lambda_ns=0.4, t_scale=0.1,
                 tau_p=4.0, max_pairs=1000, scene_sample_cap=10000, tau_ns_scale=None,
                 per_side_diameter=False, negative_normalization=NORMALIZE_ANCHORS):
        self.mu_p = float(mu_p)
        self.mu_n = float(mu_n)
        self.lambda_p = float(lambda_p)
        self.lambda_no = float(lambda_no)
        self.lambda_ns = float(lambda_ns)
        self.t_scale = float(t_scale)
        self.tau_p = float(tau_p)
        self.max_pairs = max_pairs
        self.scene_sample_cap = scene_sample_cap
        self.tau_ns_scale = tau_ns_scale
        self.per_side_diameter = per_side_diameter
        self.negative_normalization = negative_normalization

        if min(self.mu_p, self.mu_n) < 0:
            raise ValueError('Loss margins must be >= 0')
        if min(self.lambda_p, self.lambda_no, self.lambda_ns) < 0:
            raise ValueError('Loss weights must be >= 0')
        if negative_normalization not in (NORMALIZE_ANCHORS, NORMALIZE_POSITIVES):
            raise ValueError('Unknown negative normalization %r' % negative_normalization)

    @classmethod
    def from_config(cls, section):
        return cls(**{name: getattr(section, name) for name in cls.FIELDS})

    def scene_scale(self):
        return self.t_scale if self.tau_ns_scale is None else float(self.tau_ns_scale)


LossBreakdown = collections.namedtuple('LossBreakdown',
                                       'l_p l_no l_ns total hardest_negative_ids grad_object grad_scene')

# hardest_negative_ids holds one array per side, -1 where an anchor had no candidates
HardestNegatives = collections.namedtuple('HardestNegatives', 'object scene')


def _check_features(features, name):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise LossInputError('%s features must be an N x F matrix' % name)
    if not np.all(np.isfinite(features)):
        raise LossInputError('%s features contain NaN or infinite values' % name)
    return features


def _negative_term(features, candidates, mu_n, normalization, positives_count, grad):
    """Hinge on the hardest negative per anchor; accumulates into grad, returns (loss, ids)"""
    anchor_ids = candidates.anchor_ids
    pool_features = features[candidates.pool]
    positions, _ = nearest_rows(features[anchor_ids], pool_features, candidates.exclusion_mask)

    has_negative = positions >= 0
    hardest = np.full(len(anchor_ids), -1, dtype=np.int64)
    hardest[has_negative] = candidates.pool[positions[has_negative]]

    if normalization == NORMALIZE_ANCHORS:
        normalizer = int(has_negative.sum())
    else:
        normalizer = positives_count
    if normalizer == 0:
        return 0.0, hardest

    anchors = anchor_ids[has_negative]
    negatives = hardest[has_negative]
    diff = features[anchors] - features[negatives]
    distance = np.linalg.norm(diff, axis=1)
    hinge = np.maximum(mu_n - distance, 0.0)
    value = float(np.sum(hinge * hinge)) / normalizer

    active = (hinge > 0) & (distance > 0)
    if active.any():
        coefficient = -2.0 * hinge[active] / distance[active] / normalizer
        step = coefficient[:, None] * diff[active]
        np.add.at(grad, anchors[active], step)
        np.add.at(grad, negatives[active], -step)

    return value, hardest


def compute_loss(f_obj, f_scn, positives, negatives, cfg):
    """Evaluate the weighted three-term loss and its gradient w.r.t. both feature sets"""
    f_obj = _check_features(f_obj, 'Object')
    f_scn = _check_features(f_scn, 'Scene')
    if f_obj.shape[1] != f_scn.shape[1]:
        raise LossInputError('Feature widths differ (%d vs %d)' % (f_obj.shape[1], f_scn.shape[1]))
    if len(positives) == 0:
        raise LossInputError('The loss needs at least one positive pair')
    if positives.object_ids.max() >= len(f_obj) or positives.scene_ids.max() >= len(f_scn):
        raise LossInputError('Correspondence ids exceed the feature row counts')

    count = len(positives)
    diff = f_obj[positives.object_ids] - f_scn[positives.scene_ids]
    distance = np.linalg.norm(diff, axis=1)
    hinge = np.maximum(distance - cfg.mu_p, 0.0)
    l_p = float(np.sum(hinge * hinge)) / count

    grad_p_obj = np.zeros_like(f_obj)
    grad_p_scn = np.zeros_like(f_scn)
    active = (hinge > 0) & (distance > 0)
    if active.any():
        step = (2.0 * hinge[active] / distance[active] / count)[:, None] * diff[active]
        np.add.at(grad_p_obj, positives.object_ids[active], step)
        np.add.at(grad_p_scn, positives.scene_ids[active], -step)

    grad_no = np.zeros_like(f_obj)
    grad_ns = np.zeros_like(f_scn)
    l_no, hardest_object = _negative_term(f_obj, negatives.object_side, cfg.mu_n,
                                          cfg.negative_normalization, count, grad_no)
    l_ns, hardest_scene = _negative_term(f_scn, negatives.scene_side, cfg.mu_n,
                                         cfg.negative_normalization, count, grad_ns)

    total = cfg.lambda_p * l_p + cfg.lambda_no * l_no + cfg.lambda_ns * l_ns
    grad_object = cfg.lambda_p * grad_p_obj + cfg.lambda_no * grad_no
    grad_scene = cfg.lambda_p * grad_p_scn + cfg.lambda_ns * grad_ns

    return LossBreakdown(l_p, l_no, l_ns, total, HardestNegatives(hardest_object, hardest_scene),
                         grad_object, grad_scene)
