#
# posefeat.metrics - Pose and feature-matching metrics, reports (2026-10-17)
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

"""Evaluation metrics

Distances are in mm, RRE in radians and RTE in cm. A failed registration
counts as an instance with infinite ADD/ADD-S error.
"""

import posefeat

from posefeat import util
from posefeat.geometry import NeighborIndex
from posefeat.registration import match_features

import collections
import csv
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

SUCCESS_DIAMETER_FRACTION = 0.1


class MetricInputError(posefeat.DataError):
    pass


def _model_points(model):
    return np.asarray(getattr(model, 'positions', model), dtype=np.float64).reshape(-1, 3)


def add_error(model, pred, gt):
    """Mean distance between corresponding model points under both poses"""
    points = _model_points(model)
    return float(np.mean(np.linalg.norm(gt.apply(points) - pred.apply(points), axis=1)))


def adds_error(model, pred, gt):
    """Mean distance from each gt-posed point to the closest pred-posed point"""
    points = _model_points(model)
    _, distances = NeighborIndex(pred.apply(points)).nearest(gt.apply(points))
    return float(np.mean(distances))


def addsd_error(model, pred, gt, symmetric):
    if symmetric:
        return adds_error(model, pred, gt)
    return add_error(model, pred, gt)


def add_s_auc(errors, t_min=1.0, t_max=100.0, step=1.0):
    """Mean pass rate over thresholds t_min, t_min + step, ..., t_max, in percent

    >>> add_s_auc([50.5])
    50.0
    """
    errors = np.asarray(errors, dtype=np.float64).reshape(-1)
    if len(errors) == 0:
        raise MetricInputError('ADD-S AUC needs at least one error value')
    if np.any(np.isnan(errors)):
        raise MetricInputError('ADD-S AUC errors must not be NaN')
    if not (step > 0 and t_max >= t_min):
        raise ValueError('Invalid AUC threshold grid (%g..%g step %g)' % (t_min, t_max, step))

    thresholds = np.arange(t_min, t_max + step / 2.0, step)
    passed = errors[None, :] < thresholds[:, None]
    return float(passed.mean(axis=1).mean() * 100.0)


def addsd_success(error, diameter):
    if not diameter > 0:
        raise ValueError('Object diameter must be positive, got %r' % diameter)
    return bool(error < SUCCESS_DIAMETER_FRACTION * diameter)


def pose_errors(pred, gt):
    """(RRE in radians, RTE in cm)"""
    cosine = (np.trace(pred.rotation.T @ gt.rotation) - 1.0) / 2.0
    rre = float(np.arccos(np.clip(cosine, -1.0, 1.0)))
    rte = float(np.linalg.norm(pred.translation - gt.translation)) / posefeat.MM_PER_CM
    return rre, rte


FmrPair = collections.namedtuple('FmrPair', 'object_features scene_features object_cloud scene_cloud gt')


def match_residuals(pair):
    """Spatial residual (mm) of every object-to-scene feature match under gt"""
    matches = match_features(pair.object_features, pair.scene_features)
    moved = pair.gt.apply(pair.object_cloud.positions[matches.object_ids])
    return np.linalg.norm(moved - pair.scene_cloud.positions[matches.scene_ids], axis=1)


def _passes(residuals, tau1_mm, tau2_ratio):
    return float(np.mean(residuals < tau1_mm)) > tau2_ratio


def fmr(pairs, tau1_voxels, tau2_ratio, voxel_size):
    """Fraction of pairs whose match inlier ratio exceeds tau2_ratio"""
    pairs = list(pairs)
    if not pairs:
        raise MetricInputError('FMR needs at least one pair')
    tau1_mm = tau1_voxels * voxel_size
    return float(np.mean([_passes(match_residuals(pair), tau1_mm, tau2_ratio) for pair in pairs]))


def fmr_curve(pairs, tau1_values, tau2_values, tau1_voxels, tau2_ratio, voxel_size):
    """FMR over tau1 values at fixed tau2, and over tau2 values at fixed tau1

    Returns rows (swept, tau1_voxels, tau2_ratio, fmr).
    """
    residuals = [match_residuals(pair) for pair in pairs]
    if not residuals:
        raise MetricInputError('FMR needs at least one pair')

    rows = []
    for tau1 in tau1_values:
        rows.append(('tau1', tau1, tau2_ratio,
                     float(np.mean([_passes(r, tau1 * voxel_size, tau2_ratio) for r in residuals]))))
    for tau2 in tau2_values:
        rows.append(('tau2', tau1_voxels, tau2,
                     float(np.mean([_passes(r, tau1_voxels * voxel_size, tau2) for r in residuals]))))
    return rows


def detector_deltas(results_with, results_without):
    """(success-to-failure %, failure-to-success %) when adding the detector prior"""
    results_with = [bool(x) for x in results_with]
    results_without = [bool(x) for x in results_without]
    if len(results_with) != len(results_without):
        raise MetricInputError('Detector comparison needs aligned instance lists (%d vs %d)' %
                               (len(results_with), len(results_without)))
    if not results_with:
        return 0.0, 0.0

    total = float(len(results_with))
    s_to_f = sum(1 for w, wo in zip(results_with, results_without) if wo and not w)
    f_to_s = sum(1 for w, wo in zip(results_with, results_without) if w and not wo)
    return 100.0 * s_to_f / total, 100.0 * f_to_s / total


INSTANCE_FIELDS = ('scene_id', 'image_id', 'object_id', 'symmetric', 'diameter', 'add', 'adds', 'addsd',
                   'success', 'rre', 'rte', 'inliers', 'inlier_ratio', 'fmr_pass', 'detector_prior', 'status')

InstanceResult = collections.namedtuple('InstanceResult', INSTANCE_FIELDS)


def score_instance(model, pred, gt, diameter, symmetric, **extra):
    """InstanceResult for one prediction; pred None marks a failed registration"""
    if pred is None:
        values = dict(add=math.inf, adds=math.inf, addsd=math.inf, success=False, rre=math.nan, rte=math.nan,
                      status='failed')
    else:
        add = add_error(model, pred, gt)
        adds = adds_error(model, pred, gt)
        addsd = adds if symmetric else add
        rre, rte = pose_errors(pred, gt)
        values = dict(add=add, adds=adds, addsd=addsd, success=addsd_success(addsd, diameter), rre=rre, rte=rte,
                      status='ok')

    values.update(diameter=float(diameter), symmetric=bool(symmetric))
    for name in ('scene_id', 'image_id', 'object_id', 'inliers', 'inlier_ratio', 'fmr_pass', 'detector_prior'):
        values.setdefault(name, extra.pop(name, None))
    if extra:
        raise TypeError('Unknown instance fields: %s' % ', '.join(sorted(extra)))
    return InstanceResult(**values)


def _finite_mean(values):
    values = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(values)) if values else math.nan


class MetricReport(object):
    """Per-instance results with per-object and overall aggregates"""

    def __init__(self, instances, config_hash=None, auc_grid=(1.0, 100.0, 1.0), deltas=None, fmr_value=None):
        self.instances = list(instances)
        self.config_hash = config_hash
        self.auc_grid = tuple(auc_grid)
        self.deltas = deltas
        self.fmr_value = fmr_value

    def __len__(self):
        return len(self.instances)

    def _aggregate(self, instances):
        row = {'instances': len(instances),
               'failed': sum(1 for i in instances if i.status != 'ok'),
               'addsd_01d': 100.0 * np.mean([i.success for i in instances]),
               'adds_auc': add_s_auc([i.adds for i in instances], *self.auc_grid),
               'mean_rre': _finite_mean(i.rre for i in instances),
               'mean_rte': _finite_mean(i.rte for i in instances)}
        flags = [i.fmr_pass for i in instances if i.fmr_pass is not None]
        row['fmr'] = float(np.mean(flags)) if flags else None
        return row

    def per_object(self):
        groups = collections.OrderedDict()
        for instance in sorted(self.instances, key=lambda i: str(i.object_id).zfill(8)):
            groups.setdefault(instance.object_id, []).append(instance)
        return collections.OrderedDict((object_id, self._aggregate(items)) for object_id, items in groups.items())

    def overall(self):
        if not self.instances:
            raise MetricInputError('Report has no instances')
        row = self._aggregate(self.instances)
        if self.fmr_value is not None:
            row['fmr'] = self.fmr_value
        return row

    def to_json(self):
        data = {
            'config_hash': self.config_hash,
            'auc_grid_mm': list(self.auc_grid),
            'overall': self.overall(),
            'per_object': {str(k): v for k, v in self.per_object().items()},
            'instances': [i._asdict() for i in self.instances],
        }
        if self.deltas is not None:
            data['detector_deltas'] = {'success_to_failure': self.deltas[0], 'failure_to_success': self.deltas[1]}
        return data

    def write_json(self, filename):
        util.write_json(filename, self.to_json())

    def write_csv(self, filename):
        with util.update_file_safely(filename) as temp_filename:
            with open(temp_filename, 'w', newline='') as fp:
                writer = csv.writer(fp)
                writer.writerow(INSTANCE_FIELDS)
                for instance in self.instances:
                    writer.writerow([_csv_value(getattr(instance, name)) for name in INSTANCE_FIELDS])

    def format_text(self):
        header = ('object', 'n', 'failed', 'ADD(S)-0.1d %', 'ADD-S AUC %', 'RRE rad', 'RTE cm', 'FMR')
        rows = [header]
        for name, row in list(self.per_object().items()) + [('all', self.overall())]:
            rows.append((str(name), str(row['instances']), str(row['failed']), '%.1f' % row['addsd_01d'],
                         '%.1f' % row['adds_auc'], '%.4f' % row['mean_rre'], '%.3f' % row['mean_rte'],
                         '-' if row['fmr'] is None else '%.3f' % row['fmr']))

        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = ['  '.join(cell.rjust(width) for cell, width in zip(r, widths)) for r in rows]
        if self.config_hash:
            lines.insert(0, 'config %s' % self.config_hash)
        if self.deltas is not None:
            lines.append('detector prior: success->failure %.1f %%, failure->success %.1f %%' % self.deltas)
        return '\n'.join(lines) + '\n'

    def write_text(self, filename):
        with util.update_file_safely(filename) as temp_filename:
            with open(temp_filename, 'w') as fp:
                fp.write(self.format_text())


def _csv_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return ''
    if value is None:
        return ''
    return value


def write_fmr_curve(filename, rows):
    with util.update_file_safely(filename) as temp_filename:
        with open(temp_filename, 'w', newline='') as fp:
            writer = csv.writer(fp)
            writer.writerow(('swept', 'tau1_voxels', 'tau2_ratio', 'fmr'))
            writer.writerows(rows)
