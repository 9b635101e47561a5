#
# test_posefeat.metrics - Unit tests for posefeat.metrics (2026-10-17)
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



import csv
import json
import math
import os
import shutil
import tempfile
import unittest

import numpy as np

from posefeat import geometry
from posefeat import metrics
from posefeat.geometry import PointCloud, RigidPose


def ring(count=16, radius=30.0):
    angles = np.arange(count) * 2.0 * np.pi / count
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(count)])


class TestPoseErrors(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(1)
        self.model = rng.uniform(-40.0, 40.0, size=(100, 3))
        self.gt = RigidPose(geometry.random_rotation(rng), [10.0, 20.0, 500.0])

    def test_perfect_prediction(self):
        self.assertEqual(metrics.add_error(self.model, self.gt, self.gt), 0.0)
        result = metrics.score_instance(self.model, self.gt, self.gt, 100.0, False)
        self.assertTrue(result.success)
        self.assertEqual(result.status, 'ok')

    def test_adds_never_exceeds_add(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            pred = RigidPose(geometry.random_rotation(rng), self.gt.translation + rng.normal(size=3) * 5)
            self.assertLessEqual(metrics.adds_error(self.model, pred, self.gt),
                                 metrics.add_error(self.model, pred, self.gt) + 1e-12)

    def test_symmetric_rotation_is_free_under_adds(self):
        model = ring()
        gt = RigidPose.identity()
        pred = RigidPose(geometry.rotation_about_axis([0, 0, 1], 2.0 * np.pi / 16), np.zeros(3))
        self.assertAlmostEqual(metrics.adds_error(model, pred, gt), 0.0, places=9)
        self.assertGreater(metrics.add_error(model, pred, gt), 10.0)
        self.assertAlmostEqual(metrics.addsd_error(model, pred, gt, True), 0.0, places=9)

    def test_translation_offset(self):
        pred = RigidPose(self.gt.rotation, self.gt.translation + [0.0, 30.0, 40.0])
        self.assertAlmostEqual(metrics.add_error(self.model, pred, self.gt), 50.0)
        rre, rte = metrics.pose_errors(pred, self.gt)
        self.assertAlmostEqual(rre, 0.0, places=6)
        self.assertAlmostEqual(rte, 5.0)

    def test_rotation_error(self):
        turn = RigidPose(geometry.rotation_about_axis([1, 0, 0], 0.3), np.zeros(3))
        rre, _ = metrics.pose_errors(turn.compose(self.gt), self.gt)
        self.assertAlmostEqual(rre, 0.3)

    def test_success_threshold_is_strict(self):
        self.assertFalse(metrics.addsd_success(10.0, 100.0))
        self.assertTrue(metrics.addsd_success(9.99, 100.0))
        with self.assertRaises(ValueError):
            metrics.addsd_success(1.0, 0.0)


class TestAuc(unittest.TestCase):
    def test_single_error(self):
        self.assertEqual(metrics.add_s_auc([50.5]), 50.0)

    def test_extremes(self):
        self.assertEqual(metrics.add_s_auc([0.0, 0.5]), 100.0)
        self.assertEqual(metrics.add_s_auc([math.inf]), 0.0)

    def test_nan(self):
        with self.assertRaises(metrics.MetricInputError):
            metrics.add_s_auc([1.0, math.nan])

    def test_empty(self):
        with self.assertRaises(metrics.MetricInputError):
            metrics.add_s_auc([])


class TestFeatureMatchRecall(unittest.TestCase):
    def pair(self, shuffle=False):
        rng = np.random.default_rng(5)
        obj = PointCloud(rng.uniform(-50.0, 50.0, size=(60, 3)))
        gt = RigidPose(geometry.random_rotation(rng), [0.0, 0.0, 300.0])
        scene = PointCloud(gt.apply(obj.positions))
        features = rng.normal(size=(60, 8))
        scene_features = features[rng.permutation(60)] if shuffle else features
        return metrics.FmrPair(features, scene_features, obj, scene, gt)

    def test_perfect_features(self):
        self.assertEqual(metrics.fmr([self.pair()], 5.0, 0.05, 2.0), 1.0)
        np.testing.assert_allclose(metrics.match_residuals(self.pair()), 0.0, atol=1e-9)

    def test_mixed_pairs(self):
        self.assertEqual(metrics.fmr([self.pair(), self.pair(shuffle=True)], 5.0, 0.5, 2.0), 0.5)

    def test_curve(self):
        rows = metrics.fmr_curve([self.pair()], [1.0, 2.0], [0.01, 0.5, 0.9], 5.0, 0.05, 2.0)
        self.assertEqual(len(rows), 5)
        self.assertEqual(rows[0], ('tau1', 1.0, 0.05, 1.0))
        self.assertEqual([row[0] for row in rows], ['tau1', 'tau1', 'tau2', 'tau2', 'tau2'])

    def test_no_pairs(self):
        with self.assertRaises(metrics.MetricInputError):
            metrics.fmr([], 5.0, 0.05, 2.0)


class TestDetectorDeltas(unittest.TestCase):
    def test_counts(self):
        self.assertEqual(metrics.detector_deltas([True, False, True, False], [True, True, False, False]),
                         (25.0, 25.0))

    def test_identical(self):
        self.assertEqual(metrics.detector_deltas([True, False], [True, False]), (0.0, 0.0))

    def test_misaligned(self):
        with self.assertRaises(metrics.MetricInputError):
            metrics.detector_deltas([True], [True, False])


class TestReport(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()
        model = ring()
        gt = RigidPose.identity()
        near = RigidPose(np.eye(3), [1.0, 0.0, 0.0])
        self.report = metrics.MetricReport([
            metrics.score_instance(model, near, gt, 60.0, False, object_id=1, image_id=0, fmr_pass=True),
            metrics.score_instance(model, None, gt, 60.0, False, object_id=1, image_id=1, fmr_pass=False),
            metrics.score_instance(model, gt, gt, 60.0, True, object_id=2, image_id=0),
        ], config_hash='abc', deltas=(0.0, 50.0))

    def tearDown(self):
        shutil.rmtree(self.tempdir)

    def test_overall(self):
        overall = self.report.overall()
        self.assertEqual(overall['instances'], 3)
        self.assertEqual(overall['failed'], 1)
        self.assertAlmostEqual(overall['addsd_01d'], 200.0 / 3)
        self.assertEqual(overall['fmr'], 0.5)
        self.assertAlmostEqual(overall['mean_rte'], 0.05)

    def test_per_object(self):
        per_object = self.report.per_object()
        self.assertEqual(list(per_object), [1, 2])
        self.assertEqual(per_object[2]['addsd_01d'], 100.0)
        self.assertIsNone(per_object[2]['fmr'])

    def test_failed_instance(self):
        failed = self.report.instances[1]
        self.assertEqual(failed.status, 'failed')
        self.assertTrue(math.isinf(failed.add))
        self.assertFalse(failed.success)

    def test_unknown_field(self):
        with self.assertRaises(TypeError):
            metrics.score_instance(ring(), None, RigidPose.identity(), 1.0, False, colour='red')

    def test_write_json(self):
        filename = os.path.join(self.tempdir, 'report.json')
        self.report.write_json(filename)
        with open(filename) as fp:
            data = json.load(fp)
        self.assertEqual(data['config_hash'], 'abc')
        self.assertIsNone(data['instances'][1]['add'])
        self.assertEqual(data['detector_deltas'], {'success_to_failure': 0.0, 'failure_to_success': 50.0})

    def test_write_csv(self):
        filename = os.path.join(self.tempdir, 'report.csv')
        self.report.write_csv(filename)
        with open(filename, newline='') as fp:
            rows = list(csv.reader(fp))
        self.assertEqual(tuple(rows[0]), metrics.INSTANCE_FIELDS)
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[2][metrics.INSTANCE_FIELDS.index('add')], '')

    def test_format_text(self):
        text = self.report.format_text()
        self.assertTrue(text.startswith('config abc'))
        self.assertIn('failure->success 50.0 %', text)
        self.assertEqual(len(text.strip().splitlines()), 1 + 1 + 2 + 1 + 1)

    def test_empty_report(self):
        with self.assertRaises(metrics.MetricInputError):
            metrics.MetricReport([]).overall()

    def test_fmr_curve_file(self):
        filename = os.path.join(self.tempdir, 'fmr_curve.csv')
        metrics.write_fmr_curve(filename, [('tau1', 5.0, 0.05, 1.0)])
        with open(filename, newline='') as fp:
            self.assertEqual(list(csv.reader(fp)), [['swept', 'tau1_voxels', 'tau2_ratio', 'fmr'],
                                                    ['tau1', '5.0', '0.05', '1.0']])
