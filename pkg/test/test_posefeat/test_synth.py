#
# test_posefeat.synth - Unit tests for posefeat.synth (2026-10-17)
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



import os
import shutil
import tempfile
import unittest

import numpy as np

from posefeat import bop
from posefeat import config
from posefeat import pipeline
from posefeat import synth
from posefeat.geometry import NeighborIndex


def box_pair(seed=5, occlusion=0.3, shape='box'):
    return synth.generate_synthetic_pair(synth.ShapeSpec(shape, 100.0, 500), synth.PoseSpec(400.0),
                                         synth.ClutterSpec(3000, 2, 400.0), occlusion, 1.0, seed)


class TestSyntheticPair(unittest.TestCase):
    def test_sizes(self):
        pair = box_pair()
        self.assertEqual(len(pair.object_cloud), 500)
        self.assertEqual(len(pair.scene_cloud), 3000)
        self.assertTrue(pair.scene_cloud.has_colors)
        self.assertEqual(pair.object_id, synth.SHAPE_IDS['box'])

    def test_same_seed_same_pair(self):
        first, second = box_pair(seed=8), box_pair(seed=8)
        self.assertEqual(first.scene_cloud.positions.tolist(), second.scene_cloud.positions.tolist())
        self.assertEqual(first.gt_pose.to_json(), second.gt_pose.to_json())
        self.assertNotEqual(box_pair(seed=9).gt_pose.to_json(), first.gt_pose.to_json())

    def test_visible_object_is_in_the_scene(self):
        pair = box_pair()
        placed = pair.gt_pose.apply(pair.object_cloud.positions)
        _, distances = NeighborIndex(pair.scene_cloud.positions).nearest(placed)
        self.assertGreaterEqual(int((distances < 5.0).sum()), 300)

    def test_object_rests_on_the_plane(self):
        pair = box_pair(occlusion=0.0)
        placed = pair.gt_pose.apply(pair.object_cloud.positions)
        self.assertAlmostEqual(placed[:, 2].min(), 1.0, places=6)

    def test_cylinder_is_symmetric(self):
        pair = box_pair(shape='cylinder')
        self.assertTrue(pair.symmetric)
        self.assertFalse(box_pair().symmetric)

    def test_parameter_errors(self):
        with self.assertRaises(synth.SynthParameterError):
            box_pair(occlusion=1.0)
        with self.assertRaises(synth.SynthParameterError):
            box_pair(shape='torus')
        with self.assertRaises(synth.SynthParameterError):
            synth.generate_synthetic_pair(synth.ShapeSpec('box', 100.0, 500), synth.PoseSpec(400.0),
                                          synth.ClutterSpec(100, 0, 400.0), 0.0, 0.0, 1)
        with self.assertRaises(synth.SynthParameterError):
            synth.generate_synthetic_pair(synth.ShapeSpec('box', 100.0, 500), synth.PoseSpec(400.0),
                                          synth.ClutterSpec(3000, 0, 400.0), 0.0, -1.0, 1)


class TestSuite(unittest.TestCase):
    def setUp(self):
        self.cfg = config.RunConfig.from_preset('smoke')

    def test_shapes_cycle(self):
        pairs = synth.generate_suite(self.cfg, count=5)
        self.assertEqual([p.object_id for p in pairs], [1, 2, 3, 4, 1])
        self.assertEqual(pairs[3].sample_id, 'synthetic-0003')

    def test_pairs_of_one_shape_share_the_model(self):
        pairs = synth.generate_suite(self.cfg, count=5)
        self.assertEqual(pairs[0].object_cloud.positions.tolist(), pairs[4].object_cloud.positions.tolist())
        self.assertNotEqual(pairs[0].gt_pose.translation.tolist(), pairs[4].gt_pose.translation.tolist())

    def test_synthetic_source_numbers_images(self):
        pairs = pipeline.load_pairs(self.cfg)
        self.assertEqual(len(pairs), self.cfg.synthetic.pairs)
        self.assertEqual([p.image_id for p in pairs], list(range(len(pairs))))


class TestBopExport(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()
        self.cfg = config.RunConfig.from_preset('smoke')

    def tearDown(self):
        shutil.rmtree(self.tempdir)

    def test_written_dataset_loads_back(self):
        scene_dir = synth.write_bop_dataset(self.cfg, self.tempdir, count=2)
        self.assertEqual(os.path.basename(scene_dir), '000001')
        self.assertTrue(os.path.exists(os.path.join(self.tempdir, 'models', 'obj_000001.ply')))
        self.assertTrue(os.path.exists(os.path.join(self.tempdir, 'models', 'obj_000002.ply')))

        cfg = self.cfg.copy()
        cfg.update_field('data.source', 'bop')
        cfg.update_field('data.bop_root', self.tempdir)
        pairs = pipeline.load_pairs(cfg)

        self.assertEqual([p.object_id for p in pairs], [1, 2])
        self.assertEqual([p.image_id for p in pairs], [0, 1])
        for pair in pairs:
            self.assertGreater(len(pair.scene_cloud), 0)
            self.assertEqual(len(pair.pixel_map), len(pair.scene_cloud))
            self.assertEqual(len(pair.object_cloud), cfg.data.object_points)

        original = synth.generate_suite(self.cfg, count=2)
        expected = synth.CAMERA_FROM_SCENE.compose(original[1].gt_pose)
        np.testing.assert_allclose(pairs[1].gt_pose.rotation, expected.rotation, atol=1e-9)
        np.testing.assert_allclose(pairs[1].gt_pose.translation, expected.translation, atol=1e-9)

    def test_missing_root(self):
        cfg = self.cfg.copy()
        cfg.update_field('data.source', 'bop')
        cfg.update_field('data.bop_root', os.path.join(self.tempdir, 'nope'))
        with self.assertRaises(bop.BopFileMissing):
            pipeline.load_pairs(cfg)
