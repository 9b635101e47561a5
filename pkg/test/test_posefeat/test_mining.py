#
# test_posefeat.mining - Unit tests for posefeat.mining (2026-10-17)
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



import unittest

import numpy as np

from posefeat import geometry
from posefeat import mining
from posefeat.geometry import PointCloud, RigidPose


def scene_fixture(seed):
    rng = np.random.default_rng(seed)
    obj = PointCloud(rng.uniform(-30.0, 30.0, size=(60, 3)))
    gt = RigidPose(geometry.random_rotation(rng), rng.normal(size=3) * 50)
    visible = gt.apply(obj.positions[:40]) + rng.normal(0.0, 0.5, size=(40, 3))
    clutter = rng.uniform(-200.0, 200.0, size=(200, 3))
    return obj, PointCloud(np.vstack([clutter, visible])), gt


class TestPositives(unittest.TestCase):
    def test_matches_brute_force(self):
        for seed in range(10):
            obj, scene, gt = scene_fixture(seed)
            positives = mining.mine_positives(obj, scene, gt, 4.0)

            transformed = gt.apply(obj.positions)
            distances = np.linalg.norm(transformed[:, None, :] - scene.positions[None, :, :], axis=2)
            nearest = distances.argmin(axis=1)
            keep = np.flatnonzero(distances[np.arange(len(obj)), nearest] < 4.0)

            self.assertEqual(positives.object_ids.tolist(), keep.tolist())
            self.assertEqual(positives.scene_ids.tolist(), nearest[keep].tolist())
            self.assertTrue(np.all(positives.distances < 4.0))

    def test_cap_keeps_a_subset(self):
        obj, scene, gt = scene_fixture(3)
        full = mining.mine_positives(obj, scene, gt, 4.0)
        capped = mining.mine_positives(obj, scene, gt, 4.0, max_pairs=10, seed=1)
        self.assertEqual(len(capped), 10)
        self.assertTrue(set(capped.pairs()) <= set(full.pairs()))
        self.assertEqual(capped.pairs(), mining.mine_positives(obj, scene, gt, 4.0, max_pairs=10, seed=1).pairs())

    def test_disjoint_clouds(self):
        obj, scene, gt = scene_fixture(4)
        far = RigidPose(gt.rotation, gt.translation + [5000.0, 0.0, 0.0])
        with self.assertRaises(mining.NoCorrespondencesError):
            mining.mine_positives(obj, scene, far, 4.0)

    def test_to_json(self):
        data = mining.CorrespondenceSet([0, 2], [5, 1], [0.5, 1.5]).to_json()
        self.assertEqual(data, {'object_ids': [0, 2], 'scene_ids': [5, 1], 'distances': [0.5, 1.5]})

    def test_duplicate_object_ids(self):
        with self.assertRaises(ValueError):
            mining.CorrespondenceSet([1, 1], [0, 2], [0.1, 0.2])


class TestNegativeCandidates(unittest.TestCase):
    def assert_outside_sphere(self, positions, side):
        for k, anchor in enumerate(side.anchor_ids):
            distances = np.linalg.norm(positions[side.pool] - positions[anchor], axis=1)
            expected = side.pool[distances > side.radius]
            self.assertEqual(side.candidates(k).tolist(), expected.tolist())

    def test_candidates_exclude_the_safety_sphere(self):
        obj, scene, gt = scene_fixture(7)
        positives = mining.mine_positives(obj, scene, gt, 4.0)
        negatives = mining.build_negative_candidates(obj, scene, positives, 0.2, 60.0)

        self.assertAlmostEqual(negatives.safety_radius, 12.0)
        self.assert_outside_sphere(obj.positions, negatives.object_side)
        self.assert_outside_sphere(scene.positions, negatives.scene_side)
        self.assertEqual(negatives.object_side.counts().tolist(),
                         [len(negatives.object_candidates(k)) for k in range(len(positives))])

    def test_scene_radius_override(self):
        obj, scene, gt = scene_fixture(8)
        positives = mining.mine_positives(obj, scene, gt, 4.0)
        negatives = mining.build_negative_candidates(obj, scene, positives, 0.1, 60.0, scene_radius=30.0)
        self.assertEqual(negatives.scene_side.radius, 30.0)
        self.assert_outside_sphere(scene.positions, negatives.scene_side)

    def test_zero_radius_excludes_only_the_anchor(self):
        obj, scene, gt = scene_fixture(9)
        positives = mining.mine_positives(obj, scene, gt, 4.0)
        negatives = mining.build_negative_candidates(obj, scene, positives, 0.0, 60.0)
        self.assertTrue(np.all(negatives.object_side.counts() == len(obj) - 1))

    def test_scene_pool_is_capped(self):
        obj, scene, gt = scene_fixture(10)
        positives = mining.mine_positives(obj, scene, gt, 4.0)
        negatives = mining.build_negative_candidates(obj, scene, positives, 0.1, 60.0, scene_sample_cap=50, seed=2)
        pool = negatives.scene_side.pool
        self.assertEqual(len(pool), 50)
        self.assertEqual(pool.tolist(), sorted(pool.tolist()))

    def test_bad_arguments(self):
        obj, scene, gt = scene_fixture(11)
        positives = mining.mine_positives(obj, scene, gt, 4.0)
        with self.assertRaises(ValueError):
            mining.build_negative_candidates(obj, scene, positives, -0.1, 60.0)
        with self.assertRaises(ValueError):
            mining.build_negative_candidates(obj, scene, positives, 0.1, 0.0)
