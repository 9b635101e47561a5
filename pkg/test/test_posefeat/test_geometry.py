#
# test_posefeat.geometry - Unit tests for posefeat.geometry (2026-10-17)
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

import posefeat

from posefeat import geometry
from posefeat.geometry import NeighborIndex, PointCloud, RigidPose


class TestPointCloud(unittest.TestCase):
    def test_rejects_non_finite_positions(self):
        with self.assertRaises(geometry.InvalidCloudError):
            PointCloud([[0.0, np.nan, 0.0]])

    def test_rejects_color_count_mismatch(self):
        with self.assertRaises(geometry.InvalidCloudError):
            PointCloud([[0, 0, 0], [1, 1, 1]], [[1, 0, 0]])

    def test_arrays_are_read_only(self):
        cloud = PointCloud([[0, 0, 0]], [[0.5, 0.5, 0.5]])
        with self.assertRaises(ValueError):
            cloud.positions[0, 0] = 1.0

    def test_subset_keeps_colors(self):
        cloud = PointCloud([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 0, 0], [0.5, 0.5, 0.5], [1, 1, 1]])
        part = cloud.subset([2, 0])
        self.assertEqual(part.positions.tolist(), [[2, 0, 0], [0, 0, 0]])
        self.assertEqual(part.colors.tolist(), [[1, 1, 1], [0, 0, 0]])

    def test_concatenate_drops_partial_colors(self):
        joined = geometry.concatenate([PointCloud([[0, 0, 0]], [[1, 0, 0]]), PointCloud([[1, 1, 1]])])
        self.assertEqual(len(joined), 2)
        self.assertFalse(joined.has_colors)


class TestRigidPose(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(3)
        self.pose = RigidPose(geometry.random_rotation(self.rng), [10.0, -5.0, 300.0])

    def test_inverse_round_trip(self):
        points = self.rng.normal(size=(20, 3)) * 50
        back = self.pose.inverse().apply(self.pose.apply(points))
        np.testing.assert_allclose(back, points, atol=1e-9)

    def test_compose_applies_right_first(self):
        other = RigidPose(geometry.rotation_about_axis([0, 0, 1], 0.3), [1.0, 2.0, 3.0])
        points = self.rng.normal(size=(5, 3))
        np.testing.assert_allclose(self.pose.compose(other).apply(points), self.pose.apply(other.apply(points)),
                                   atol=1e-9)

    def test_rejects_reflection(self):
        with self.assertRaises(geometry.InvalidPoseError):
            RigidPose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    def test_rejects_non_orthonormal(self):
        with self.assertRaises(geometry.InvalidPoseError):
            RigidPose(np.eye(3) * 1.01, np.zeros(3))

    def test_json_round_trip(self):
        again = RigidPose.from_json(self.pose.to_json())
        self.assertEqual(again.rotation.tolist(), self.pose.rotation.tolist())
        self.assertEqual(again.translation.tolist(), self.pose.translation.tolist())

    def test_invalid_pose_is_a_data_error(self):
        self.assertTrue(issubclass(geometry.InvalidPoseError, posefeat.DataError))


class TestDiameter(unittest.TestCase):
    def test_unit_cube_corners(self):
        corners = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        self.assertAlmostEqual(geometry.cloud_diameter(PointCloud(corners)), np.sqrt(3.0))

    def test_needs_two_points(self):
        with self.assertRaises(geometry.InvalidCloudError):
            geometry.cloud_diameter(PointCloud([[0, 0, 0]]))


class TestKabschFit(unittest.TestCase):
    def test_recovers_exact_pose(self):
        rng = np.random.default_rng(11)
        truth = RigidPose(geometry.random_rotation(rng), rng.normal(size=3) * 100)
        src = rng.normal(size=(30, 3)) * 40
        fitted = geometry.kabsch_fit(src, truth.apply(src))
        np.testing.assert_allclose(fitted.rotation, truth.rotation, atol=1e-9)
        np.testing.assert_allclose(fitted.translation, truth.translation, atol=1e-7)

    def test_collinear_points_are_degenerate(self):
        src = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], dtype=float)
        with self.assertRaises(geometry.DegenerateFitError):
            geometry.kabsch_fit(src, src)

    def test_too_few_points(self):
        with self.assertRaises(geometry.DegenerateFitError):
            geometry.kabsch_fit(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_degenerate_fit_is_numerical(self):
        self.assertEqual(geometry.DegenerateFitError.exit_code, posefeat.EXIT_NUMERICAL)


class TestNeighborIndex(unittest.TestCase):
    def test_knn_matches_linear_scan(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            points = rng.uniform(-100, 100, size=(200, 3))
            query = rng.uniform(-100, 100, size=3)
            k = 1 + seed % 7

            distances = np.linalg.norm(points - query, axis=1)
            expected = np.lexsort((np.arange(len(points)), distances))[:k]

            result = geometry.nn_query(NeighborIndex(points), query, k)
            self.assertEqual([i for i, _ in result], expected.tolist())
            self.assertEqual([d for _, d in result], distances[expected].tolist())

    def test_ties_go_to_lowest_id(self):
        index = NeighborIndex([[1, 0, 0], [-1, 0, 0], [0, 1, 0]])
        self.assertEqual([i for i, _ in geometry.nn_query(index, [0, 0, 0], 2)], [0, 1])
        ids, _ = index.nearest([[0, 0, 0]])
        self.assertEqual(ids.tolist(), [0])

    def test_k_larger_than_index(self):
        with self.assertRaises(ValueError):
            NeighborIndex([[0, 0, 0]]).knn([0, 0, 0], 2)

    def test_empty_index(self):
        with self.assertRaises(geometry.InvalidCloudError):
            NeighborIndex(np.zeros((0, 3)))

    def test_within_is_inclusive(self):
        index = NeighborIndex([[0, 0, 0], [2, 0, 0], [3, 0, 0]])
        self.assertEqual(index.within([0, 0, 0], 2.0).tolist(), [0, 1])


class TestNearestRows(unittest.TestCase):
    def test_exclusion_mask(self):
        queries = np.array([[0.0, 0.0]])
        targets = np.array([[0.0, 0.1], [0.0, 5.0]])

        def exclude_first(start, stop):
            mask = np.zeros((stop - start, 2), dtype=bool)
            mask[:, 0] = True
            return mask

        ids, distances = geometry.nearest_rows(queries, targets, exclude_first)
        self.assertEqual(ids.tolist(), [1])
        self.assertEqual(distances.tolist(), [5.0])

    def test_fully_excluded_row(self):
        ids, distances = geometry.nearest_rows(np.zeros((1, 2)), np.ones((2, 2)),
                                               lambda a, b: np.ones((b - a, 2), dtype=bool))
        self.assertEqual(ids.tolist(), [-1])
        self.assertTrue(np.isinf(distances[0]))
