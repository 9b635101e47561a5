#
# test_posefeat.plyfile - Unit tests for posefeat.plyfile (2026-10-17)
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

from posefeat import plyfile


def square_mesh():
    vertices = [[0, 0, 0], [10, 0, 0], [10, 10, 0], [0, 10, 0]]
    colors = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]
    return plyfile.TexturedMesh(vertices, [[0, 1, 2], [0, 2, 3]], colors)


class TestPlyFile(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tempdir)

    def path(self, name):
        return os.path.join(self.tempdir, name)

    def write_text(self, name, text):
        with open(self.path(name), 'wb') as fp:
            fp.write(text.encode('ascii'))
        return self.path(name)

    def test_binary_round_trip(self):
        mesh = square_mesh()
        plyfile.write_ply_model(self.path('square.ply'), mesh)
        again = plyfile.read_ply_model(self.path('square.ply'))
        self.assertEqual(again.vertices.tolist(), mesh.vertices.tolist())
        self.assertEqual(again.triangles.tolist(), mesh.triangles.tolist())
        self.assertEqual(again.colors.tolist(), mesh.colors.tolist())

    def test_ascii_round_trip(self):
        mesh = square_mesh()
        plyfile.write_ply_model(self.path('square.ply'), mesh, binary=False)
        again = plyfile.read_ply_model(self.path('square.ply'))
        self.assertEqual(again.vertices.tolist(), mesh.vertices.tolist())
        self.assertEqual(again.triangles.tolist(), mesh.triangles.tolist())

    def test_ascii_quad_is_fan_triangulated(self):
        path = self.write_text('quad.ply', '\n'.join([
            'ply', 'format ascii 1.0', 'comment a single quad',
            'element vertex 4', 'property float x', 'property float y', 'property float z',
            'element face 1', 'property list uchar int vertex_indices', 'end_header',
            '0 0 0', '1 0 0', '1 1 0', '0 1 0', '4 0 1 2 3', '']))
        mesh = plyfile.read_ply_model(path)
        self.assertEqual(mesh.triangles.tolist(), [[0, 1, 2], [0, 2, 3]])
        self.assertIsNone(mesh.colors)

    def test_bad_magic(self):
        path = self.write_text('bad.ply', 'obj\nformat ascii 1.0\nend_header\n')
        with self.assertRaises(plyfile.PlyHeaderError):
            plyfile.read_ply_model(path)

    def test_big_endian_is_rejected(self):
        path = self.write_text('be.ply', 'ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n')
        with self.assertRaises(plyfile.PlyEndiannessError):
            plyfile.read_ply_model(path)

    def test_missing_end_header(self):
        path = self.write_text('short.ply', 'ply\nformat ascii 1.0\nelement vertex 1\n')
        with self.assertRaises(plyfile.PlyHeaderError):
            plyfile.read_ply_model(path)

    def test_truncated_binary_payload(self):
        plyfile.write_ply_model(self.path('square.ply'), square_mesh())
        with open(self.path('square.ply'), 'rb') as fp:
            data = fp.read()
        with open(self.path('cut.ply'), 'wb') as fp:
            fp.write(data[:-20])
        with self.assertRaises(plyfile.PlyTruncatedError):
            plyfile.read_ply_model(self.path('cut.ply'))

    def test_truncated_ascii_payload(self):
        path = self.write_text('cut.ply', '\n'.join([
            'ply', 'format ascii 1.0',
            'element vertex 3', 'property float x', 'property float y', 'property float z',
            'element face 1', 'property list uchar int vertex_indices', 'end_header',
            '0 0 0', '1 0 0', '']))
        with self.assertRaises(plyfile.PlyTruncatedError):
            plyfile.read_ply_model(path)


class TestSurfaceSampling(unittest.TestCase):
    def test_points_lie_on_the_mesh(self):
        cloud = plyfile.sample_mesh_surface(square_mesh(), 500, seed=4)
        self.assertEqual(len(cloud), 500)
        self.assertTrue(np.all(cloud.positions[:, 2] == 0.0))
        self.assertTrue(np.all((cloud.positions[:, :2] > -1e-9) & (cloud.positions[:, :2] < 10.0 + 1e-9)))
        self.assertTrue(np.all((cloud.colors >= 0.0) & (cloud.colors <= 1.0)))

    def test_sampling_is_seeded(self):
        first = plyfile.sample_mesh_surface(square_mesh(), 50, seed=9)
        second = plyfile.sample_mesh_surface(square_mesh(), 50, seed=9)
        self.assertEqual(first.positions.tolist(), second.positions.tolist())

    def test_zero_area_mesh(self):
        mesh = plyfile.TexturedMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
        with self.assertRaises(plyfile.MeshAreaError):
            plyfile.sample_mesh_surface(mesh, 10, seed=0)
