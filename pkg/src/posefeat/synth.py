#
# posefeat.synth - Procedural objects and cluttered synthetic scenes (2026-10-17)
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

"""Synthetic object/scene pairs with exact ground truth

Objects are procedural meshes whose faces carry colored bands, so color
is informative even where the geometry is symmetric. A scene is a support
plane at z = 0 with distractor objects and one target object resting on
it, seen through a partial occlusion and Gaussian position noise.
"""

import posefeat

from posefeat import bop
from posefeat import registry
from posefeat import util
from posefeat.geometry import (PointCloud, RigidPose, NeighborIndex, cloud_diameter, concatenate,
                               random_rotation, rotation_about_axis)
from posefeat.plyfile import TexturedMesh, sample_mesh_surface, write_ply_model

import collections
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

# Object ids of the procedural shapes (BOP ids start at 1)
SHAPE_IDS = collections.OrderedDict([('box', 1), ('cylinder', 2), ('l_bracket', 3), ('composite', 4)])

PALETTE = np.array([
    [0.85, 0.20, 0.15],
    [0.15, 0.55, 0.85],
    [0.95, 0.80, 0.10],
    [0.20, 0.70, 0.30],
    [0.60, 0.25, 0.70],
    [0.95, 0.50, 0.10],
])

# Camera looking down on the support plane, used when rendering to BOP layout
CAMERA_FROM_SCENE = RigidPose(rotation_about_axis([1.0, 0.0, 0.0], np.pi), [0.0, 0.0, 700.0])
RENDER_INTRINSICS = bop.CameraIntrinsics(600.0, 600.0, 320.0, 240.0, depth_scale=0.1)
RENDER_SIZE = (480, 640)


class SynthParameterError(posefeat.DataError):
    pass


ShapeSpec = collections.namedtuple('ShapeSpec', 'name size points')
PoseSpec = collections.namedtuple('PoseSpec', 'extent')
ClutterSpec = collections.namedtuple('ClutterSpec', 'scene_points distractors extent')


class ScenePair(object):
    """Object cloud (model frame) and scene cloud with the exact model-to-scene pose"""

    def __init__(self, object_cloud, scene_cloud, gt_pose, object_diameter=None, object_id=0,
                 symmetric=False, sample_id='', image_id=None, scene_id=None, pixel_map=None):
        self.object_cloud = object_cloud
        self.scene_cloud = scene_cloud
        self.gt_pose = gt_pose
        if object_diameter is None:
            object_diameter = cloud_diameter(object_cloud)
        self.object_diameter = float(object_diameter)
        self.object_id = object_id
        self.symmetric = symmetric
        self.sample_id = sample_id
        self.image_id = image_id
        self.scene_id = scene_id
        self.pixel_map = pixel_map

    def __repr__(self):
        return '<ScenePair %s: object %d (%d points), scene %d points>' % (
            self.sample_id or '?', self.object_id, len(self.object_cloud), len(self.scene_cloud))


class _MeshParts(object):
    def __init__(self):
        self.vertices = []
        self.triangles = []
        self.colors = []
        self.count = 0

    def add(self, vertices, triangles, colors):
        self.vertices.append(np.asarray(vertices, dtype=np.float64))
        self.triangles.append(np.asarray(triangles, dtype=np.int64) + self.count)
        self.colors.append(np.asarray(colors, dtype=np.float64))
        self.count += len(vertices)

    def grid(self, corner, edge_u, edge_v, color, steps=4, stripe_axis=0):
        """Subdivided parallelogram; every other row (or column) of vertices is darker"""
        corner, edge_u, edge_v = (np.asarray(a, dtype=np.float64) for a in (corner, edge_u, edge_v))
        s = np.linspace(0.0, 1.0, steps + 1)
        uu, vv = np.meshgrid(s, s, indexing='ij')
        vertices = corner + uu.reshape(-1, 1) * edge_u + vv.reshape(-1, 1) * edge_v

        band = (np.arange(steps + 1) // 2) % 2
        band = np.repeat(band, steps + 1) if stripe_axis == 0 else np.tile(band, steps + 1)
        colors = np.asarray(color) * np.where(band == 1, 0.55, 1.0)[:, None]

        triangles = []
        for i in range(steps):
            for j in range(steps):
                a = i * (steps + 1) + j
                b = a + steps + 1
                triangles.append((a, b, b + 1))
                triangles.append((a, b + 1, a + 1))
        self.add(vertices, triangles, colors)

    def box(self, center, dims, palette_offset=0):
        cx, cy, cz = center
        dx, dy, dz = (d / 2.0 for d in dims)
        lo = np.array([cx - dx, cy - dy, cz - dz])
        ex, ey, ez = np.array([2 * dx, 0, 0]), np.array([0, 2 * dy, 0]), np.array([0, 0, 2 * dz])
        faces = [
            (lo, ey, ez), (lo + ex, ey, ez),
            (lo, ex, ez), (lo + ey, ex, ez),
            (lo, ex, ey), (lo + ez, ex, ey),
        ]
        for index, (corner, u, v) in enumerate(faces):
            self.grid(corner, u, v, PALETTE[(index + palette_offset) % len(PALETTE)], stripe_axis=index % 2)

    def cylinder(self, center, radius, height, sectors=4, steps=32, palette_offset=0):
        theta = np.linspace(0.0, 2 * np.pi, steps + 1)
        z = np.linspace(-height / 2.0, height / 2.0, 9)
        tt, zz = np.meshgrid(theta, z, indexing='ij')
        vertices = np.stack([radius * np.cos(tt), radius * np.sin(tt), zz], axis=-1).reshape(-1, 3) + center

        sector = np.minimum((tt / (2 * np.pi) * sectors).astype(int), sectors - 1).reshape(-1)
        colors = PALETTE[(sector + palette_offset) % len(PALETTE)]
        rows = len(z)
        triangles = []
        for i in range(steps):
            for j in range(rows - 1):
                a = i * rows + j
                b = a + rows
                triangles.append((a, b, b + 1))
                triangles.append((a, b + 1, a + 1))
        self.add(vertices, triangles, colors)

        for sign in (-1.0, 1.0):
            ring = np.stack([radius * np.cos(theta[:-1]), radius * np.sin(theta[:-1]),
                             np.full(steps, sign * height / 2.0)], axis=1) + center
            hub = np.asarray(center, dtype=np.float64) + [0.0, 0.0, sign * height / 2.0]
            vertices = np.vstack([hub, ring])
            ring_colors = PALETTE[(np.arange(steps) * sectors // steps + palette_offset + 3) % len(PALETTE)]
            colors = np.vstack([[0.9, 0.9, 0.9], ring_colors])
            triangles = [(0, 1 + k, 1 + (k + 1) % steps) for k in range(steps)]
            self.add(vertices, triangles, colors)

    def mesh(self):
        return TexturedMesh(np.vstack(self.vertices), np.vstack(self.triangles), np.vstack(self.colors))


@registry.shape_builder.register
def box(size):
    parts = _MeshParts()
    parts.box([0.0, 0.0, 0.0], [size, 0.6 * size, 0.4 * size])
    return parts.mesh(), False


@registry.shape_builder.register
def cylinder(size):
    parts = _MeshParts()
    parts.cylinder([0.0, 0.0, 0.0], 0.3 * size, size, palette_offset=1)
    return parts.mesh(), True


@registry.shape_builder.register
def l_bracket(size):
    parts = _MeshParts()
    parts.box([0.0, 0.0, 0.0], [size, 0.25 * size, 0.4 * size], palette_offset=2)
    parts.box([-0.375 * size, 0.475 * size, 0.0], [0.25 * size, 0.7 * size, 0.4 * size], palette_offset=4)
    return parts.mesh(), False


@registry.shape_builder.register
def composite(size):
    parts = _MeshParts()
    parts.box([0.0, 0.0, -0.15 * size], [0.8 * size, 0.8 * size, 0.3 * size], palette_offset=3)
    parts.cylinder([0.0, 0.0, 0.25 * size], 0.2 * size, 0.5 * size, palette_offset=5)
    return parts.mesh(), False


def build_shape(name, size):
    """Return (mesh, symmetric geometry flag) for a registered shape"""
    return registry.shape_builder.resolve(name, size)


def _plane_points(count, extent, rng):
    xy = rng.uniform(-extent / 2.0, extent / 2.0, size=(count, 2))
    checker = ((np.floor(xy[:, 0] / 50.0) + np.floor(xy[:, 1] / 50.0)) % 2).reshape(-1, 1)
    colors = np.where(checker == 1, 0.75, 0.55) * np.ones((count, 3))
    return PointCloud(np.column_stack([xy, np.zeros(count)]), colors)


def _resting_pose(points, xy, rng):
    """Random orientation with the lowest point just above z = 0"""
    rotation = random_rotation(rng)
    rotated = points @ rotation.T
    return RigidPose(rotation, [xy[0], xy[1], 1.0 - rotated[:, 2].min()])


def occlude(points, fraction, rng):
    """Ids of the points kept after deleting the round(fraction * N) points nearest a random point"""
    count = int(round(fraction * len(points)))
    if count <= 0:
        return np.arange(len(points))

    center = points[rng.integers(len(points))]
    removed, _ = NeighborIndex(points).knn(center, count)
    keep = np.ones(len(points), dtype=bool)
    keep[removed] = False
    return np.flatnonzero(keep)


def generate_synthetic_pair(shape_spec, pose_spec, clutter_spec, occlusion_fraction, noise_sigma_mm, seed,
                            model_seed=None):
    """Procedural object placed in a cluttered scene with known pose

    model_seed fixes the object surface sampling, so pairs sharing it share
    one object model; by default it derives from seed.
    """
    if not 0.0 <= occlusion_fraction < 1.0:
        raise SynthParameterError('Occlusion fraction must be in [0, 1), got %r' % occlusion_fraction)
    if noise_sigma_mm < 0:
        raise SynthParameterError('Noise sigma must be >= 0, got %r' % noise_sigma_mm)
    if shape_spec.name not in SHAPE_IDS:
        raise SynthParameterError('Unknown shape %r (valid: %s)' % (shape_spec.name, ', '.join(SHAPE_IDS)))

    rng = util.derive_rng(seed, 'scene')
    mesh, symmetric = build_shape(shape_spec.name, shape_spec.size)
    if model_seed is None:
        model_seed = util.derive_seed(seed, 'object')
    object_cloud = sample_mesh_surface(mesh, shape_spec.points, model_seed)

    half = max(pose_spec.extent / 2.0 - shape_spec.size, 0.0)
    gt_pose = _resting_pose(object_cloud.positions, rng.uniform(-half, half, size=2), rng)
    placed = gt_pose.apply(object_cloud.positions)

    keep = occlude(placed, occlusion_fraction, rng)
    visible = PointCloud(placed[keep], object_cloud.colors[keep])

    remaining = clutter_spec.scene_points - len(visible)
    if remaining < 0:
        raise SynthParameterError('Scene budget of %d points is smaller than the %d visible object points' %
                                  (clutter_spec.scene_points, len(visible)))

    per_distractor = remaining // (2 * clutter_spec.distractors) if clutter_spec.distractors else 0
    parts = [visible, _plane_points(remaining - per_distractor * clutter_spec.distractors, clutter_spec.extent, rng)]

    names = list(SHAPE_IDS)
    for index in range(clutter_spec.distractors):
        if per_distractor == 0:
            break
        name = names[rng.integers(len(names))]
        size = shape_spec.size * rng.uniform(0.5, 0.8)
        distractor_mesh, _ = build_shape(name, size)
        cloud = sample_mesh_surface(distractor_mesh, per_distractor, util.derive_seed(seed, 'distractor', index))

        # Keep distractors clear of the target object
        for _ in range(100):
            xy = rng.uniform(-clutter_spec.extent / 2.0, clutter_spec.extent / 2.0, size=2)
            if np.linalg.norm(xy - gt_pose.translation[:2]) > 1.5 * (shape_spec.size + size):
                break
        pose = _resting_pose(cloud.positions, xy, rng)
        parts.append(PointCloud(pose.apply(cloud.positions), cloud.colors))

    scene = concatenate(parts)
    positions = scene.positions
    if noise_sigma_mm > 0:
        positions = positions + rng.normal(0.0, noise_sigma_mm, size=positions.shape)

    order = rng.permutation(len(scene))
    scene_cloud = PointCloud(positions[order], scene.colors[order])

    logger.debug('Generated %s pair: %d of %d object points visible, %d scene points',
                 shape_spec.name, len(visible), len(object_cloud), len(scene_cloud))

    return ScenePair(object_cloud, scene_cloud, gt_pose, object_id=SHAPE_IDS[shape_spec.name],
                     symmetric=symmetric, sample_id='synthetic-%d' % seed)


def generate_suite(cfg, count=None, seed=None):
    """The standard synthetic suite: shapes cycle, seeds derive from the run seed"""
    synthetic = cfg.synthetic
    count = synthetic.pairs if count is None else count
    seed = cfg.seed if seed is None else seed
    shapes = list(synthetic.shapes)
    for name in shapes:
        if name not in SHAPE_IDS:
            raise SynthParameterError('Unknown shape %r (valid: %s)' % (name, ', '.join(SHAPE_IDS)))

    pairs = []
    for index in range(count):
        name = shapes[index % len(shapes)]
        pair = generate_synthetic_pair(ShapeSpec(name, synthetic.object_size, cfg.data.object_points),
                                       PoseSpec(synthetic.scene_extent),
                                       ClutterSpec(cfg.data.scene_points, synthetic.distractors,
                                                   synthetic.scene_extent),
                                       synthetic.occlusion, synthetic.noise_sigma,
                                       util.derive_seed(seed, 'pair', index),
                                       model_seed=util.derive_seed(seed, 'model', name))
        pair.sample_id = 'synthetic-%04d' % index
        pairs.append(pair)
    return pairs


def render_depth(cloud, intrinsics=RENDER_INTRINSICS, size=RENDER_SIZE):
    """Z-buffer splat of a camera-frame cloud into (depth units, 8-bit RGB) images"""
    height, width = size
    u, v, z = bop.project_points(cloud.positions, intrinsics)
    u = np.floor(u + 0.5).astype(np.int64)
    v = np.floor(v + 0.5).astype(np.int64)
    inside = (z > 0) & (u >= 0) & (u < width) & (v >= 0) & (v < height)

    u, v, z = u[inside], v[inside], z[inside]
    colors = cloud.colors_or_zeros()[inside]

    # Nearest point wins each pixel; ties go to the lower point id
    order = np.lexsort((np.arange(len(z)), z))
    pixel = v[order] * width + u[order]
    _, first = np.unique(pixel, return_index=True)
    chosen = order[first]

    depth = np.zeros(size, dtype=np.uint16)
    rgb = np.zeros(size + (3,), dtype=np.uint8)
    units = np.clip(np.rint(z[chosen] / intrinsics.depth_scale), 1, np.iinfo(np.uint16).max)
    depth[v[chosen], u[chosen]] = units.astype(np.uint16)
    rgb[v[chosen], u[chosen]] = np.clip(np.rint(colors[chosen] * 255.0), 0, 255).astype(np.uint8)
    return depth, rgb


def write_bop_dataset(cfg, out_dir, count=None):
    """Render the synthetic suite into a one-scene BOP dataset under out_dir"""
    util.make_directory(os.path.join(out_dir, 'models'))
    scene_dir = os.path.join(out_dir, '000001')
    util.make_directory(scene_dir)

    written_models = set()
    pairs = generate_suite(cfg, count)
    for image_id, pair in enumerate(pairs):
        if pair.object_id not in written_models:
            name = [n for n, i in SHAPE_IDS.items() if i == pair.object_id][0]
            mesh, _ = build_shape(name, cfg.synthetic.object_size)
            write_ply_model(bop.model_path(out_dir, pair.object_id), mesh)
            written_models.add(pair.object_id)

        camera_cloud = PointCloud(CAMERA_FROM_SCENE.apply(pair.scene_cloud.positions), pair.scene_cloud.colors)
        depth, rgb = render_depth(camera_cloud)
        bop.write_bop_frame(scene_dir, image_id, depth, rgb, RENDER_INTRINSICS,
                            [(pair.object_id, CAMERA_FROM_SCENE.compose(pair.gt_pose))])

    logger.info('Wrote %d synthetic images in BOP layout to %s', len(pairs), out_dir)
    return scene_dir
