#
# posefeat.bop - Depth lifting, BOP scenes and detection priors (2026-10-17)
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

"""RGB-D scenes in BOP layout

A BOP scene directory holds scene_camera.json (intrinsics and depth scale
per image), scene_gt.json (model-to-camera poses per image) and depth/ and
rgb/ folders with one image per id. All matrices are stored row-major.
"""

import posefeat

from posefeat import util
from posefeat.geometry import PointCloud, RigidPose, nearest_rotation, orthonormality_error

import collections
import json
import logging
import os

import cv2
import numpy as np

logger = logging.getLogger(__name__)

# Poses further than this from a rotation are rejected
BOP_ROTATION_TOLERANCE = 1e-3

DEFAULT_MARGIN_PX = 5


class BopFileMissing(posefeat.DataError):
    pass


class BopImageMissing(posefeat.DataError):
    pass


class BopParseError(posefeat.DataError):
    pass


class BopImageNotListed(BopParseError):
    """The scene files have no entry for the requested image id"""


class BopPoseError(posefeat.DataError):
    pass


class EmptyCropError(posefeat.DataError):
    pass


class CameraIntrinsics(object):
    """Pinhole intrinsics in pixels plus mm per stored depth unit"""

    def __init__(self, fx, fy, cx, cy, depth_scale=1.0):
        self.fx, self.fy = float(fx), float(fy)
        self.cx, self.cy = float(cx), float(cy)
        self.depth_scale = float(depth_scale)

        if not (self.fx > 0 and self.fy > 0):
            raise BopParseError('Focal lengths must be positive (fx=%g, fy=%g)' % (self.fx, self.fy))
        if not self.depth_scale > 0:
            raise BopParseError('Depth scale must be positive, got %g' % self.depth_scale)

    def __repr__(self):
        return ('<CameraIntrinsics fx=%g fy=%g cx=%g cy=%g depth_scale=%g>' %
                (self.fx, self.fy, self.cx, self.cy, self.depth_scale))

    def __eq__(self, other):
        return isinstance(other, CameraIntrinsics) and self.to_json() == other.to_json()

    @classmethod
    def from_cam_k(cls, cam_k, depth_scale=1.0):
        k = np.asarray(cam_k, dtype=np.float64).reshape(3, 3)
        return cls(k[0, 0], k[1, 1], k[0, 2], k[1, 2], depth_scale)

    def cam_k(self):
        return [self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0]

    def to_json(self):
        return {'cam_K': self.cam_k(), 'depth_scale': self.depth_scale}


Detection = collections.namedtuple('Detection', 'x_min y_min x_max y_max object_id confidence image_id scene_id')


def make_detection(x_min, y_min, x_max, y_max, object_id, confidence=1.0, image_id=None, scene_id=None):
    if not (x_min < x_max and y_min < y_max):
        raise BopParseError('Degenerate detection box (%g, %g, %g, %g)' % (x_min, y_min, x_max, y_max))
    if not 0.0 <= confidence <= 1.0:
        raise BopParseError('Detection confidence %g outside [0, 1]' % confidence)
    return Detection(float(x_min), float(y_min), float(x_max), float(y_max), int(object_id),
                     float(confidence), image_id, scene_id)


def depth_pixel_map(depth):
    """(u, v) of every nonzero depth pixel, in the order lift_depth_image emits points"""
    v, u = np.nonzero(np.asarray(depth) > 0)
    return np.stack([u, v], axis=1).astype(np.int64)


def lift_depth_image(depth, rgb, intrinsics):
    """Back-project nonzero depth pixels (row-major order) into a colored cloud

    >>> intr = CameraIntrinsics(500, 500, 0, 0)
    >>> depth = np.zeros((1, 501)); depth[0, 500] = 1000
    >>> lift_depth_image(depth, None, intr).positions.tolist()
    [[1000.0, 0.0, 1000.0]]
    """
    depth = np.asarray(depth)
    if depth.ndim != 2:
        raise ValueError('Depth image must be 2-D, got shape %r' % (depth.shape,))
    if rgb is not None:
        rgb = np.asarray(rgb)
        if rgb.shape[:2] != depth.shape:
            raise ValueError('Depth %r and color %r images differ in size' % (depth.shape, rgb.shape[:2]))

    v, u = np.nonzero(depth > 0)
    z = depth[v, u].astype(np.float64) * intrinsics.depth_scale
    x = (u - intrinsics.cx) * z / intrinsics.fx
    y = (v - intrinsics.cy) * z / intrinsics.fy

    colors = None
    if rgb is not None:
        colors = rgb[v, u].astype(np.float64).reshape(-1, 3)
        if np.issubdtype(rgb.dtype, np.integer):
            colors = colors / 255.0

    if len(z) == 0:
        logger.warning('Depth image has no valid pixels; lifted cloud is empty')

    return PointCloud(np.stack([x, y, z], axis=1), colors)


def project_points(points, intrinsics):
    """Pinhole projection: (u, v) as floats and z in mm"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = points[:, 2]
    u = points[:, 0] * intrinsics.fx / z + intrinsics.cx
    v = points[:, 1] * intrinsics.fy / z + intrinsics.cy
    return u, v, z


def fill_depth_holes(depth, max_iterations):
    """Fill zero pixels with the median of their nonzero 8-neighbors

    Each iteration only looks at the previous iteration's image, so a hole
    shrinks by one pixel ring per iteration. Nonzero pixels never change.

    >>> img = np.full((3, 3), 100, dtype=np.uint16); img[1, 1] = 0
    >>> int(fill_depth_holes(img, 1)[1, 1])
    100
    """
    depth = np.asarray(depth)
    if depth.size == 0:
        raise ValueError('Depth image is empty')

    result = depth.copy()
    height, width = result.shape
    for iteration in range(max_iterations):
        holes = result == 0
        if not holes.any():
            break

        padded = np.pad(result.astype(np.float64), 1, mode='constant', constant_values=0.0)
        neighbors = np.stack([padded[1 + dv:1 + dv + height, 1 + du:1 + du + width]
                              for dv in (-1, 0, 1) for du in (-1, 0, 1) if (dv, du) != (0, 0)], axis=-1)
        valid = neighbors > 0
        fillable = holes & valid.any(axis=-1)
        if not fillable.any():
            break

        candidates = np.where(valid[fillable], neighbors[fillable], np.nan)
        values = np.nanmedian(candidates, axis=1)
        if np.issubdtype(result.dtype, np.integer):
            values = np.rint(values)
        result[fillable] = values.astype(result.dtype)
        logger.debug('Hole filling iteration %d filled %d pixels', iteration + 1, int(fillable.sum()))

    return result


def _load_json(filename):
    if not os.path.exists(filename):
        raise BopFileMissing('Missing file: %s' % filename)
    try:
        with open(filename, 'rt') as fp:
            return json.load(fp)
    except ValueError as e:
        raise BopParseError('Cannot parse %s: %s' % (filename, e))


def _image_path(scene_dir, folder, image_id, extensions):
    for extension in extensions:
        path = os.path.join(scene_dir, folder, '%06d%s' % (image_id, extension))
        if os.path.exists(path):
            return path
    raise BopImageMissing('No %s image for id %d in %s' % (folder, image_id, scene_dir))


def _read_image(path, flags):
    image = cv2.imread(path, flags)
    if image is None:
        raise BopImageMissing('Cannot decode image: %s' % path)
    return image


def bop_pose(cam_r, cam_t, filename):
    """Validate and re-orthonormalize a cam_R_m2c / cam_t_m2c pair"""
    try:
        rotation = np.asarray(cam_r, dtype=np.float64).reshape(3, 3)
        translation = np.asarray(cam_t, dtype=np.float64).reshape(3)
    except (TypeError, ValueError):
        raise BopParseError('%s: malformed cam_R_m2c / cam_t_m2c' % filename)

    error = orthonormality_error(rotation)
    if error > BOP_ROTATION_TOLERANCE or np.linalg.det(rotation) < 0:
        raise BopPoseError('%s: cam_R_m2c is not a rotation (deviation %g)' % (filename, error))

    rotation = nearest_rotation(rotation)
    if orthonormality_error(rotation) > 1e-6:
        raise BopPoseError('%s: cannot re-orthonormalize cam_R_m2c' % filename)

    return RigidPose(rotation, translation)


def scene_image_ids(scene_dir):
    gt = _load_json(os.path.join(scene_dir, 'scene_gt.json'))
    return sorted(int(key) for key in gt)


BopFrame = collections.namedtuple('BopFrame', 'cloud intrinsics poses pixel_map depth')


def read_bop_frame(scene_dir, image_id, fill_holes_iterations=0):
    camera_file = os.path.join(scene_dir, 'scene_camera.json')
    gt_file = os.path.join(scene_dir, 'scene_gt.json')
    camera = _load_json(camera_file)
    gt = _load_json(gt_file)

    key = str(image_id)
    if key not in camera:
        raise BopImageNotListed('%s lists no camera for image %s (known: %d images)' % (camera_file, key, len(camera)))
    if key not in gt:
        raise BopImageNotListed('%s lists no ground truth for image %s (known: %d images)' % (gt_file, key, len(gt)))

    try:
        intrinsics = CameraIntrinsics.from_cam_k(camera[key]['cam_K'], camera[key].get('depth_scale', 1.0))
    except (KeyError, TypeError, ValueError) as e:
        raise BopParseError('%s: bad camera entry for image %s (%s)' % (camera_file, key, e))

    poses = []
    for annotation in gt[key]:
        try:
            object_id = int(annotation['obj_id'])
            cam_r, cam_t = annotation['cam_R_m2c'], annotation['cam_t_m2c']
        except (KeyError, TypeError, ValueError):
            raise BopParseError('%s: bad annotation for image %s' % (gt_file, key))
        poses.append((object_id, bop_pose(cam_r, cam_t, gt_file)))

    depth = _read_image(_image_path(scene_dir, 'depth', image_id, ('.png',)), cv2.IMREAD_UNCHANGED)
    rgb = _read_image(_image_path(scene_dir, 'rgb', image_id, ('.png', '.jpg')), cv2.IMREAD_COLOR)
    rgb = cv2.cvtColor(rgb, cv2.COLOR_BGR2RGB)
    if depth.ndim != 2:
        raise BopParseError('Depth image for id %d in %s is not single-channel' % (image_id, scene_dir))

    if fill_holes_iterations:
        depth = fill_depth_holes(depth, fill_holes_iterations)

    cloud = lift_depth_image(depth, rgb, intrinsics)
    return BopFrame(cloud, intrinsics, poses, depth_pixel_map(depth), depth)


def read_bop_scene(scene_dir, image_id):
    """Return (scene cloud, intrinsics, [(object id, pose), ...]) for one image"""
    frame = read_bop_frame(scene_dir, image_id)
    return frame.cloud, frame.intrinsics, frame.poses


def model_path(dataset_root, object_id):
    return os.path.join(dataset_root, 'models', 'obj_%06d.ply' % object_id)


def write_bop_frame(scene_dir, image_id, depth, rgb, intrinsics, poses):
    """Add one image to a BOP scene directory, merging into existing JSON files"""
    for folder in ('depth', 'rgb'):
        util.make_directory(os.path.join(scene_dir, folder))

    key = str(image_id)
    camera_file = os.path.join(scene_dir, 'scene_camera.json')
    gt_file = os.path.join(scene_dir, 'scene_gt.json')
    camera = _load_json(camera_file) if os.path.exists(camera_file) else {}
    gt = _load_json(gt_file) if os.path.exists(gt_file) else {}

    camera[key] = intrinsics.to_json()
    gt[key] = [{'obj_id': int(object_id),
                'cam_R_m2c': pose.rotation.reshape(-1).tolist(),
                'cam_t_m2c': pose.translation.tolist()} for object_id, pose in poses]

    util.write_json(camera_file, camera)
    util.write_json(gt_file, gt)

    depth_path = os.path.join(scene_dir, 'depth', '%06d.png' % image_id)
    rgb_path = os.path.join(scene_dir, 'rgb', '%06d.png' % image_id)
    if not cv2.imwrite(depth_path, np.asarray(depth, dtype=np.uint16)):
        raise BopImageMissing('Cannot write %s' % depth_path)
    if not cv2.imwrite(rgb_path, cv2.cvtColor(np.asarray(rgb, dtype=np.uint8), cv2.COLOR_RGB2BGR)):
        raise BopImageMissing('Cannot write %s' % rgb_path)


def read_detections(filename):
    """Parse a JSON list of {image_id, obj_id, bbox [x, y, w, h], score}"""
    data = _load_json(filename)
    if not isinstance(data, list):
        raise BopParseError('%s: expected a list of detections' % filename)

    detections = []
    for index, entry in enumerate(data):
        try:
            x, y, w, h = (float(v) for v in entry['bbox'])
            detections.append(make_detection(x, y, x + w, y + h, entry['obj_id'], float(entry.get('score', 1.0)),
                                             int(entry['image_id']), entry.get('scene_id')))
        except (KeyError, TypeError, ValueError) as e:
            raise BopParseError('%s: bad detection #%d (%s)' % (filename, index, e))

    logger.info('Read %d detections from %s', len(detections), filename)
    return detections


def select_detection(detections, image_id, object_id, scene_id=None):
    """Most confident detection of object_id in the image, or None"""
    best = None
    for det in detections:
        if det.image_id != image_id or det.object_id != object_id:
            continue
        if det.scene_id is not None and scene_id is not None and str(det.scene_id) != str(scene_id):
            continue
        if best is None or det.confidence > best.confidence:
            best = det
    return best


def crop_mask(pixel_map, det, margin_px=DEFAULT_MARGIN_PX):
    u = pixel_map[:, 0]
    v = pixel_map[:, 1]
    return ((u >= det.x_min - margin_px) & (u < det.x_max + margin_px) &
            (v >= det.y_min - margin_px) & (v < det.y_max + margin_px))


def crop_by_detection(scene, pixel_map, det, margin_px=DEFAULT_MARGIN_PX):
    """Keep the scene points whose source pixel lies in the expanded box"""
    pixel_map = np.asarray(pixel_map).reshape(-1, 2)
    if len(pixel_map) != len(scene):
        raise ValueError('Pixel map has %d entries for %d points' % (len(pixel_map), len(scene)))

    mask = crop_mask(pixel_map, det, margin_px)
    if not mask.any():
        raise EmptyCropError('Detection (%g, %g, %g, %g) of object %d contains no scene points' %
                             (det.x_min, det.y_min, det.x_max, det.y_max, det.object_id))
    return scene.subset(np.flatnonzero(mask))
