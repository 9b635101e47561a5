#
# posefeat.embed - Per-point descriptors and the embedding model (2026-10-17)
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

"""Per-point feature model

Every point gets a 14-wide descriptor computed from its neighborhood:

    0-2    color (zero when colors are absent or disabled)
    3-5    normal at r2 (smallest covariance eigenvector, z >= 0)
    6-8    covariance eigenvalues at r1, descending, normalized to sum 1
    9-11   covariance eigenvalues at r2, likewise
    12-13  mean and std of neighbor offsets along the normal, over r2

A three-layer perceptron D -> H -> H -> F with softplus on the hidden
layers maps descriptors to features. Object and scene each own a model
unless the shared-weights variant is selected.

Checkpoints are JSON documents:

    {"format": "posefeat-checkpoint", "version": 1, "config_hash": ...,
     "features": F, "radii_scale": [s1, s2], "shared_weights": bool,
     "config": {...}, "groups": {"<group>": {"object": MODEL, "scene": MODEL}}}

where MODEL = {"seed": int, "layers": [{"W": {"shape": [r, c], "data": [...]},
"b": {"shape": [c], "data": [...]}}, ...]} and group is "all" or an object id.
"""

import posefeat

from posefeat import util
from posefeat.geometry import NeighborIndex

import collections
import logging

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

DESCRIPTOR_WIDTH = 14
MIN_DESCRIPTOR_POINTS = 10
MIN_NEIGHBORS = 3

CHECKPOINT_FORMAT = 'posefeat-checkpoint'
CHECKPOINT_VERSION = 1

GROUP_ALL = 'all'


class StaleCacheError(posefeat.NumericalError):
    pass


class CheckpointError(posefeat.DataError):
    pass


DescriptorSet = collections.namedtuple('DescriptorSet', 'matrix valid radii')


def _neighborhood_stats(positions, index, radius):
    """Per-point covariance eigen-decomposition over the radius ball"""
    count = len(positions)
    rows, cols = index.ball_pairs(positions, radius)
    offsets = positions[cols] - positions[rows]
    sizes = np.bincount(rows, minlength=count).astype(np.float64)
    valid = sizes >= MIN_NEIGHBORS

    safe = np.maximum(sizes, 1.0)
    mean = np.stack([np.bincount(rows, offsets[:, a], minlength=count) for a in range(3)], axis=1) / safe[:, None]
    second = np.zeros((count, 3, 3))
    for a in range(3):
        for b in range(a, 3):
            value = np.bincount(rows, offsets[:, a] * offsets[:, b], minlength=count) / safe
            second[:, a, b] = second[:, b, a] = value
    covariance = second - mean[:, :, None] * mean[:, None, :]

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    eigenvalues = np.maximum(eigenvalues[:, ::-1], 0.0)
    total = eigenvalues.sum(axis=1)
    valid &= total > 0
    normalized = np.zeros_like(eigenvalues)
    normalized[valid] = eigenvalues[valid] / total[valid, None]

    return rows, offsets, valid, normalized, eigenvectors[:, :, 0]


def compute_descriptors(cloud, radii, use_rgb=True):
    """14-wide per-point descriptors at radii (r1, r2) mm"""
    r1, r2 = (float(r) for r in radii)
    if not 0 < r1 < r2:
        raise ValueError('Descriptor radii must satisfy 0 < r1 < r2, got (%g, %g)' % (r1, r2))
    cloud.require_points(MIN_DESCRIPTOR_POINTS, 'descriptor cloud')

    positions = cloud.positions
    count = len(positions)
    index = NeighborIndex(positions)

    _, _, valid1, eigen1, _ = _neighborhood_stats(positions, index, r1)
    rows, offsets, valid2, eigen2, normals = _neighborhood_stats(positions, index, r2)

    flip = normals[:, 2] < 0
    normals[flip] *= -1.0
    normals[~valid2] = 0.0

    heights = np.einsum('ij,ij->i', offsets, normals[rows]) / r2
    sizes = np.maximum(np.bincount(rows, minlength=count), 1).astype(np.float64)
    height_mean = np.bincount(rows, heights, minlength=count) / sizes
    height_var = np.bincount(rows, heights * heights, minlength=count) / sizes - height_mean ** 2
    height_std = np.sqrt(np.maximum(height_var, 0.0))
    height_mean[~valid2] = 0.0
    height_std[~valid2] = 0.0

    matrix = np.zeros((count, DESCRIPTOR_WIDTH))
    if use_rgb and cloud.has_colors:
        matrix[:, 0:3] = cloud.colors
    matrix[:, 3:6] = normals
    matrix[:, 6:9] = eigen1
    matrix[:, 9:12] = eigen2
    matrix[:, 12] = height_mean
    matrix[:, 13] = height_std

    valid = valid1 & valid2
    if not valid.all():
        logger.debug('%d of %d points have fewer than %d neighbors', int((~valid).sum()), count, MIN_NEIGHBORS)

    return DescriptorSet(matrix, valid, (r1, r2))


def softplus(z):
    return np.logaddexp(0.0, z)


ActivationCache = collections.namedtuple('ActivationCache', 'owner version inputs pre1 act1 pre2 act2')

LAYER_NAMES = (('W1', 'b1'), ('W2', 'b2'), ('W3', 'b3'))


class EmbeddingModel(object):
    """Three-layer perceptron with softplus hidden activations"""

    def __init__(self, input_width=DESCRIPTOR_WIDTH, hidden=64, features=32, seed=0, params=None):
        self.input_width = input_width
        self.hidden = hidden
        self.features = features
        self.seed = seed
        self.version = 0

        if params is None:
            params = self.initial_params(input_width, hidden, features, seed)
        self.params = {}
        self.set_params(params)

    def __repr__(self):
        return '<EmbeddingModel %d -> %d -> %d -> %d, seed %d>' % (self.input_width, self.hidden, self.hidden,
                                                                   self.features, self.seed)

    @staticmethod
    def initial_params(input_width, hidden, features, seed):
        """Glorot-uniform weights, zero biases"""
        rng = np.random.default_rng(seed)
        params = {}
        for (weight, bias), (fan_in, fan_out) in zip(LAYER_NAMES, ((input_width, hidden), (hidden, hidden),
                                                                    (hidden, features))):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[weight] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            params[bias] = np.zeros(fan_out)
        return params

    def shapes(self):
        return {name: value.shape for name, value in self.params.items()}

    def set_params(self, params):
        expected = {'W1': (self.input_width, self.hidden), 'b1': (self.hidden,),
                    'W2': (self.hidden, self.hidden), 'b2': (self.hidden,),
                    'W3': (self.hidden, self.features), 'b3': (self.features,)}
        fresh = {}
        for name, shape in expected.items():
            value = np.array(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ValueError('Parameter %s has shape %r, expected %r' % (name, value.shape, shape))
            if not np.all(np.isfinite(value)):
                raise posefeat.NumericalError('Parameter %s contains non-finite values' % name)
            value.setflags(write=False)
            fresh[name] = value
        self.params = fresh
        self.version += 1

    def to_json(self):
        layers = []
        for weight, bias in LAYER_NAMES:
            layers.append({'W': {'shape': list(self.params[weight].shape),
                                 'data': self.params[weight].reshape(-1).tolist()},
                           'b': {'shape': list(self.params[bias].shape), 'data': self.params[bias].tolist()}})
        return {'seed': self.seed, 'layers': layers}

    @classmethod
    def from_json(cls, data):
        try:
            layers = data['layers']
            params = {}
            for (weight, bias), layer in zip(LAYER_NAMES, layers):
                params[weight] = np.reshape(layer['W']['data'], layer['W']['shape'])
                params[bias] = np.reshape(layer['b']['data'], layer['b']['shape'])
            input_width, hidden = params['W1'].shape
            features = params['W3'].shape[1]
            return cls(input_width, hidden, features, data.get('seed', 0), params)
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError('Malformed model entry: %s' % e)


def embed_forward(model, descriptors):
    """Features (N x F) plus the activation cache needed by embed_backward"""
    inputs = getattr(descriptors, 'matrix', descriptors)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != model.input_width:
        raise ValueError('Descriptor width %r does not match model input width %d' %
                         (inputs.shape[1:] or inputs.shape, model.input_width))

    p = model.params
    pre1 = inputs @ p['W1'] + p['b1']
    act1 = softplus(pre1)
    pre2 = act1 @ p['W2'] + p['b2']
    act2 = softplus(pre2)
    features = act2 @ p['W3'] + p['b3']
    return features, ActivationCache(model, model.version, inputs, pre1, act1, pre2, act2)


def embed_backward(model, cache, grad_features):
    """Parameter gradients of sum(grad_features * features)"""
    if cache.owner is not model or cache.version != model.version:
        raise StaleCacheError('Activation cache does not belong to the current parameters of %r' % model)

    grad = np.asarray(grad_features, dtype=np.float64)
    if grad.shape != (len(cache.inputs), model.features):
        raise ValueError('Feature gradient shape %r does not match %r' % (grad.shape, (len(cache.inputs),
                                                                                     model.features)))

    p = model.params
    grads = {'W3': cache.act2.T @ grad, 'b3': grad.sum(axis=0)}
    delta2 = (grad @ p['W3'].T) * expit(cache.pre2)
    grads['W2'] = cache.act1.T @ delta2
    grads['b2'] = delta2.sum(axis=0)
    delta1 = (delta2 @ p['W2'].T) * expit(cache.pre1)
    grads['W1'] = cache.inputs.T @ delta1
    grads['b1'] = delta1.sum(axis=0)
    return grads


def add_gradients(first, second):
    return {name: first[name] + second[name] for name in first}


def scale_gradients(grads, factor):
    return {name: value * factor for name, value in grads.items()}


def zero_gradients(model):
    return {name: np.zeros_like(value) for name, value in model.params.items()}


class ModelPair(object):
    """Object and scene models; the same instance twice when weights are shared"""

    def __init__(self, object_model, scene_model):
        self.object = object_model
        self.scene = scene_model

    @property
    def shared(self):
        return self.object is self.scene

    @classmethod
    def create(cls, cfg, group_index=0):
        model = cfg.model
        object_model = EmbeddingModel(DESCRIPTOR_WIDTH, model.hidden, model.features,
                                      util.derive_seed(model.object_seed, group_index))
        if model.shared_weights:
            return cls(object_model, object_model)
        scene_model = EmbeddingModel(DESCRIPTOR_WIDTH, model.hidden, model.features,
                                     util.derive_seed(model.scene_seed, group_index))
        return cls(object_model, scene_model)

    def to_json(self):
        return {'object': self.object.to_json(), 'scene': self.scene.to_json()}


class Checkpoint(object):
    def __init__(self, groups, config_hash, features, radii_scale, config=None):
        self.groups = groups
        self.config_hash = config_hash
        self.features = features
        self.radii_scale = tuple(radii_scale)
        self.config = config

    def pair_for(self, object_id):
        """Model pair for an object id, falling back to the all-objects group"""
        key = str(object_id)
        if key in self.groups:
            return self.groups[key]
        if GROUP_ALL in self.groups:
            return self.groups[GROUP_ALL]
        raise CheckpointError('Checkpoint has no model for object %s' % key)

    def to_json(self):
        shared = all(pair.shared for pair in self.groups.values())
        return {
            'format': CHECKPOINT_FORMAT,
            'version': CHECKPOINT_VERSION,
            'config_hash': self.config_hash,
            'features': self.features,
            'radii_scale': list(self.radii_scale),
            'shared_weights': shared,
            'config': self.config,
            'groups': {name: pair.to_json() for name, pair in sorted(self.groups.items())},
        }


def save_checkpoint(filename, checkpoint):
    util.write_json(filename, checkpoint.to_json(), indent=None)
    logger.info('Wrote checkpoint %s (config %s)', filename, checkpoint.config_hash)


def load_checkpoint(filename):
    try:
        data = util.read_json(filename)
    except IOError as e:
        raise CheckpointError('Cannot read checkpoint %s: %s' % (filename, e))
    except ValueError as e:
        raise CheckpointError('Checkpoint %s is not valid JSON: %s' % (filename, e))

    if not isinstance(data, dict) or data.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError('%s is not a posefeat checkpoint' % filename)
    if data.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError('%s has unsupported checkpoint version %r' % (filename, data.get('version')))

    groups = {}
    try:
        for name, entry in data['groups'].items():
            object_model = EmbeddingModel.from_json(entry['object'])
            if data.get('shared_weights'):
                groups[name] = ModelPair(object_model, object_model)
            else:
                groups[name] = ModelPair(object_model, EmbeddingModel.from_json(entry['scene']))
        checkpoint = Checkpoint(groups, data['config_hash'], int(data['features']), data['radii_scale'],
                                data.get('config'))
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError('%s: malformed checkpoint (%s)' % (filename, e))

    for pair in groups.values():
        if pair.object.features != checkpoint.features or pair.scene.features != checkpoint.features:
            raise CheckpointError('%s: model output width does not match F=%d' % (filename, checkpoint.features))

    logger.info('Loaded checkpoint %s with %d model group(s)', filename, len(groups))
    return checkpoint
