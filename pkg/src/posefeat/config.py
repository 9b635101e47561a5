#
# posefeat.config - Run configuration, presets and config hash (2026-10-17)
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

"""Run configuration

All hyperparameters of a run live in one nested JSON document. The
defaults below are the full-scale values; presets shrink them for the
synthetic desk suite. Lengths are in mm.
"""

from posefeat import util
from posefeat import jsonconfig
from posefeat.jsonconfig import ConfigError

import copy
import hashlib
import json
import logging

logger = logging.getLogger(__name__)

defaults = {
    'seed': 0,

    'data': {
        'source': 'synthetic',  # synthetic or bop
        'bop_root': '',  # dataset root with models/ and scene directories
        'bop_scenes': [],  # scene directory names below bop_root (empty: all)
        'object_points': 4000,  # points sampled on each object model
        'scene_points': 50000,  # points sampled from each scene
        'voxel_size': 2.0,
        'quantize_mode': 'barycenter',  # barycenter or random
        'holdout_fraction': 0.2,
        'fill_holes_iterations': 0,
        'detection_margin': 5,  # pixels
    },

    # Procedural desk-scale dataset
    'synthetic': {
        'pairs': 200,
        'shapes': ['box', 'cylinder', 'l_bracket', 'composite'],
        'object_size': 100.0,
        'distractors': 3,
        'occlusion': 0.3,
        'noise_sigma': 1.0,
        'scene_extent': 400.0,
    },

    'model': {
        'features': 32,
        'hidden': 64,
        'use_rgb': True,
        'shared_weights': False,
        'per_object': False,  # train one model pair per object id
        'radii_scale': [0.05, 0.15],  # descriptor radii as fractions of the object diameter
        'object_seed': 1,
        'scene_seed': 2,
    },

    'loss': {
        'mu_p': 0.1,
        'mu_n': 10.0,
        'lambda_p': 1.0,
        'lambda_no': 0.6,  # the 1/2 factors of the two-sided negative term are folded in
        'lambda_ns': 0.4,
        't_scale': 0.1,
        'tau_ns_scale': None,  # scene-side safety scale; null means t_scale
        'per_side_diameter': False,  # scale the scene-side radius with the scene diameter
        'negative_normalization': 'anchors',  # anchors or positives
        'tau_p': 4.0,
        'max_pairs': 1000,
        'scene_sample_cap': 10000,
    },

    'augment': {
        'resample': True,
        'color_jitter': True,
        'random_erase': True,
        'brightness': 0.2,
        'contrast': 0.2,
        'saturation': 0.2,
        'hue': 0.05,  # turns
        'erase_rho_scale': 0.1,  # erase radius as a fraction of the object diameter
    },

    'optim': {
        'rule': 'adamw',  # sgd, adam or adamw
        'schedule': 'cosine',  # cosine or exponential
        'lr': 1e-3,
        'lr_end': 1e-4,
        'gamma': 0.99,
        'weight_decay': 0.01,
        'beta1': 0.9,
        'beta2': 0.999,
        'eps': 1e-8,
        'batch_size': 4,
        'epochs': 12,
    },

    'registration': {
        'max_iterations': 10000,
        'threshold_voxels': 3.0,
        'confidence': 0.999,
        'mutual': False,
    },

    'metrics': {
        'tau1_voxels': 5.0,
        'tau2_ratio': 0.05,
        'auc_min': 1.0,
        'auc_max': 100.0,
        'auc_step': 1.0,
        'fmr_curve_tau1': [1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0],
        'fmr_curve_tau2': [0.01, 0.02, 0.05, 0.1, 0.15, 0.2],
    },

    'objects': {
        'symmetric': [],  # object ids evaluated with ADD-S
    },

    'ablation': {
        'seeds': [0],
        't_scale_sweep': [0.0, 0.05, 0.1, 0.25, 0.5],
    },
}

PRESETS = {
    'desk': {
        'data.object_points': 1000,
        'data.scene_points': 5000,
        'optim.epochs': 30,
    },
    'full': {
        'data.object_points': 4000,
        'data.scene_points': 50000,
    },
    'full-ycbv': {
        'data.object_points': 4000,
        'data.scene_points': 20000,
        'metrics.tau1_voxels': 10.0,
    },
    # Seconds-long runs for tests and quick checks
    'smoke': {
        'data.object_points': 300,
        'data.scene_points': 1200,
        'synthetic.pairs': 10,
        'synthetic.distractors': 1,
        'synthetic.scene_extent': 300.0,
        'model.hidden': 16,
        'model.features': 8,
        'loss.max_pairs': 100,
        'loss.scene_sample_cap': 500,
        'optim.epochs': 2,
        'registration.max_iterations': 300,
    },
}

CHOICES = {
    'data.source': ('synthetic', 'bop'),
    'data.quantize_mode': ('barycenter', 'random'),
    'loss.negative_normalization': ('anchors', 'positives'),
    'optim.rule': ('sgd', 'adam', 'adamw'),
    'optim.schedule': ('cosine', 'exponential'),
}


def _positive(value):
    return value > 0


def _non_negative(value):
    return value >= 0


def _fraction_open(value):
    return 0 <= value < 1


RANGES = [
    ('data.object_points', _positive, 'must be > 0'),
    ('data.scene_points', _positive, 'must be > 0'),
    ('data.voxel_size', _positive, 'must be > 0'),
    ('data.holdout_fraction', _fraction_open, 'must be in [0, 1)'),
    ('data.fill_holes_iterations', _non_negative, 'must be >= 0'),
    ('data.detection_margin', _non_negative, 'must be >= 0'),
    ('synthetic.pairs', _positive, 'must be > 0'),
    ('synthetic.object_size', _positive, 'must be > 0'),
    ('synthetic.distractors', _non_negative, 'must be >= 0'),
    ('synthetic.occlusion', _fraction_open, 'must be in [0, 1)'),
    ('synthetic.noise_sigma', _non_negative, 'must be >= 0'),
    ('synthetic.scene_extent', _positive, 'must be > 0'),
    ('model.features', _positive, 'must be > 0'),
    ('model.hidden', _positive, 'must be > 0'),
    ('loss.mu_p', _non_negative, 'margin must be >= 0'),
    ('loss.mu_n', _non_negative, 'margin must be >= 0'),
    ('loss.lambda_p', _non_negative, 'weight must be >= 0'),
    ('loss.lambda_no', _non_negative, 'weight must be >= 0'),
    ('loss.lambda_ns', _non_negative, 'weight must be >= 0'),
    ('loss.t_scale', _non_negative, 'must be >= 0'),
    ('loss.tau_p', _positive, 'must be > 0'),
    ('loss.max_pairs', _positive, 'must be > 0'),
    ('loss.scene_sample_cap', _positive, 'must be > 0'),
    ('augment.brightness', _fraction_open, 'must be in [0, 1)'),
    ('augment.contrast', _fraction_open, 'must be in [0, 1)'),
    ('augment.saturation', _fraction_open, 'must be in [0, 1)'),
    ('augment.hue', lambda v: 0 <= v <= 0.5, 'must be in [0, 0.5]'),
    ('augment.erase_rho_scale', _non_negative, 'must be >= 0'),
    ('optim.lr', _positive, 'must be > 0'),
    ('optim.lr_end', _positive, 'must be > 0'),
    ('optim.gamma', lambda v: 0 < v <= 1, 'must be in (0, 1]'),
    ('optim.weight_decay', _non_negative, 'must be >= 0'),
    ('optim.beta1', _fraction_open, 'must be in [0, 1)'),
    ('optim.beta2', _fraction_open, 'must be in [0, 1)'),
    ('optim.eps', _positive, 'must be > 0'),
    ('optim.batch_size', _positive, 'must be > 0'),
    ('optim.epochs', _positive, 'must be > 0'),
    ('registration.max_iterations', _positive, 'must be >= 1'),
    ('registration.threshold_voxels', _positive, 'must be > 0'),
    ('registration.confidence', lambda v: 0 < v < 1, 'must be in (0, 1)'),
    ('metrics.tau1_voxels', _positive, 'must be > 0'),
    ('metrics.tau2_ratio', lambda v: 0 <= v < 1, 'must be in [0, 1)'),
    ('metrics.auc_min', _positive, 'must be > 0'),
    ('metrics.auc_step', _positive, 'must be > 0'),
]


def config_value_to_string(config_value):
    if isinstance(config_value, list):
        return ','.join(map(config_value_to_string, config_value))
    elif config_value is None:
        return 'null'
    elif isinstance(config_value, str):
        return config_value
    else:
        return str(config_value)


def string_to_config_value(new_value, old_value):
    """Convert a command line string to the type of old_value

    >>> string_to_config_value('0.05', 0.1)
    0.05
    >>> string_to_config_value('false', True)
    False
    >>> string_to_config_value('1,5', [0])
    [1, 5]
    >>> string_to_config_value('null', None) is None
    True
    """
    new_value = new_value.strip()

    if isinstance(old_value, list):
        items = [x.strip() for x in new_value.split(',') if x.strip()]
        return [_parse_scalar(item) for item in items]
    elif isinstance(old_value, bool):
        return new_value.lower() in ('1', 'true', 'yes', 'on')
    elif old_value is None:
        if new_value.lower() in ('null', 'none', ''):
            return None
        return float(new_value)
    elif isinstance(old_value, str):
        return new_value

    try:
        return type(old_value)(new_value)
    except ValueError:
        raise ConfigError('Cannot convert %r to %s' % (new_value, type(old_value).__name__))


def _parse_scalar(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def preset(name):
    """Return a copy of the defaults with the named preset applied

    >>> preset('desk')['data']['scene_points']
    5000
    """
    if name not in PRESETS:
        raise ConfigError('Unknown preset %r (valid: %s)' % (name, ', '.join(sorted(PRESETS))))

    data = copy.deepcopy(defaults)
    for key, value in PRESETS[name].items():
        section, leaf = key.rsplit('.', 1)
        target = data
        for part in section.split('.'):
            target = target[part]
        target[leaf] = value
    return data


class RunConfig(object):
    """Validated run configuration with attribute access

    >>> cfg = RunConfig()
    >>> cfg.loss.lambda_no
    0.6
    >>> len(cfg.config_hash())
    16
    """

    def __init__(self, data=None, base=None):
        self.__json_config = jsonconfig.JsonConfig(default=base or defaults,
                                                   on_key_changed=self._on_key_changed)
        if data is not None:
            self.__json_config._restore(json.dumps(data))
        self.validate()

    @classmethod
    def load(cls, filename, base=None):
        try:
            with open(filename, 'rt') as fp:
                text = fp.read()
        except IOError as e:
            raise ConfigError('Cannot read config file %s: %s' % (filename, e))

        try:
            data = json.loads(text)
        except ValueError as e:
            raise ConfigError('Cannot parse config file %s: %s' % (filename, e))

        logger.info('Loaded configuration from %s', filename)
        return cls(data, base=base)

    @classmethod
    def from_preset(cls, name):
        return cls(base=preset(name))

    def save(self, filename):
        logger.info('Writing configuration to %s', filename)
        with util.update_file_safely(filename) as temp_filename:
            with open(temp_filename, 'wt') as fp:
                fp.write(repr(self.__json_config))

    def copy(self):
        return RunConfig(self.as_dict())

    def as_dict(self):
        return self.__json_config._as_dict()

    def canonical_json(self):
        return self.__json_config._canonical()

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode('utf-8')).hexdigest()[:16]

    def all_keys(self):
        return self.__json_config._keys_iter()

    def get_field(self, name):
        """Get the current value of a field"""
        return self.__json_config._lookup(name)

    def update_field(self, name, new_value):
        """Update a config field, converting strings to the right types"""
        old_value = self.__json_config._default_for(name)
        if isinstance(new_value, str):
            new_value = string_to_config_value(new_value, old_value)
        setattr(self.__json_config, name, new_value)
        self.validate()
        return True

    def apply_overrides(self, assignments):
        """Apply "dotted.key=value" strings from the command line"""
        for assignment in assignments or ():
            if '=' not in assignment:
                raise ConfigError('Override %r is not of the form key=value' % assignment)
            name, value = assignment.split('=', 1)
            self.update_field(name.strip(), value)

    def validate(self):
        for key, choices in CHOICES.items():
            value = self.get_field(key)
            if value not in choices:
                raise ConfigError('%s: %r is not one of %s' % (key, value, ', '.join(choices)))

        for key, check, message in RANGES:
            value = self.get_field(key)
            if not check(value):
                raise ConfigError('%s: %s (got %r)' % (key, message, value))

        if self.loss.tau_ns_scale is not None and self.loss.tau_ns_scale < 0:
            raise ConfigError('loss.tau_ns_scale: must be >= 0 or null')

        radii = self.model.radii_scale
        if (len(radii) != 2 or not all(isinstance(r, (int, float)) for r in radii)
                or not 0 < radii[0] < radii[1]):
            raise ConfigError('model.radii_scale: expected two increasing positive numbers, got %r' % (radii,))

        if self.metrics.auc_max < self.metrics.auc_min:
            raise ConfigError('metrics.auc_max: must be >= metrics.auc_min')

        if not self.ablation.seeds:
            raise ConfigError('ablation.seeds: at least one seed is required')

        for key in ('ablation.seeds', 'objects.symmetric'):
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in self.get_field(key)):
                raise ConfigError('%s: expected a list of integers' % key)

    def _on_key_changed(self, name, old_value, value):
        logger.debug('%s: %s -> %s', name, old_value, value)

    def __getattr__(self, name):
        return getattr(self.__json_config, name)

    def __setattr__(self, name, value):
        if name.startswith('_'):
            object.__setattr__(self, name, value)
            return

        setattr(self.__json_config, name, value)
