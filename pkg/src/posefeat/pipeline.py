#
# posefeat.pipeline - Datasets and per-sample preparation (2026-10-17)
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

"""Turn dataset pairs into quantized, mined and described training samples

A training sample is prepared in this order:

    resample -> color jitter (object) -> random erase (scene) -> quantize
    -> mine positives and negatives -> descriptors

Every random step draws from a generator derived from (run seed, epoch,
sample id, step name), so worker scheduling never changes a sample.
"""

from posefeat import augment
from posefeat import bop
from posefeat import embed
from posefeat import metrics
from posefeat import mining
from posefeat import registry
from posefeat import synth
from posefeat import util
from posefeat import voxel
from posefeat.geometry import cloud_diameter
from posefeat.plyfile import read_ply_model, sample_mesh_surface

import collections
import logging
import os

logger = logging.getLogger(__name__)

EVAL_EPOCH = 'eval'


@registry.dataset_source.register
def synthetic(cfg, missing_ok=False):
    pairs = synth.generate_suite(cfg)
    for index, pair in enumerate(pairs):
        pair.scene_id = 'synthetic'
        pair.image_id = index
    return pairs


def _scene_dirs(root, names):
    if names:
        return [os.path.join(root, name) for name in names]
    return sorted(os.path.join(root, name) for name in os.listdir(root)
                  if name.isdigit() and os.path.isdir(os.path.join(root, name)))


@registry.dataset_source.register(name='bop')
def bop_dataset(cfg, missing_ok=False):
    """One pair per annotated object in every image of the BOP scenes

    Objects without a model file are skipped, or kept with an empty object
    cloud when missing_ok is set so evaluation can record the failure.
    """
    root = cfg.data.bop_root
    if not root or not os.path.isdir(root):
        raise bop.BopFileMissing('BOP dataset root %r does not exist' % root)

    models = {}
    pairs = []
    for scene_dir in _scene_dirs(root, cfg.data.bop_scenes):
        scene_id = os.path.basename(scene_dir)
        for image_id in bop.scene_image_ids(scene_dir):
            frame = bop.read_bop_frame(scene_dir, image_id, cfg.data.fill_holes_iterations)
            for object_id, pose in frame.poses:
                if object_id not in models:
                    models[object_id] = _load_model_cloud(root, object_id, cfg)
                object_cloud = models[object_id]
                if object_cloud is None and not missing_ok:
                    continue

                diameter = float('nan') if object_cloud is None else None
                pairs.append(synth.ScenePair(object_cloud, frame.cloud, pose, diameter, object_id,
                                             sample_id='%s/%06d/%d' % (scene_id, image_id, object_id),
                                             image_id=image_id, scene_id=scene_id, pixel_map=frame.pixel_map))

    logger.info('Loaded %d object instances from %s', len(pairs), root)
    return pairs


def _load_model_cloud(root, object_id, cfg):
    path = bop.model_path(root, object_id)
    if not os.path.exists(path):
        logger.warning('No model file for object %d (%s)', object_id, path)
        return None
    mesh = read_ply_model(path)
    return sample_mesh_surface(mesh, cfg.data.object_points, util.derive_seed(cfg.seed, 'model', object_id))


def load_pairs(cfg, missing_ok=False):
    return registry.dataset_source.resolve(cfg.data.source, cfg, missing_ok)


def split_holdout(pairs, fraction, seed):
    """Seeded (train, held-out) split; at least one pair stays in training"""
    count = len(pairs)
    held = min(int(round(fraction * count)), max(count - 1, 0))
    order = util.derive_rng(seed, 'holdout').permutation(count)
    held_ids = set(order[:held].tolist())
    train = [p for i, p in enumerate(pairs) if i not in held_ids]
    held_out = [p for i, p in enumerate(pairs) if i in held_ids]
    return train, held_out


def evaluation_pairs(cfg):
    """The held-out split of the synthetic suite, or every BOP instance"""
    pairs = load_pairs(cfg, missing_ok=True)
    if cfg.data.source == 'synthetic':
        return split_holdout(pairs, cfg.data.holdout_fraction, cfg.seed)[1]
    return pairs


def is_symmetric(pair, cfg):
    return bool(pair.symmetric) or pair.object_id in cfg.objects.symmetric


def descriptor_radii(cfg, diameter):
    return tuple(scale * diameter for scale in cfg.model.radii_scale)


def sample_seed(cfg, epoch, pair, step):
    return util.derive_seed(cfg.seed, epoch, pair.sample_id or 'pair', step)


def quantize_cloud(cloud, cfg, seed):
    quantized = voxel.quantize(cloud, cfg.data.voxel_size, cfg.data.quantize_mode, util.derive_seed(seed, 'voxel'))
    return quantized.representatives


def prepare_cloud(cloud, count, cfg, seed):
    """Sample at most count points, then quantize; returns the representatives"""
    if len(cloud) > count:
        cloud = augment.resample(cloud, count, util.derive_seed(seed, 'resample'))
    return quantize_cloud(cloud, cfg, seed)


def describe(cloud, cfg, diameter):
    return embed.compute_descriptors(cloud, descriptor_radii(cfg, diameter), cfg.model.use_rgb)


TrainingSample = collections.namedtuple('TrainingSample', 'pair object_cloud scene_cloud positives negatives '
                                                          'object_descriptors scene_descriptors')


def prepare_training_sample(pair, cfg, epoch):
    """Augmented, quantized and mined sample of one pair for one epoch"""
    settings = augment.AugmentConfig.from_config(cfg)
    object_cloud = pair.object_cloud
    scene_cloud = pair.scene_cloud

    seed = sample_seed(cfg, epoch, pair, 'object')
    if settings.resample_enabled:
        object_cloud = augment.resample(object_cloud, min(settings.resample_counts[0], len(object_cloud)),
                                        util.derive_seed(seed, 'resample'))
    if settings.jitter_enabled and object_cloud.has_colors:
        object_cloud = augment.color_jitter(object_cloud, settings, util.derive_seed(seed, 'jitter'))

    seed = sample_seed(cfg, epoch, pair, 'scene')
    if settings.resample_enabled:
        scene_cloud = augment.resample(scene_cloud, min(settings.resample_counts[1], len(scene_cloud)),
                                       util.derive_seed(seed, 'resample'))
    if settings.erase_enabled:
        rho = settings.erase_rho_scale * pair.object_diameter
        erased = augment.random_erase(scene_cloud, pair.gt_pose.apply(object_cloud.positions), rho,
                                      util.derive_seed(seed, 'erase'), max_distance=cfg.loss.tau_p)
        if len(erased.cloud) >= embed.MIN_DESCRIPTOR_POINTS:
            scene_cloud = erased.cloud
        else:
            logger.warning('Random erase left %d scene points in %s; keeping the scene', len(erased.cloud),
                           pair.sample_id)

    object_cloud = quantize_cloud(object_cloud, cfg, sample_seed(cfg, epoch, pair, 'object'))
    scene_cloud = quantize_cloud(scene_cloud, cfg, sample_seed(cfg, epoch, pair, 'scene'))

    return mine_and_describe(pair, cfg, object_cloud, scene_cloud, sample_seed(cfg, epoch, pair, 'mining'))


def prepare_eval_sample(pair, cfg):
    """Deterministic sample without augmentation, used for held-out FMR"""
    object_cloud = prepare_cloud(pair.object_cloud, cfg.data.object_points, cfg,
                                 sample_seed(cfg, EVAL_EPOCH, pair, 'object'))
    scene_cloud = prepare_cloud(pair.scene_cloud, cfg.data.scene_points, cfg,
                                sample_seed(cfg, EVAL_EPOCH, pair, 'scene'))
    return mine_and_describe(pair, cfg, object_cloud, scene_cloud, sample_seed(cfg, EVAL_EPOCH, pair, 'mining'))


def mine_and_describe(pair, cfg, object_cloud, scene_cloud, seed):
    loss = cfg.loss
    positives = mining.mine_positives(object_cloud, scene_cloud, pair.gt_pose, loss.tau_p, loss.max_pairs,
                                      util.derive_seed(seed, 'positives'))

    scene_scale = loss.t_scale if loss.tau_ns_scale is None else loss.tau_ns_scale
    scene_diameter = cloud_diameter(scene_cloud) if loss.per_side_diameter else pair.object_diameter
    negatives = mining.build_negative_candidates(object_cloud, scene_cloud, positives, loss.t_scale,
                                                 pair.object_diameter, loss.scene_sample_cap,
                                                 util.derive_seed(seed, 'negatives'),
                                                 scene_radius=scene_scale * scene_diameter)

    return TrainingSample(pair, object_cloud, scene_cloud, positives, negatives,
                          describe(object_cloud, cfg, pair.object_diameter),
                          describe(scene_cloud, cfg, pair.object_diameter))


def group_key(pair, cfg):
    return str(pair.object_id) if cfg.model.per_object else embed.GROUP_ALL


def feature_pairs(samples, models_for):
    """metrics.FmrPair for each prepared sample; models_for(pair) gives its ModelPair"""
    result = []
    for sample in samples:
        models = models_for(sample.pair)
        f_obj, _ = embed.embed_forward(models.object, sample.object_descriptors)
        f_scn, _ = embed.embed_forward(models.scene, sample.scene_descriptors)
        result.append(metrics.FmrPair(f_obj, f_scn, sample.object_cloud, sample.scene_cloud, sample.pair.gt_pose))
    return result
