#
# posefeat.evaluate - Registration and scoring of evaluation instances (2026-10-17)
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

import posefeat

from posefeat import bop
from posefeat import embed
from posefeat import metrics
from posefeat import pipeline
from posefeat import registration
from posefeat import storage
from posefeat import util

import collections
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

REPORT_FORMATS = ('json', 'csv', 'text')

# instance is a metrics.InstanceResult; features is a metrics.FmrPair or None
EvalRecord = collections.namedtuple('EvalRecord', 'instance pred gt model_points features')


class DatabaseMissing(posefeat.DataError):
    pass


def _scene_cloud(pair, detections, cfg):
    """Scene points for one instance, cropped by its detection when there is one"""
    if detections is None:
        return pair.scene_cloud, False

    det = bop.select_detection(detections, pair.image_id, pair.object_id, pair.scene_id)
    if det is None:
        return pair.scene_cloud, False
    if pair.pixel_map is None:
        logger.warning('Detection for %s ignored: the scene has no pixel map', pair.sample_id)
        return pair.scene_cloud, False

    # A box keeping every point must sample exactly like the no-detection run
    pixel_map = np.asarray(pair.pixel_map).reshape(-1, 2)
    if len(pixel_map) == len(pair.scene_cloud) and bop.crop_mask(pixel_map, det, cfg.data.detection_margin).all():
        return pair.scene_cloud, False
    return bop.crop_by_detection(pair.scene_cloud, pair.pixel_map, det, cfg.data.detection_margin), True


class SceneCache(object):
    """Scene features shared by all instances of one image

    Keyed by (model group, descriptor radii, crop); the prepared scene only
    depends on the image and the crop.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self._clouds = {}
        self._features = {}

    def features(self, pair, scene, cropped, models, diameter):
        crop_key = pair.object_id if cropped else None
        if crop_key not in self._clouds:
            seed = util.derive_seed(self.cfg.seed, pipeline.EVAL_EPOCH, pair.scene_id or 'scene',
                                    pair.image_id or 0, 'crop' if cropped else 'full', crop_key or 0)
            self._clouds[crop_key] = pipeline.prepare_cloud(scene, self.cfg.data.scene_points, self.cfg, seed)
        cloud = self._clouds[crop_key]

        radii = pipeline.descriptor_radii(self.cfg, diameter)
        key = (id(models.scene), radii, crop_key)
        if key not in self._features:
            descriptors = embed.compute_descriptors(cloud, radii, self.cfg.model.use_rgb)
            self._features[key], _ = embed.embed_forward(models.scene, descriptors)
        return cloud, self._features[key]


def _failed(pair, cfg, prior, reason):
    logger.warning('Instance %s failed: %s', pair.sample_id, reason)
    diameter = pair.object_diameter if np.isfinite(pair.object_diameter) else 1.0
    model_points = pair.object_cloud.positions if pair.object_cloud is not None else np.zeros((0, 3))
    instance = metrics.score_instance(model_points, None, pair.gt_pose, diameter, pipeline.is_symmetric(pair, cfg),
                                      scene_id=pair.scene_id, image_id=pair.image_id, object_id=pair.object_id,
                                      inliers=0, inlier_ratio=0.0, fmr_pass=False, detector_prior=prior)
    return EvalRecord(instance, None, pair.gt_pose, model_points, None)


def evaluate_instance(pair, checkpoint, cfg, cache, detections=None):
    prior = detections is not None
    if pair.object_cloud is None:
        return _failed(pair, cfg, prior, 'no object model')

    try:
        models = checkpoint.pair_for(pair.object_id)
        scene, cropped = _scene_cloud(pair, detections, cfg)
        object_cloud = pipeline.prepare_cloud(pair.object_cloud, cfg.data.object_points, cfg,
                                              pipeline.sample_seed(cfg, pipeline.EVAL_EPOCH, pair, 'object'))
        f_obj, _ = embed.embed_forward(models.object, pipeline.describe(object_cloud, cfg, pair.object_diameter))
        scene_cloud, f_scn = cache.features(pair, scene, cropped, models, pair.object_diameter)
    except (embed.CheckpointError, posefeat.DataError) as e:
        return _failed(pair, cfg, prior, e)

    matches = registration.match_features(f_obj, f_scn, cfg.registration.mutual)
    features = metrics.FmrPair(f_obj, f_scn, object_cloud, scene_cloud, pair.gt_pose)
    fmr_pass = metrics.fmr([features], cfg.metrics.tau1_voxels, cfg.metrics.tau2_ratio, cfg.data.voxel_size) > 0

    ransac = registration.RansacConfig.from_config(cfg.registration, cfg.data.voxel_size,
                                                   pipeline.sample_seed(cfg, pipeline.EVAL_EPOCH, pair, 'ransac'))
    try:
        result = registration.ransac_register(object_cloud, scene_cloud, matches, ransac)
    except registration.RegistrationFailure as e:
        record = _failed(pair, cfg, prior, e)
        return record._replace(instance=record.instance._replace(fmr_pass=fmr_pass), features=features)

    model_points = pair.object_cloud.positions
    instance = metrics.score_instance(model_points, result.pose, pair.gt_pose, pair.object_diameter,
                                      pipeline.is_symmetric(pair, cfg), scene_id=pair.scene_id,
                                      image_id=pair.image_id, object_id=pair.object_id,
                                      inliers=int(len(result.inliers)), inlier_ratio=result.inlier_ratio,
                                      fmr_pass=fmr_pass, detector_prior=prior)
    return EvalRecord(instance, result.pose, pair.gt_pose, model_points, features)


def evaluate_pairs(checkpoint, pairs, cfg, detections=None, jobs=1):
    """EvalRecord per pair, in input order; instances of one image share scene features"""
    images = collections.OrderedDict()
    for index, pair in enumerate(pairs):
        images.setdefault((pair.scene_id, pair.image_id, id(pair.scene_cloud)), []).append((index, pair))

    def run_image(items):
        cache = SceneCache(cfg)
        return [(index, evaluate_instance(pair, checkpoint, cfg, cache, detections)) for index, pair in items]

    records = [None] * len(pairs)
    for results in util.ordered_map(run_image, list(images.values()), jobs):
        for index, record in results:
            records[index] = record
    return records


def build_report(records, cfg, deltas=None):
    m = cfg.metrics
    return metrics.MetricReport([r.instance for r in records], cfg.config_hash(),
                                (m.auc_min, m.auc_max, m.auc_step), deltas)


def write_report(report, out_dir, fmt='json'):
    """Write report.json, report.csv and report.txt; return the text in fmt"""
    util.make_directory(out_dir)
    report.write_json(os.path.join(out_dir, 'report.json'))
    report.write_csv(os.path.join(out_dir, 'report.csv'))
    report.write_text(os.path.join(out_dir, 'report.txt'))

    filename = {'json': 'report.json', 'csv': 'report.csv', 'text': 'report.txt'}[fmt]
    with open(os.path.join(out_dir, filename), 'rt') as fp:
        return fp.read()


def _store(db, run_hash, mode, records):
    stored = set()
    for record in records:
        object_id = record.instance.object_id
        if object_id not in stored and len(record.model_points):
            db.add_object_model(run_hash, object_id, record.model_points)
            stored.add(object_id)
        db.add_prediction(run_hash, mode, record.instance, record.pred, record.gt)


def cmd_eval(cfg, checkpoint_path, out_dir, detections_path=None, fmt='json', jobs=1, pairs=None):
    """Evaluate a checkpoint; with detections also compare against the no-prior run"""
    checkpoint = embed.load_checkpoint(checkpoint_path)
    if checkpoint.features != cfg.model.features:
        raise embed.CheckpointError('Checkpoint has F=%d, configuration expects %d' %
                                    (checkpoint.features, cfg.model.features))
    if pairs is None:
        pairs = pipeline.evaluation_pairs(cfg)
    if not pairs:
        raise metrics.MetricInputError('No evaluation instances')

    run_hash = cfg.config_hash()
    records = evaluate_pairs(checkpoint, pairs, cfg, None, jobs)
    deltas = None
    prior_records = None
    if detections_path is not None:
        detections = bop.read_detections(detections_path)
        prior_records = evaluate_pairs(checkpoint, pairs, cfg, detections, jobs)
        deltas = metrics.detector_deltas([r.instance.success for r in prior_records],
                                         [r.instance.success for r in records])

    util.make_directory(out_dir)
    db = storage.Database(os.path.join(out_dir, 'predictions'), fresh=True)
    try:
        _store(db, run_hash, storage.Prediction.MODE_NO_PRIOR, records)
        if prior_records is not None:
            _store(db, run_hash, storage.Prediction.MODE_PRIOR, prior_records)
    finally:
        db.close()

    reported = prior_records if prior_records is not None else records
    report = build_report(reported, cfg, deltas)

    feature_sets = [r.features for r in reported if r.features is not None]
    if feature_sets:
        m = cfg.metrics
        rows = metrics.fmr_curve(feature_sets, m.fmr_curve_tau1, m.fmr_curve_tau2, m.tau1_voxels, m.tau2_ratio,
                                 cfg.data.voxel_size)
        metrics.write_fmr_curve(os.path.join(out_dir, 'fmr_curve.csv'), rows)

    text = write_report(report, out_dir, fmt)
    overall = report.overall()
    logger.info('Evaluated %d instances: ADD(S)-0.1d %.1f %%, ADD-S AUC %.1f %%', len(report),
                overall['addsd_01d'], overall['adds_auc'])
    return report, text


def cmd_metrics(cfg, database_path, out_dir=None, fmt='json'):
    """Re-score stored predictions without running the pipeline"""
    base = database_path[:-len('.minidb')] if database_path.endswith('.minidb') else database_path
    if not os.path.exists(base + '.minidb'):
        raise DatabaseMissing('Prediction database %s.minidb does not exist' % base)
    if out_dir is None:
        out_dir = os.path.dirname(os.path.abspath(base))

    db = storage.Database(base)
    try:
        hashes = db.run_hashes()
        if not hashes:
            raise metrics.MetricInputError('%s holds no predictions' % database_path)
        if len(hashes) > 1:
            logger.warning('%s holds %d runs; re-scoring %s', database_path, len(hashes), hashes[-1])
        run_hash = hashes[-1]

        symmetric = tuple(cfg.objects.symmetric)
        without = db.rescore(run_hash, storage.Prediction.MODE_NO_PRIOR, symmetric)
        with_prior = db.rescore(run_hash, storage.Prediction.MODE_PRIOR, symmetric)
    finally:
        db.close()

    deltas = None
    instances = without
    if with_prior:
        deltas = metrics.detector_deltas([i.success for i in with_prior], [i.success for i in without])
        instances = with_prior

    m = cfg.metrics
    report = metrics.MetricReport(instances, run_hash, (m.auc_min, m.auc_max, m.auc_step), deltas)
    return report, write_report(report, out_dir, fmt)

