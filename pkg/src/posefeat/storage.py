#
# posefeat.storage - Prediction database (2026-10-17)
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


import minidb

from posefeat import metrics
from posefeat.geometry import RigidPose

import math
import os

import numpy as np

import logging
logger = logging.getLogger(__name__)


class PredictionFields(minidb.Model):
    run_hash = str
    mode = str
    scene_id = str
    image_id = int
    object_id = int
    symmetric = bool
    diameter = float
    predicted = minidb.JSON
    ground_truth = minidb.JSON
    add_mm = float
    adds_mm = float
    rre = float
    rte = float
    inliers = int
    inlier_ratio = float
    fmr_pass = bool
    success = bool
    status = str


class Prediction(PredictionFields):
    """One evaluated (image, object) instance of a run"""
    MODE_PRIOR, MODE_NO_PRIOR = 'prior', 'no_prior'

    class __minidb_defaults__:
        mode = 'no_prior'
        scene_id = ''
        status = 'ok'

    def predicted_pose(self):
        return RigidPose.from_json(self.predicted) if self.predicted else None

    def ground_truth_pose(self):
        return RigidPose.from_json(self.ground_truth)


class ObjectModel(minidb.Model):
    """Model points kept with the predictions so reports can be re-scored"""
    run_hash = str
    object_id = int
    points = minidb.JSON


def _rows(result):
    # minidb 1.x returns a factory taking constructor arguments
    return list(result() if callable(result) else result)


def _finite_or_none(value):
    return value if value is not None and math.isfinite(value) else None


class Database(object):
    def __init__(self, filename, debug=False, fresh=False):
        self.filename = filename + '.minidb'
        if fresh and os.path.exists(self.filename):
            os.remove(self.filename)

        self.db = minidb.Store(self.filename, debug=debug, smartupdate=True)
        self.db.register(Prediction)
        self.db.register(ObjectModel)

    def add_object_model(self, run_hash, object_id, points):
        points = np.asarray(points, dtype=float).tolist()
        ObjectModel(run_hash=run_hash, object_id=int(object_id), points=points).save(self.db)

    def add_prediction(self, run_hash, mode, instance, pred, gt):
        """Store a metrics.InstanceResult with its predicted and ground-truth poses"""
        prediction = Prediction(run_hash=run_hash, mode=mode, scene_id=str(instance.scene_id or ''),
                                image_id=int(instance.image_id or 0), object_id=int(instance.object_id),
                                symmetric=instance.symmetric, diameter=instance.diameter,
                                predicted=pred.to_json() if pred is not None else None,
                                ground_truth=gt.to_json(),
                                add_mm=_finite_or_none(instance.add), adds_mm=_finite_or_none(instance.adds),
                                rre=_finite_or_none(instance.rre), rte=_finite_or_none(instance.rte),
                                inliers=instance.inliers, inlier_ratio=instance.inlier_ratio,
                                fmr_pass=instance.fmr_pass, success=instance.success, status=instance.status)
        prediction.save(self.db)
        return prediction

    def load_predictions(self, run_hash=None, mode=None):
        query = {}
        if run_hash is not None:
            query['run_hash'] = run_hash
        if mode is not None:
            query['mode'] = mode
        predictions = _rows(Prediction.load(self.db, **query))
        return sorted(predictions, key=lambda p: (p.scene_id, p.image_id, p.object_id))

    def load_object_models(self, run_hash):
        return {m.object_id: m.points for m in _rows(ObjectModel.load(self.db, run_hash=run_hash))}

    def run_hashes(self):
        return sorted(set(p.run_hash for p in _rows(Prediction.load(self.db))))

    def rescore(self, run_hash, mode=Prediction.MODE_NO_PRIOR, symmetric_ids=()):
        """Recompute instance metrics from the stored poses and model points"""
        models = self.load_object_models(run_hash)
        instances = []
        for prediction in self.load_predictions(run_hash, mode):
            if prediction.object_id not in models:
                logger.warning('No stored model for object %d; skipping', prediction.object_id)
                continue
            symmetric = prediction.symmetric or prediction.object_id in symmetric_ids
            instances.append(metrics.score_instance(models[prediction.object_id], prediction.predicted_pose(),
                                                    prediction.ground_truth_pose(), prediction.diameter, symmetric,
                                                    scene_id=prediction.scene_id or None,
                                                    image_id=prediction.image_id, object_id=prediction.object_id,
                                                    inliers=prediction.inliers,
                                                    inlier_ratio=prediction.inlier_ratio,
                                                    fmr_pass=prediction.fmr_pass,
                                                    detector_prior=mode == Prediction.MODE_PRIOR))
        return instances

    def commit(self):
        self.db.commit()

    def close(self):
        self.db.commit()
        self.db.close()
