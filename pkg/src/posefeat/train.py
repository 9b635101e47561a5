#
# posefeat.train - Training loop and run artifacts (2026-10-17)
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

"""Training

Each epoch visits the training pairs in a seeded order, in minibatches.
Samples of a minibatch are prepared and differentiated in a worker pool;
their gradients are summed in minibatch order and averaged before a
single optimizer step per model, so the number of workers never changes
the result.

A run directory holds:

    checkpoint.json   model parameters (see posefeat.embed)
    train_log.jsonl   one JSON object per epoch: epoch, lr, l_p, l_no, l_ns,
                      total, heldout_fmr, samples, skipped
    manifest.json     config hash, seeds, git revision, package version
    divergence.json   only after an aborted run
"""

import posefeat

from posefeat import embed
from posefeat import metrics
from posefeat import optim
from posefeat import pipeline
from posefeat import util
from posefeat.geometry import InvalidCloudError
from posefeat.loss import LossConfig, LossInputError, compute_loss
from posefeat.mining import NoCorrespondencesError

import collections
import json
import logging
import math
import os

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = 'checkpoint.json'
TRAIN_LOG_FILE = 'train_log.jsonl'
MANIFEST_FILE = 'manifest.json'
DIVERGENCE_FILE = 'divergence.json'

LOSS_TERMS = ('l_p', 'l_no', 'l_ns', 'total')


class DivergenceError(posefeat.NumericalError):
    pass


SampleResult = collections.namedtuple('SampleResult', 'index group losses grads_object grads_scene error')

TrainResult = collections.namedtuple('TrainResult', 'checkpoint log manifest held_out out_dir')


class Trainer(object):
    def __init__(self, cfg, pairs, jobs=1, out_dir=None):
        self.cfg = cfg
        self.jobs = jobs
        self.out_dir = out_dir
        self.config_hash = cfg.config_hash()
        self.train_pairs, self.held_out = pipeline.split_holdout(pairs, cfg.data.holdout_fraction, cfg.seed)
        if not self.train_pairs:
            raise posefeat.DataError('No training pairs')

        keys = sorted(set(pipeline.group_key(pair, cfg) for pair in self.train_pairs))
        self.groups = collections.OrderedDict((key, embed.ModelPair.create(cfg, index))
                                              for index, key in enumerate(keys))
        self.states = {}
        for key, models in self.groups.items():
            self.states[key, 'object'] = optim.OptimState.from_config(cfg.optim)
            if not models.shared:
                self.states[key, 'scene'] = optim.OptimState.from_config(cfg.optim)

        self.schedule = optim.Schedule.from_config(cfg.optim)
        self.loss_cfg = LossConfig.from_config(cfg.loss)
        self.log = []
        self.last_finite = None
        self._held_out_samples = None

    def models_for(self, pair):
        return self.groups.get(pipeline.group_key(pair, self.cfg))

    def _sample(self, epoch, index):
        pair = self.train_pairs[index]
        group = pipeline.group_key(pair, self.cfg)
        try:
            sample = pipeline.prepare_training_sample(pair, self.cfg, epoch)
        except (NoCorrespondencesError, InvalidCloudError) as e:
            logger.warning('Skipping %s in epoch %d: %s', pair.sample_id, epoch, e)
            return None

        models = self.groups[group]
        f_obj, cache_obj = embed.embed_forward(models.object, sample.object_descriptors)
        f_scn, cache_scn = embed.embed_forward(models.scene, sample.scene_descriptors)
        try:
            breakdown = compute_loss(f_obj, f_scn, sample.positives, sample.negatives, self.loss_cfg)
        except LossInputError as e:
            return SampleResult(index, group, None, None, None, str(e))

        losses = dict((name, getattr(breakdown, name)) for name in LOSS_TERMS)
        if not all(math.isfinite(value) for value in losses.values()):
            return SampleResult(index, group, losses, None, None, 'non-finite loss')

        grads_object = embed.embed_backward(models.object, cache_obj, breakdown.grad_object)
        grads_scene = embed.embed_backward(models.scene, cache_scn, breakdown.grad_scene)
        return SampleResult(index, group, losses, grads_object, grads_scene, None)

    def _diverged(self, epoch, index, reason):
        pair = self.train_pairs[index] if index is not None else None
        state = {
            'epoch': epoch,
            'sample_index': index,
            'sample_id': pair.sample_id if pair is not None else None,
            'reason': reason,
            'last_finite_losses': self.last_finite,
            'config_hash': self.config_hash,
        }
        if self.out_dir is not None:
            util.write_json(os.path.join(self.out_dir, DIVERGENCE_FILE), state)
        logger.error('Training diverged in epoch %d (sample %s): %s', epoch, index, reason)
        return DivergenceError('Training diverged in epoch %d at sample %s: %s' % (epoch, index, reason))

    def _apply(self, epoch, results, lr):
        by_group = collections.OrderedDict()
        for result in results:
            by_group.setdefault(result.group, []).append(result)

        for group, items in by_group.items():
            models = self.groups[group]
            scale = 1.0 / len(items)
            grads_object = embed.zero_gradients(models.object)
            grads_scene = embed.zero_gradients(models.scene)
            for item in items:
                grads_object = embed.add_gradients(grads_object, item.grads_object)
                grads_scene = embed.add_gradients(grads_scene, item.grads_scene)

            try:
                if models.shared:
                    combined = embed.scale_gradients(embed.add_gradients(grads_object, grads_scene), scale)
                    models.object.set_params(optim.step(self.states[group, 'object'], models.object.params,
                                                        combined, lr))
                else:
                    models.object.set_params(optim.step(self.states[group, 'object'], models.object.params,
                                                        embed.scale_gradients(grads_object, scale), lr))
                    models.scene.set_params(optim.step(self.states[group, 'scene'], models.scene.params,
                                                       embed.scale_gradients(grads_scene, scale), lr))
            except posefeat.NumericalError as e:
                raise self._diverged(epoch, items[-1].index, str(e))

    def held_out_fmr(self):
        if not self.held_out:
            return None

        if self._held_out_samples is None:
            self._held_out_samples = []
            for pair in self.held_out:
                try:
                    self._held_out_samples.append(pipeline.prepare_eval_sample(pair, self.cfg))
                except (NoCorrespondencesError, InvalidCloudError) as e:
                    logger.warning('Held-out pair %s unusable: %s', pair.sample_id, e)

        samples = [s for s in self._held_out_samples if self.models_for(s.pair) is not None]
        if not samples:
            return None
        pairs = pipeline.feature_pairs(samples, self.models_for)
        return metrics.fmr(pairs, self.cfg.metrics.tau1_voxels, self.cfg.metrics.tau2_ratio,
                           self.cfg.data.voxel_size)

    def run_epoch(self, epoch):
        epochs = self.cfg.optim.epochs
        lr = optim.lr_at(self.schedule, epoch, epochs)
        order = util.derive_rng(self.cfg.seed, 'epoch', epoch).permutation(len(self.train_pairs)).tolist()
        batch_size = self.cfg.optim.batch_size

        totals = dict((name, 0.0) for name in LOSS_TERMS)
        used = skipped = 0
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            results = util.ordered_map(lambda index: self._sample(epoch, index), batch, self.jobs)

            usable = []
            for index, result in zip(batch, results):
                if result is None:
                    skipped += 1
                elif result.error is not None:
                    raise self._diverged(epoch, index, result.error)
                else:
                    usable.append(result)
                    self.last_finite = result.losses
                    for name in LOSS_TERMS:
                        totals[name] += result.losses[name]

            if usable:
                self._apply(epoch, usable, lr)
                used += len(usable)

        entry = {'epoch': epoch, 'lr': lr, 'samples': used, 'skipped': skipped}
        for name in LOSS_TERMS:
            entry[name] = totals[name] / used if used else None
        entry['heldout_fmr'] = self.held_out_fmr()
        self.log.append(entry)

        logger.info('Epoch %d/%d: lr %.3g, loss %s (p %s, no %s, ns %s), held-out FMR %s', epoch + 1, epochs, lr,
                    _fmt(entry['total']), _fmt(entry['l_p']), _fmt(entry['l_no']), _fmt(entry['l_ns']),
                    _fmt(entry['heldout_fmr']))
        return entry

    def checkpoint(self):
        return embed.Checkpoint(dict(self.groups), self.config_hash, self.cfg.model.features,
                                self.cfg.model.radii_scale, self.cfg.as_dict())

    def manifest(self):
        return {
            'config_hash': self.config_hash,
            'seed': self.cfg.seed,
            'model_seeds': {'object': self.cfg.model.object_seed, 'scene': self.cfg.model.scene_seed},
            'git_revision': util.git_revision(),
            'version': posefeat.__version__,
            'data_source': self.cfg.data.source,
            'train_pairs': [pair.sample_id for pair in self.train_pairs],
            'held_out_pairs': [pair.sample_id for pair in self.held_out],
            'groups': list(self.groups),
        }

    def write_log(self):
        with util.update_file_safely(os.path.join(self.out_dir, TRAIN_LOG_FILE)) as temp_filename:
            with open(temp_filename, 'wt') as fp:
                for entry in self.log:
                    fp.write(json.dumps(util.json_safe(entry), sort_keys=True) + '\n')


def _fmt(value):
    return '-' if value is None else '%.4g' % value


def run_training(cfg, out_dir=None, jobs=1, pairs=None):
    """Train a model pair (per group) and optionally write the run directory"""
    if pairs is None:
        pairs = pipeline.load_pairs(cfg)
    if out_dir is not None:
        util.make_directory(out_dir)

    trainer = Trainer(cfg, pairs, jobs, out_dir)
    logger.info('Training config %s on %d pairs (%d held out), %d epoch(s), %d job(s)', trainer.config_hash,
                len(trainer.train_pairs), len(trainer.held_out), cfg.optim.epochs, jobs)

    for epoch in range(cfg.optim.epochs):
        trainer.run_epoch(epoch)
        if out_dir is not None:
            trainer.write_log()

    checkpoint = trainer.checkpoint()
    manifest = trainer.manifest()
    if out_dir is not None:
        embed.save_checkpoint(os.path.join(out_dir, CHECKPOINT_FILE), checkpoint)
        util.write_json(os.path.join(out_dir, MANIFEST_FILE), manifest)
        trainer.write_log()

    return TrainResult(checkpoint, trainer.log, manifest, trainer.held_out, out_dir)


def cmd_train(cfg, out_dir, jobs=1):
    result = run_training(cfg, out_dir, jobs)
    final = result.log[-1] if result.log else {}
    logger.info('Training finished: final loss %s, held-out FMR %s', _fmt(final.get('total')),
                _fmt(final.get('heldout_fmr')))
    return result
