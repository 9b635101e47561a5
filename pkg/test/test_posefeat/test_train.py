#
# test_posefeat.train - Unit tests for posefeat.train (2026-10-17)
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



import json
import math
import os
import shutil
import tempfile
import unittest

import minimock

import posefeat

from posefeat import config
from posefeat import loss
from posefeat import pipeline
from posefeat import train

LOG_KEYS = {'epoch', 'lr', 'samples', 'skipped', 'l_p', 'l_no', 'l_ns', 'total', 'heldout_fmr'}


class TestRunTraining(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tempdir = tempfile.mkdtemp()
        cls.cfg = config.RunConfig.from_preset('smoke')
        cls.result = train.run_training(cls.cfg, os.path.join(cls.tempdir, 'run'), jobs=1)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tempdir)

    def test_artifacts(self):
        for name in ('checkpoint.json', 'manifest.json', 'train_log.jsonl'):
            self.assertTrue(os.path.exists(os.path.join(self.result.out_dir, name)), name)

    def test_log_has_one_line_per_epoch(self):
        with open(os.path.join(self.result.out_dir, 'train_log.jsonl')) as fp:
            lines = [json.loads(line) for line in fp if line.strip()]
        self.assertEqual(len(lines), self.cfg.optim.epochs)
        self.assertEqual([entry['epoch'] for entry in lines], [0, 1])
        for entry in lines:
            self.assertEqual(set(entry), LOG_KEYS)
            self.assertTrue(math.isfinite(entry['total']))

    def test_manifest(self):
        with open(os.path.join(self.result.out_dir, 'manifest.json')) as fp:
            manifest = json.load(fp)
        self.assertEqual(manifest['config_hash'], self.cfg.config_hash())
        self.assertEqual(manifest['seed'], self.cfg.seed)
        self.assertEqual(manifest['version'], posefeat.__version__)
        self.assertEqual(len(manifest['train_pairs']) + len(manifest['held_out_pairs']), self.cfg.synthetic.pairs)

    def test_held_out_pairs_match_the_evaluation_split(self):
        self.assertEqual([p.sample_id for p in self.result.held_out],
                         [p.sample_id for p in pipeline.evaluation_pairs(self.cfg)])

    def test_thread_count_does_not_change_the_checkpoint(self):
        again = train.run_training(self.cfg, None, jobs=3)
        self.assertEqual(json.dumps(again.checkpoint.to_json(), sort_keys=True),
                         json.dumps(self.result.checkpoint.to_json(), sort_keys=True))
        self.assertEqual(again.log, self.result.log)


class TestDivergence(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()
        self.cfg = config.RunConfig.from_preset('smoke')
        self.cfg.update_field('optim.epochs', 1)
        self.cfg.update_field('synthetic.pairs', 4)

    def tearDown(self):
        minimock.restore()
        shutil.rmtree(self.tempdir)

    def test_diverged_writes_state(self):
        trainer = train.Trainer(self.cfg, pipeline.load_pairs(self.cfg), out_dir=self.tempdir)
        error = trainer._diverged(1, 0, 'non-finite loss')
        self.assertIsInstance(error, train.DivergenceError)
        self.assertEqual(error.exit_code, posefeat.EXIT_NUMERICAL)

        with open(os.path.join(self.tempdir, train.DIVERGENCE_FILE)) as fp:
            state = json.load(fp)
        self.assertEqual(state['epoch'], 1)
        self.assertEqual(state['sample_index'], 0)
        self.assertEqual(state['sample_id'], trainer.train_pairs[0].sample_id)
        self.assertEqual(state['reason'], 'non-finite loss')
        self.assertEqual(state['config_hash'], self.cfg.config_hash())

    def test_nan_loss_stops_training(self):
        def nan_loss(f_obj, f_scn, positives, negatives, cfg):
            return loss.LossBreakdown(math.nan, 0.0, 0.0, math.nan, None, None, None)

        minimock.mock('train.compute_loss', returns_func=nan_loss, tracker=None)
        with self.assertRaises(train.DivergenceError):
            train.run_training(self.cfg, self.tempdir)
        self.assertTrue(os.path.exists(os.path.join(self.tempdir, train.DIVERGENCE_FILE)))
        self.assertFalse(os.path.exists(os.path.join(self.tempdir, 'checkpoint.json')))
