#
# test_posefeat.ablate - Unit tests for posefeat.ablate (2026-10-17)
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
import os
import shutil
import tempfile
import unittest

import minimock

import posefeat

from posefeat import ablate
from posefeat import config


def fake_metrics(cfg, out_dir, jobs=1):
    return {'fmr': cfg.loss.t_scale, 'addsd_01d': 50.0 if cfg.model.use_rgb else 40.0, 'mean_rre': 0.1,
            'mean_rte': 1.0, 'final_loss': None}


class TestBuildRows(unittest.TestCase):
    def setUp(self):
        self.cfg = config.RunConfig.from_preset('smoke')

    def test_no_axes_is_the_baseline(self):
        rows = ablate.build_rows(self.cfg, [])
        self.assertEqual([row.label for row in rows], ['baseline'])
        self.assertEqual(rows[0].config.config_hash(), self.cfg.config_hash())

    def test_cumulative_t_scale_sweep(self):
        rows = ablate.build_rows(self.cfg, ['t-scale-sweep'])
        self.assertEqual([row.config.loss.t_scale for row in rows], [0.0, 0.05, 0.1, 0.25, 0.5])

    def test_cumulative_keeps_earlier_toggles(self):
        rows = ablate.build_rows(self.cfg, ['safety-threshold', 'rgb'])
        self.assertEqual(len(rows), 4)
        self.assertFalse(rows[0].config.model.use_rgb)
        self.assertEqual(rows[0].config.loss.t_scale, 0.0)
        self.assertEqual(rows[-1].config.loss.t_scale, 0.1)
        self.assertTrue(rows[-1].config.model.use_rgb)
        self.assertEqual(rows[-1].overrides['loss.t_scale'], 0.1)

    def test_one_at_a_time_drops_rows_equal_to_the_baseline(self):
        rows = ablate.build_rows(self.cfg, ['rgb'], ablate.MODE_ONE_AT_A_TIME)
        self.assertEqual([row.label for row in rows], ['baseline', 'rgb off'])

    def test_base_config_is_not_modified(self):
        before = self.cfg.config_hash()
        ablate.build_rows(self.cfg, ['optimizer', 'schedule'])
        self.assertEqual(self.cfg.config_hash(), before)

    def test_aliases(self):
        self.assertEqual(ablate.resolve_axis('rgb-on/off'), 'rgb')
        self.assertEqual(ablate.resolve_axis(' exp/cosine '), 'schedule')

    def test_unknown_axis(self):
        with self.assertRaises(ablate.UnknownAxisError) as cm:
            ablate.build_rows(self.cfg, ['dropout'])
        self.assertIn('safety-threshold', str(cm.exception))
        self.assertEqual(cm.exception.exit_code, posefeat.EXIT_USAGE)

    def test_unknown_mode(self):
        with self.assertRaises(posefeat.UsageError):
            ablate.build_rows(self.cfg, ['rgb'], 'sideways')


class TestCmdAblate(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()
        self.cfg = config.RunConfig.from_preset('smoke')
        minimock.mock('ablate.train_and_evaluate', returns_func=fake_metrics, tracker=None)

    def tearDown(self):
        minimock.restore()
        shutil.rmtree(self.tempdir)

    def test_t_scale_sweep_table(self):
        table, text = ablate.cmd_ablate(self.cfg, ['t-scale-sweep'], self.tempdir, fmt='json')
        self.assertEqual(len(table), 5)
        data = json.loads(text)
        self.assertEqual([row['metrics']['fmr'] for row in data['rows']], [0.0, 0.05, 0.1, 0.25, 0.5])
        self.assertIsNone(data['rows'][0]['delta']['fmr'])
        self.assertAlmostEqual(data['rows'][1]['delta']['fmr'], 0.05)
        self.assertAlmostEqual(data['rows'][4]['delta']['fmr'], 0.25)
        self.assertIsNone(data['rows'][2]['delta']['final_loss'])

    def test_one_at_a_time_deltas_use_the_baseline(self):
        table, _ = ablate.cmd_ablate(self.cfg, ['rgb'], self.tempdir, ablate.MODE_ONE_AT_A_TIME)
        self.assertEqual(table.rows[1]['delta']['addsd_01d'], -10.0)

    def test_files(self):
        _, text = ablate.cmd_ablate(self.cfg, ['safety-threshold'], self.tempdir)
        for name in ('ablation.json', 'ablation.csv', 'ablation.txt'):
            self.assertTrue(os.path.exists(os.path.join(self.tempdir, name)), name)

        lines = text.splitlines()
        self.assertEqual(len(lines), 5)
        self.assertIn('cumulative', lines[0])
        self.assertTrue(lines[2].startswith('baseline'))
        self.assertTrue(lines[3].startswith('+ tau 0.1 D_S'))

        with open(os.path.join(self.tempdir, 'ablation.csv')) as fp:
            self.assertEqual(len(fp.read().splitlines()), 4)
