#
# test_posefeat.util - Unit tests for posefeat.util (2026-10-17)
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
import threading
import time
import unittest

import minimock
import numpy as np

from posefeat import util


class TestFiles(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tempdir)

    def test_write_json_replaces_non_finite(self):
        filename = os.path.join(self.tempdir, 'data.json')
        util.write_json(filename, {'a': math.inf, 'b': [np.float64(0.5), np.nan], 'c': np.int64(3)})
        with open(filename) as fp:
            self.assertEqual(json.load(fp), {'a': None, 'b': [0.5, None], 'c': 3})
        self.assertFalse(os.path.exists(os.path.join(self.tempdir, '.tmp-data.json')))

    def test_failed_write_keeps_the_old_file(self):
        filename = os.path.join(self.tempdir, 'data.json')
        util.write_json(filename, {'a': 1})
        with self.assertRaises(TypeError):
            util.write_json(filename, {'a': object()})
        self.assertEqual(util.read_json(filename), {'a': 1})

    def test_make_directory(self):
        path = os.path.join(self.tempdir, 'a', 'b')
        self.assertTrue(util.make_directory(path))
        self.assertTrue(os.path.isdir(path))
        self.assertTrue(util.make_directory(path))


class TestSeeds(unittest.TestCase):
    def test_derive_seed_is_deterministic(self):
        self.assertEqual(util.derive_seed(0, 'pair', 3), util.derive_seed(0, 'pair', 3))
        self.assertNotEqual(util.derive_seed(0, 'pair', 3), util.derive_seed(0, 'pair', 4))
        self.assertNotEqual(util.derive_seed(0, 'object'), util.derive_seed(0, 'scene'))

    def test_derive_rng(self):
        self.assertEqual(util.derive_rng(5, 'x').random(3).tolist(), util.derive_rng(5, 'x').random(3).tolist())

    def test_negative_key(self):
        with self.assertRaises(ValueError):
            util.derive_seed(-1)


class TestOrderedMap(unittest.TestCase):
    def test_order_does_not_depend_on_completion(self):
        finished = []
        lock = threading.Lock()

        def work(value):
            time.sleep(0.01 * (5 - value))
            with lock:
                finished.append(value)
            return value * value

        self.assertEqual(util.ordered_map(work, range(5), jobs=4), [0, 1, 4, 9, 16])
        self.assertEqual(util.ordered_map(work, range(5), jobs=1), [0, 1, 4, 9, 16])
        self.assertEqual(sorted(finished), [0, 0, 1, 1, 2, 2, 3, 3, 4, 4])


class TestGitRevision(unittest.TestCase):
    def tearDown(self):
        minimock.restore()

    def test_without_git(self):
        minimock.mock('util.subprocess.run', raises=OSError('git not installed'), tracker=None)
        self.assertEqual(util.git_revision(), 'unknown')

    def test_reports_the_commit(self):
        result = minimock.Mock('CompletedProcess', tracker=None)
        result.stdout = b'0123abcd\n'
        minimock.mock('util.subprocess.run', returns=result, tracker=None)
        self.assertEqual(util.git_revision(), '0123abcd')
