#
# posefeat.util - Misc utility functions (2026-10-17)
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

"""Miscellaneous helper functions for posefeat

File handling, seeded random streams and the ordered worker pool used by
the training and evaluation loops.
"""

import contextlib
import json
import logging
import math
import os
import subprocess
import tempfile
import zlib

from concurrent.futures import ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def make_directory(path):
    """
    Tries to create a directory if it does not exist already.
    Returns True if the directory exists after the function
    call, False otherwise.
    If the directory already exists it returns True if it is
    writable.
    """
    if os.path.isdir(path):
        return os.access(path, os.W_OK)

    try:
        os.makedirs(path)
    except OSError:
        logger.warning('Could not create directory: %s', path)
        return False

    return True


def delete_file(filename):
    """Delete a file from the filesystem

    Errors (permissions errors or file not found)
    are silently ignored.
    """
    try:
        os.remove(filename)
    except OSError:
        logger.warning('Cannot delete file: %s', filename, exc_info=True)


@contextlib.contextmanager
def update_file_safely(target_filename):
    """Update file in a safe way using atomic renames

    Example usage:

    >>> filename = tempfile.NamedTemporaryFile(delete=False).name
    >>> with update_file_safely(filename) as temp_filename:
    ...    with open(temp_filename, 'w') as fp:
    ...        fp.write('Try to write this safely')
    24
    >>> open(filename).read()
    'Try to write this safely'
    >>> with update_file_safely(filename) as temp_filename:
    ...     with open(temp_filename, 'w') as fp:
    ...         fp.write('Updated!')
    ...         raise ValueError('something bad happened')
    Traceback (most recent call last):
      ...
    ValueError: something bad happened
    >>> open(filename).read()
    'Try to write this safely'
    >>> os.remove(filename)

    The temporary file is deleted and the rename does not take place
    if something in the "with"-block raises an exception.
    """
    dirname = os.path.dirname(target_filename)
    basename = os.path.basename(target_filename)

    tmp_filename = os.path.join(dirname, '.tmp-' + basename)
    try:
        yield tmp_filename
    except Exception as e:
        logger.warning('Exception while atomic-saving file: %s', e, exc_info=True)
        if os.path.exists(tmp_filename):
            delete_file(tmp_filename)
        raise

    os.replace(tmp_filename, target_filename)


def json_safe(value):
    """Replace non-finite floats by None, recursively

    >>> json_safe({'a': [1.5, float('inf')]})
    {'a': [1.5, None]}
    """
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    elif isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    elif isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    elif isinstance(value, np.integer):
        return int(value)
    elif isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(filename, data, indent=2):
    """Atomically write data as sorted JSON (floats keep repr precision)"""
    with update_file_safely(filename) as temp_filename:
        with open(temp_filename, 'wt') as fp:
            json.dump(json_safe(data), fp, indent=indent, sort_keys=True, allow_nan=False)
            fp.write('\n')


def read_json(filename):
    with open(filename, 'rt') as fp:
        return json.load(fp)


def stable_key(key):
    """Map an int or str to a non-negative int for seeding

    >>> stable_key(7), stable_key('erase') == stable_key('erase')
    (7, True)
    """
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        if key < 0:
            raise ValueError('Seed keys must be non-negative, got %d' % key)
        return int(key)
    return zlib.crc32(str(key).encode('utf-8'))


def derive_rng(*keys):
    """Random generator determined only by the given keys

    Streams for different (seed, epoch, sample, purpose) tuples are
    independent, so scheduling order never changes results.
    """
    return np.random.default_rng(np.random.SeedSequence([stable_key(k) for k in keys]))


def derive_seed(*keys):
    return int(np.random.SeedSequence([stable_key(k) for k in keys]).generate_state(1)[0])


def ordered_map(function, items, jobs=1):
    """Map function over items with up to jobs threads, results in input order"""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(function, items))


def git_revision(path=None):
    """Return the git commit of the source checkout, or 'unknown'"""
    path = path or os.path.dirname(os.path.abspath(__file__))
    try:
        result = subprocess.run(['git', 'rev-parse', 'HEAD'], cwd=path, stdout=subprocess.PIPE,
                                stderr=subprocess.DEVNULL, timeout=10, check=True)
    except (OSError, subprocess.SubprocessError):
        logger.debug('No git revision available for %s', path)
        return 'unknown'

    return result.stdout.decode('ascii', 'replace').strip() or 'unknown'
