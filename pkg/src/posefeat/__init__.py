#
# posefeat: Main module with release metadata
#

"""
posefeat: Object pose feature learning and registration toolkit
Copyright (c) 2026, the posefeat developers

Dense per-point features are learned for an object model and a scene with
a safety-thresholded hardest contrastive loss, matched, and turned into a
6D pose with RANSAC. All lengths are in millimeters unless a name says
otherwise.

==== ISC License Text ====

Permission to use, copy, modify, and/or distribute this software for any
purpose with or without fee is hereby granted, provided that the above
copyright notice and this permission notice appear in all copies.

THE SOFTWARE IS PROVIDED "AS IS" AND THE AUTHOR DISCLAIMS ALL WARRANTIES WITH
REGARD TO THIS SOFTWARE INCLUDING ALL IMPLIED WARRANTIES OF MERCHANTABILITY
AND FITNESS. IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR ANY SPECIAL, DIRECT,
INDIRECT, OR CONSEQUENTIAL DAMAGES OR ANY DAMAGES WHATSOEVER RESULTING FROM
LOSS OF USE, DATA OR PROFITS, WHETHER IN AN ACTION OF CONTRACT, NEGLIGENCE OR
OTHER TORTIOUS ACTION, ARISING OUT OF OR IN CONNECTION WITH THE USE OR
PERFORMANCE OF THIS SOFTWARE.
"""

# This metadata block gets parsed by setup.py - use single quotes only
__tagline__ = 'Object pose feature learning and registration toolkit'
__author__ = 'posefeat developers <posefeat@users.noreply.github.com>'
__version__ = '0.4.0'
__date__ = '2026-10-17'
__copyright__ = '© 2026 the posefeat developers'
__license__ = 'ISC'
__url__ = 'https://github.com/posefeat/posefeat'

__version_info__ = tuple(int(x) for x in __version__.split('.'))

# Process exit codes used by the command line interface
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = list(range(4))

# Millimeters per centimeter (RTE is reported in cm)
MM_PER_CM = 10.0


class PoseFeatError(Exception):
    """Base class for all errors raised by posefeat"""
    exit_code = EXIT_DATA


class DataError(PoseFeatError):
    """Input data is missing, malformed or unusable"""
    exit_code = EXIT_DATA


class NumericalError(PoseFeatError):
    """A computation produced non-finite values or could not be solved"""
    exit_code = EXIT_NUMERICAL


class UsageError(PoseFeatError):
    """Invalid configuration or command line usage"""
    exit_code = EXIT_USAGE
