#
# posefeat.log - Logging setup (2026-10-17)
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

import glob
import logging
import os
import sys
import time
import traceback

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s [%(name)s] %(levelname)s: %(message)s'

# Keep logs around for 5 days
LOG_KEEP_DAYS = 5


def purge_old_logs(logging_directory, now=None):
    """Remove dated log files older than LOG_KEEP_DAYS, return the removed paths"""
    now = time.time() if now is None else now
    purged = []
    for old_logfile in glob.glob(os.path.join(logging_directory, '*-*-*.log')):
        if now - os.stat(old_logfile).st_mtime > 60 * 60 * 24 * LOG_KEEP_DAYS:
            logger.info('Purging old logfile: %s', old_logfile)
            try:
                os.remove(old_logfile)
                purged.append(old_logfile)
            except OSError:
                logger.warning('Cannot purge logfile: %s', old_logfile, exc_info=True)
    return purged


def setup(home=None, verbose=True, stdout=False):
    logging.basicConfig(format=LOG_FORMAT, level=logging.DEBUG if verbose else logging.WARNING,
                        stream=sys.stdout if stdout else sys.stderr)

    # Log uncaught exceptions before the default hook prints them
    original_excepthook = sys.excepthook

    def on_uncaught_exception(exctype, value, tb):
        message = ''.join(traceback.format_exception(exctype, value, tb))
        logger.error('Uncaught exception: %s', message)
        original_excepthook(exctype, value, tb)
    sys.excepthook = on_uncaught_exception

    if home and os.environ.get('POSEFEAT_WRITE_LOGS', 'yes') != 'no':
        logging_directory = os.path.join(home, 'Logs')
        if not os.path.isdir(logging_directory):
            try:
                os.makedirs(logging_directory)
            except OSError:
                logger.warning('Cannot create log directory: %s', logging_directory)
                return False

        purge_old_logs(logging_directory)

        logfile = os.path.join(logging_directory, time.strftime('%Y-%m-%d.log'))
        file_handler = logging.FileHandler(logfile, 'a', 'utf-8')
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(file_handler)

    logger.debug('==== posefeat %s starts up ====', posefeat.__version__)

    return True
