#
# posefeat.core - Common session object for the command line tools (2026-10-17)
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


from posefeat import util
from posefeat import config
from posefeat import log

import os
import logging


class Core(object):
    """Home directories, logging and the run configuration of one invocation

    The configuration starts from the defaults (or a preset), then a
    config file, then --set overrides and finally an explicit seed.
    """

    def __init__(self, config_file=None, preset=None, overrides=(), seed=None,
                 verbose=False, progname='posefeat', stdout=False):
        home = os.path.expanduser('~')

        xdg_data_home = os.environ.get('XDG_DATA_HOME', os.path.join(home, '.local', 'share'))
        xdg_config_home = os.environ.get('XDG_CONFIG_HOME', os.path.join(home, '.config'))
        xdg_cache_home = os.environ.get('XDG_CACHE_HOME', os.path.join(home, '.cache'))

        self.data_home = os.path.join(xdg_data_home, progname)
        self.config_home = os.path.join(xdg_config_home, progname)
        self.cache_home = os.path.join(xdg_cache_home, progname)

        # Use $POSEFEAT_HOME to set a fixed config and data folder
        if 'POSEFEAT_HOME' in os.environ:
            home = os.environ['POSEFEAT_HOME']
            self.data_home = self.config_home = self.cache_home = home

        log.setup(self.cache_home, verbose, stdout)
        self.logger = logging.getLogger(__name__)

        base = config.preset(preset) if preset else None
        if config_file is None:
            # A user-wide default configuration, if present
            default_file = os.path.join(self.config_home, 'config.json')
            if os.path.exists(default_file):
                config_file = default_file

        if config_file is not None:
            self.config = config.RunConfig.load(config_file, base=base)
        else:
            self.config = config.RunConfig(base=base)

        self.config.apply_overrides(overrides)
        if seed is not None:
            self.config.update_field('seed', int(seed))

        self.logger.debug('Configuration %s (preset %s, file %s)', self.config.config_hash(), preset, config_file)

    def output_directory(self, name, out_dir=None):
        """out_dir, or <data home>/runs/<name>-<config hash>"""
        if out_dir is None:
            out_dir = os.path.join(self.data_home, 'runs', '%s-%s' % (name, self.config.config_hash()))
        util.make_directory(out_dir)
        return out_dir

    def shutdown(self):
        self.logger.debug('Shutting down core')
