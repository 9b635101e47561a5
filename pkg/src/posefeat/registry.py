#
# posefeat.registry - Named component registries (2026-10-17)
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

import logging

logger = logging.getLogger(__name__)


class UnknownEntry(posefeat.UsageError):
    pass


class Resolver(object):
    def __init__(self, name, description):
        self._name = name
        self._description = description
        self._resolvers = []

    def __repr__(self):
        return '<Resolver %s: %s>' % (self._name, self._description)

    def __contains__(self, key):
        return any(name == key for name, _ in self._resolvers)

    def names(self):
        return [name for name, _ in self._resolvers]

    def lookup(self, key):
        for name, resolver in self._resolvers:
            if name == key:
                return resolver

        raise UnknownEntry('Unknown %s %r (valid: %s)' % (self._name.replace('_', ' '), key,
                                                          ', '.join(self.names())))

    def resolve(self, key, *args, **kwargs):
        resolver = self.lookup(key)
        logger.debug('{} resolved by {}'.format(self._name, self._info(resolver)))
        return resolver(*args, **kwargs)

    def each(self, *args):
        for _, resolver in self._resolvers:
            result = resolver(*args)
            if result is not None:
                yield result

    def register(self, func=None, name=None):
        """Register func under name (default: the function name)

        Usable as a plain decorator or as @resolver.register(name='...').
        """
        def decorator(func):
            key = name or func.__name__
            if key in self:
                raise ValueError('Duplicate {} entry: {}'.format(self._name, key))
            logger.debug('Registering {} resolver: {}'.format(self._name, key))
            self._resolvers.append((key, func))
            return func

        if func is None:
            return decorator
        return decorator(func)

    def _info(self, resolver):
        return '%s from %s' % (resolver.__name__ if hasattr(resolver, '__name__')
                               else resolver.__class__.__name__, resolver.__module__)


RESOLVER_NAMES = {'shape_builder': 'Build a procedural textured object mesh',
                  'update_rule': 'Parameter update rule for the optimizer',
                  'lr_schedule': 'Learning rate schedule across epochs',
                  'ablation_axis': 'Configuration toggle compared by the ablation runner',
                  'dataset_source': 'Produce training and evaluation samples'}

LOCALS = locals()

for name, description in RESOLVER_NAMES.items():
    LOCALS[name] = Resolver(name, description)
