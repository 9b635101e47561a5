#
# posefeat.jsonconfig - JSON-backed nested configuration tree (2026-10-17)
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

import copy
from functools import reduce

import json


class ConfigError(posefeat.UsageError):
    pass


def _type_name(value):
    if value is None:
        return 'null'
    return type(value).__name__


def coerce_value(key, value, default):
    """Check value against the type of its default, return the stored value

    Defaults of None accept null or a number. Floats accept ints.

    >>> coerce_value('loss.mu_p', 1, 0.1)
    1.0
    >>> coerce_value('optim.epochs', 1.5, 12)
    Traceback (most recent call last):
      ...
    posefeat.jsonconfig.ConfigError: optim.epochs: expected int, got float
    """
    if default is None:
        if value is None:
            return None
        default = 0.0

    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    elif isinstance(default, list):
        if isinstance(value, list):
            return copy.deepcopy(value)
    elif isinstance(default, dict):
        if isinstance(value, dict):
            return value

    raise ConfigError('%s: expected %s, got %s' % (key, _type_name(default), _type_name(value)))


class ConfigSection(object):
    """Attribute view of one dotted prefix of a JsonConfig"""

    def __init__(self, parent, prefix):
        self._parent = parent
        self._prefix = prefix

    def __repr__(self):
        return '<ConfigSection %s>' % self._prefix

    def _dotted(self, name):
        return self._prefix + '.' + name

    def __getitem__(self, name):
        return self._parent._lookup(self._prefix)[name]

    def __getattr__(self, name):
        if name == 'keys':
            # dict(section) needs keys() of the underlying mapping
            return self._parent._lookup(self._prefix).keys
        return getattr(self._parent, self._dotted(name))

    def __setattr__(self, name, value):
        if name.startswith('_'):
            object.__setattr__(self, name, value)
        else:
            setattr(self._parent, self._dotted(name), value)


class JsonConfig(object):
    _INDENT = 2

    def __init__(self, data=None, default=None, on_key_changed=None):
        """
        Create a new JsonConfig object

        data: A JSON string that contains the data to load (optional)
        default: A dict with default values, which doubles as the schema
        on_key_changed: Callback when a value changes (optional)

        With a default, keys outside the schema and values of the wrong
        type are rejected:

        >>> c = JsonConfig(default={'loss': {'mu_p': 0.1}})
        >>> c.loss.mu_p = 0.25
        >>> c.loss.mu_p
        0.25
        >>> c.loss.mu_q = 1.0
        Traceback (most recent call last):
          ...
        posefeat.jsonconfig.ConfigError: Unknown configuration key: loss.mu_q

        The signature of on_key_changed is func(name, old_value, new_value):

        >>> def callback(*args): print('callback:', args)
        >>> c = JsonConfig(on_key_changed=callback)
        >>> c.a.b = 10
        callback: ('a.b', None, 10)
        >>> c.a.b = 11
        callback: ('a.b', 10, 11)
        """
        self._default = default
        self._data = copy.deepcopy(self._default) or {}
        self._on_key_changed = on_key_changed
        if data is not None:
            self._restore(data)

    def _restore(self, backup):
        """
        Restore a state saved with repr(), filling in missing defaults

        >>> c = JsonConfig(default={'a': {'b': 1}})
        >>> c._restore('{"a": {}}')
        >>> c.a.b
        1
        >>> c._restore('{"a": {"b": "x"}}')
        Traceback (most recent call last):
          ...
        posefeat.jsonconfig.ConfigError: a.b: expected int, got str
        """
        try:
            data = json.loads(backup)
        except ValueError as e:
            raise ConfigError('Configuration is not valid JSON: %s' % e)

        if not isinstance(data, dict):
            raise ConfigError('Configuration must be a JSON object, got %s' % _type_name(data))

        if self._default is None:
            self._data = data
        else:
            self._data = self._merge_strict(data, self._default, [])

    def _merge_strict(self, data, default, path):
        result = {}
        for key, value in data.items():
            dotted = '.'.join(path + [key])
            if key not in default:
                raise ConfigError('Unknown configuration key: %s' % dotted)
            if isinstance(default[key], dict):
                coerce_value(dotted, value, default[key])
                result[key] = self._merge_strict(value, default[key], path + [key])
            else:
                result[key] = coerce_value(dotted, value, default[key])

        for key, value in default.items():
            if key not in result:
                result[key] = copy.deepcopy(value)

        return result

    def __repr__(self):
        """
        >>> c = JsonConfig('{"a": 1}')
        >>> print(c)
        {
          "a": 1
        }
        """
        return json.dumps(self._data, indent=self._INDENT, sort_keys=True)

    def _canonical(self):
        return json.dumps(self._data, sort_keys=True, separators=(',', ':'))

    def _as_dict(self):
        return copy.deepcopy(self._data)

    def _lookup(self, name):
        try:
            return reduce(lambda d, k: d[k], name.split('.'), self._data)
        except (KeyError, TypeError):
            raise KeyError(name)

    def _default_for(self, name):
        try:
            return reduce(lambda d, k: d[k], name.split('.'), self._default)
        except (KeyError, TypeError):
            raise ConfigError('Unknown configuration key: %s' % name)

    def _keys_iter(self):
        """Dotted names of all leaf values, sorted within each level"""
        def walk(prefix, node):
            if not isinstance(node, dict):
                yield '.'.join(prefix)
                return
            for key in sorted(node):
                yield from walk(prefix + [key], node[key])

        return walk([], self._data)

    def __getattr__(self, name):
        try:
            value = self._lookup(name)
            if not isinstance(value, dict):
                return value
        except KeyError:
            if self._default is not None and '.' not in name:
                raise AttributeError(name)

        return ConfigSection(self, name)

    def __setattr__(self, name, value):
        if name.startswith('_'):
            object.__setattr__(self, name, value)
            return

        if self._default is not None:
            default = self._default_for(name)
            if isinstance(default, dict):
                raise ConfigError('Cannot replace configuration section: %s' % name)
            value = coerce_value(name, value, default)

        *sections, leaf = name.split('.')
        node = self._data
        for section in sections:
            if not isinstance(node.get(section), dict):
                node[section] = {}
            node = node[section]

        missing = leaf not in node
        old_value = node.get(leaf)
        if missing or old_value != value:
            node[leaf] = value
            if self._on_key_changed is not None:
                self._on_key_changed(name, old_value, value)
