#
# posefeat.ablate - Ablation runner comparing configuration toggles (2026-10-17)
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

"""Ablation runner

Every axis is a list of variants, each a set of dotted config overrides.
In cumulative mode the baseline takes the first variant of every listed
axis and each following row switches one more variant on top of the row
before it; deltas are against the previous row. In one-at-a-time mode
every variant is applied alone to the base config and compared with it.
Rows that produce an already seen config are dropped.
"""

import posefeat

from posefeat import evaluate
from posefeat import pipeline
from posefeat import registry
from posefeat import train
from posefeat import util

import collections
import csv
import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

MODE_CUMULATIVE = 'cumulative'
MODE_ONE_AT_A_TIME = 'one-at-a-time'
MODES = (MODE_CUMULATIVE, MODE_ONE_AT_A_TIME)

METRIC_COLUMNS = ('fmr', 'addsd_01d', 'mean_rre', 'mean_rte', 'final_loss')

ALIASES = {
    'rgb-on/off': 'rgb',
    'sgd/adam/adamw': 'optimizer',
    'exp/cosine': 'schedule',
    't_scale sweep': 't-scale-sweep',
    't_scale-sweep': 't-scale-sweep',
}


class UnknownAxisError(posefeat.UsageError):
    pass


Variant = collections.namedtuple('Variant', 'label overrides')


@registry.ablation_axis.register(name='safety-threshold')
def safety_threshold(cfg):
    return [Variant('no safety threshold', {'loss.t_scale': 0.0, 'loss.per_side_diameter': False}),
            Variant('tau 0.1 D_S', {'loss.t_scale': 0.1, 'loss.per_side_diameter': True}),
            Variant('tau 0.1 D_O', {'loss.t_scale': 0.1, 'loss.per_side_diameter': False})]


@registry.ablation_axis.register(name='shared-vs-independent-weights')
def shared_weights(cfg):
    return [Variant('shared weights', {'model.shared_weights': True}),
            Variant('independent weights', {'model.shared_weights': False})]


@registry.ablation_axis.register
def rgb(cfg):
    return [Variant('rgb off', {'model.use_rgb': False}),
            Variant('rgb on', {'model.use_rgb': True})]


@registry.ablation_axis.register(name='color-jitter')
def color_jitter(cfg):
    return [Variant('no color jitter', {'augment.color_jitter': False}),
            Variant('color jitter', {'augment.color_jitter': True})]


@registry.ablation_axis.register(name='random-erase')
def random_erase(cfg):
    return [Variant('no random erase', {'augment.random_erase': False}),
            Variant('random erase', {'augment.random_erase': True})]


@registry.ablation_axis.register
def optimizer(cfg):
    return [Variant(rule, {'optim.rule': rule}) for rule in ('sgd', 'adam', 'adamw')]


@registry.ablation_axis.register
def schedule(cfg):
    return [Variant(kind, {'optim.schedule': kind}) for kind in ('exponential', 'cosine')]


@registry.ablation_axis.register(name='t-scale-sweep')
def t_scale_sweep(cfg):
    return [Variant('t_scale %g' % value, {'loss.t_scale': float(value)}) for value in cfg.ablation.t_scale_sweep]


def resolve_axis(name):
    """Registered axis name for name or one of its aliases

    >>> resolve_axis('sgd/adam/adamw')
    'optimizer'
    """
    key = ALIASES.get(name.strip(), name.strip())
    if key not in registry.ablation_axis:
        raise UnknownAxisError('Unknown ablation axis %r (valid: %s)' %
                               (name, ', '.join(registry.ablation_axis.names() + sorted(ALIASES))))
    return key


AblationRow = collections.namedtuple('AblationRow', 'label axis overrides config')


def _with(cfg, overrides):
    result = cfg.copy()
    for key, value in overrides.items():
        result.update_field(key, value)
    return result


def build_rows(base_cfg, axes, mode=MODE_CUMULATIVE):
    """Configurations to compare, baseline first"""
    if mode not in MODES:
        raise posefeat.UsageError('Unknown ablation mode %r (valid: %s)' % (mode, ', '.join(MODES)))

    axes = [resolve_axis(name) for name in axes]
    variants = [(axis, registry.ablation_axis.resolve(axis, base_cfg)) for axis in axes]

    rows = []
    seen = set()

    def add(label, axis, overrides, cfg):
        key = cfg.config_hash()
        if key in seen:
            logger.debug('Dropping ablation row %r: same config as an earlier row', label)
            return
        seen.add(key)
        rows.append(AblationRow(label, axis, dict(overrides), cfg))

    if mode == MODE_CUMULATIVE:
        overrides = {}
        for axis, items in variants:
            overrides.update(items[0].overrides)
        current = _with(base_cfg, overrides)
        add('baseline', None, overrides, current)

        for axis, items in variants:
            for variant in items[1:]:
                overrides = dict(overrides, **variant.overrides)
                current = _with(current, variant.overrides)
                add('+ ' + variant.label, axis, overrides, current)
    else:
        add('baseline', None, {}, base_cfg.copy())
        for axis, items in variants:
            for variant in items:
                add(variant.label, axis, variant.overrides, _with(base_cfg, variant.overrides))

    return rows


def _median(values):
    values = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.median(values)) if values else None


def train_and_evaluate(cfg, out_dir, jobs=1):
    """Median metrics of one configuration over the ablation seeds"""
    per_seed = collections.defaultdict(list)
    for seed in cfg.ablation.seeds:
        seed_cfg = cfg.copy()
        seed_cfg.update_field('seed', seed)
        run_dir = os.path.join(out_dir, 'seed-%d' % seed)

        result = train.run_training(seed_cfg, run_dir, jobs)
        final = result.log[-1] if result.log else {}
        per_seed['final_loss'].append(final.get('total'))
        per_seed['fmr'].append(final.get('heldout_fmr'))

        pairs = result.held_out if seed_cfg.data.source == 'synthetic' else pipeline.evaluation_pairs(seed_cfg)
        if not pairs:
            logger.warning('No evaluation pairs for seed %d; pose metrics stay empty', seed)
            continue

        records = evaluate.evaluate_pairs(result.checkpoint, pairs, seed_cfg, None, jobs)
        overall = evaluate.build_report(records, seed_cfg).overall()
        for name in ('addsd_01d', 'mean_rre', 'mean_rte'):
            per_seed[name].append(overall[name])

    return dict((name, _median(per_seed[name])) for name in METRIC_COLUMNS)


class AblationTable(object):
    def __init__(self, mode, config_hash, seeds):
        self.mode = mode
        self.config_hash = config_hash
        self.seeds = list(seeds)
        self.rows = []

    def add(self, row, values):
        reference = None
        if self.rows:
            reference = self.rows[-1] if self.mode == MODE_CUMULATIVE else self.rows[0]

        deltas = {}
        for name in METRIC_COLUMNS:
            value = values.get(name)
            base = reference['metrics'].get(name) if reference is not None else None
            deltas[name] = value - base if value is not None and base is not None else None

        self.rows.append({'label': row.label, 'axis': row.axis, 'overrides': row.overrides,
                          'config_hash': row.config.config_hash(), 'metrics': dict(values), 'delta': deltas})

    def __len__(self):
        return len(self.rows)

    def to_json(self):
        return {'mode': self.mode, 'config_hash': self.config_hash, 'seeds': self.seeds, 'rows': self.rows}

    def _header(self):
        return ['label', 'axis', 'config_hash'] + [c for name in METRIC_COLUMNS for c in (name, 'delta_' + name)]

    def _cells(self, row):
        cells = [row['label'], row['axis'] or '', row['config_hash']]
        for name in METRIC_COLUMNS:
            cells.extend([row['metrics'].get(name), row['delta'].get(name)])
        return cells

    def write_csv(self, filename):
        with util.update_file_safely(filename) as temp_filename:
            with open(temp_filename, 'w', newline='') as fp:
                writer = csv.writer(fp)
                writer.writerow(self._header())
                for row in self.rows:
                    writer.writerow(['' if cell is None else cell for cell in self._cells(row)])

    def format_text(self):
        def fmt(value):
            if value is None:
                return '-'
            if isinstance(value, float):
                return '%.4g' % value
            return str(value)

        def signed(value):
            return '-' if value is None else '%+.4g' % value

        table = [['row'] + [c for name in METRIC_COLUMNS for c in (name, 'D')]]
        for row in self.rows:
            cells = [row['label']]
            for name in METRIC_COLUMNS:
                cells.extend([fmt(row['metrics'].get(name)), signed(row['delta'].get(name))])
            table.append(cells)

        widths = [max(len(r[c]) for r in table) for c in range(len(table[0]))]
        lines = ['config %s, %s, seeds %s' % (self.config_hash, self.mode, ','.join(map(str, self.seeds)))]
        lines.extend('  '.join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in
                               enumerate(zip(r, widths))) for r in table)
        return '\n'.join(lines) + '\n'

    def write(self, out_dir):
        util.make_directory(out_dir)
        util.write_json(os.path.join(out_dir, 'ablation.json'), self.to_json())
        self.write_csv(os.path.join(out_dir, 'ablation.csv'))
        with util.update_file_safely(os.path.join(out_dir, 'ablation.txt')) as temp_filename:
            with open(temp_filename, 'w') as fp:
                fp.write(self.format_text())


def _slug(label):
    return ''.join(c if c.isalnum() else '-' for c in label.lower()).strip('-') or 'row'


def cmd_ablate(cfg, axes, out_dir, mode=MODE_CUMULATIVE, jobs=1, fmt='text'):
    rows = build_rows(cfg, axes or [], mode)
    logger.info('Ablation over %s (%s): %d configuration(s)', ', '.join(axes or []) or 'nothing', mode, len(rows))

    table = AblationTable(mode, cfg.config_hash(), cfg.ablation.seeds)
    for index, row in enumerate(rows):
        logger.info('Ablation row %d/%d: %s', index + 1, len(rows), row.label)
        values = train_and_evaluate(row.config, os.path.join(out_dir, 'rows', '%02d-%s' % (index, _slug(row.label))),
                                    jobs)
        table.add(row, values)

    table.write(out_dir)
    filename = {'json': 'ablation.json', 'csv': 'ablation.csv', 'text': 'ablation.txt'}[fmt]
    with open(os.path.join(out_dir, filename), 'rt') as fp:
        return table, fp.read()
