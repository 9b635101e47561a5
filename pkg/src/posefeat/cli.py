#
# posefeat.cli - Command line interface (2026-10-17)
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

"""posefeat command line

    posefeat train   [--out DIR]                         train and write a checkpoint
    posefeat eval    --checkpoint FILE [--detections F]  register and score
    posefeat ablate  --axes a,b [--mode M]               compare configuration toggles
    posefeat synth   --out DIR [--count N]               write the synthetic suite as BOP
    posefeat metrics --db FILE                           re-score stored predictions
    posefeat inspect [--index N]                         dump mined pairs of one sample

Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
"""

import posefeat

from posefeat import ablate
from posefeat import config
from posefeat import core
from posefeat import evaluate
from posefeat import pipeline
from posefeat import registry
from posefeat import synth
from posefeat import train
from posefeat import util

import argparse
import json
import logging
import os
import sys

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise posefeat.UsageError(message)


def _common(parser):
    parser.add_argument('--config', metavar='PATH', help='JSON run configuration')
    parser.add_argument('--preset', choices=sorted(config.PRESETS), help='start from a preset')
    parser.add_argument('--set', dest='overrides', metavar='KEY=VALUE', action='append', default=[],
                        help='override a config field, e.g. loss.t_scale=0.05 (repeatable)')
    parser.add_argument('--seed', type=int, help='run seed')
    parser.add_argument('--jobs', type=int, default=1, help='worker threads (results do not depend on it)')
    parser.add_argument('--out', metavar='DIR', help='output directory')
    parser.add_argument('--format', dest='fmt', choices=evaluate.REPORT_FORMATS, default='json',
                        help='report printed on stdout')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')


def build_parser():
    parser = ArgumentParser(prog='posefeat', description=posefeat.__tagline__)
    parser.add_argument('--version', action='version', version='%(prog)s ' + posefeat.__version__)
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    sub = commands.add_parser('train', help='train an embedding model pair')
    _common(sub)

    sub = commands.add_parser('eval', help='evaluate a checkpoint')
    _common(sub)
    sub.add_argument('--checkpoint', required=True, metavar='FILE')
    sub.add_argument('--detections', metavar='PATH', help='JSON detections used as crop prior')

    sub = commands.add_parser('ablate', help='train and compare configuration toggles')
    _common(sub)
    sub.add_argument('--axes', default='', help='comma-separated axes: %s' %
                     ', '.join(registry.ablation_axis.names()))
    sub.add_argument('--mode', choices=ablate.MODES, default=ablate.MODE_CUMULATIVE)

    sub = commands.add_parser('synth', help='write the synthetic suite in BOP layout')
    _common(sub)
    sub.add_argument('--count', type=int, help='number of images (default: synthetic.pairs)')

    sub = commands.add_parser('metrics', help='re-score a prediction database')
    _common(sub)
    sub.add_argument('--db', required=True, metavar='FILE', help='predictions.minidb written by eval')

    sub = commands.add_parser('inspect', help='dump mined correspondences of one synthetic pair')
    _common(sub)
    sub.add_argument('--index', type=int, default=0, help='pair index in the synthetic suite')

    return parser


def cmd_synth(session, args):
    out_dir = args.out or session.output_directory('synth')
    scene_dir = synth.write_bop_dataset(session.config, out_dir, args.count)
    return json.dumps({'dataset': out_dir, 'scene': scene_dir}, indent=2)


def inspect_pair(cfg, index=0):
    """Positives and negative candidate counts of one deterministic sample"""
    pairs = synth.generate_suite(cfg, count=index + 1)
    pair = pairs[index]
    pair.scene_id, pair.image_id = 'synthetic', index
    sample = pipeline.prepare_eval_sample(pair, cfg)
    counts_object = sample.negatives.object_side.counts()
    counts_scene = sample.negatives.scene_side.counts()
    return {
        'sample_id': pair.sample_id,
        'object_id': pair.object_id,
        'object_points': len(sample.object_cloud),
        'scene_points': len(sample.scene_cloud),
        'safety_radius': sample.negatives.safety_radius,
        'positives': sample.positives.to_json(),
        'negative_candidates': {'object': counts_object.tolist(), 'scene': counts_scene.tolist()},
        'config_hash': cfg.config_hash(),
    }


def cmd_inspect(session, args):
    data = inspect_pair(session.config, args.index)
    if args.out:
        util.make_directory(args.out)
        util.write_json(os.path.join(args.out, 'inspect.json'), data)
    return json.dumps(util.json_safe(data), sort_keys=True)


def run(args, session):
    cfg = session.config
    if args.command == 'train':
        out_dir = session.output_directory('train', args.out)
        result = train.cmd_train(cfg, out_dir, args.jobs)
        return json.dumps(util.json_safe({'out': out_dir, 'config_hash': result.manifest['config_hash'],
                                          'final': result.log[-1] if result.log else None}), sort_keys=True)
    elif args.command == 'eval':
        out_dir = session.output_directory('eval', args.out)
        _, text = evaluate.cmd_eval(cfg, args.checkpoint, out_dir, args.detections, args.fmt, args.jobs)
        return text
    elif args.command == 'ablate':
        out_dir = session.output_directory('ablate', args.out)
        axes = [axis for axis in args.axes.split(',') if axis.strip()]
        _, text = ablate.cmd_ablate(cfg, axes, out_dir, args.mode, args.jobs, args.fmt)
        return text
    elif args.command == 'synth':
        return cmd_synth(session, args)
    elif args.command == 'metrics':
        _, text = evaluate.cmd_metrics(cfg, args.db, args.out, args.fmt)
        return text
    elif args.command == 'inspect':
        return cmd_inspect(session, args)

    raise posefeat.UsageError('Unknown command %r' % args.command)


def main(argv=None, stdout=None):
    """Run one command; returns the process exit code"""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except posefeat.UsageError as e:
        print('posefeat: error: %s' % e, file=sys.stderr)
        return posefeat.EXIT_USAGE

    session = None
    try:
        session = core.Core(args.config, args.preset, args.overrides, args.seed, verbose=args.verbose)
        output = run(args, session)
    except posefeat.PoseFeatError as e:
        logger.error('%s failed: %s', args.command, e)
        print('posefeat: %s' % e, file=sys.stderr)
        return e.exit_code
    finally:
        if session is not None:
            session.shutdown()

    if output:
        stdout.write(output if output.endswith('\n') else output + '\n')
    return posefeat.EXIT_OK
