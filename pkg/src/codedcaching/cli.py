"""Command line entry point: ``simulate``, ``sweep``, ``bounds`` and ``verify``.

Exit codes: 0 success, 2 invalid config, 3 capability limit, 4 property-battery failure.
"""

import argparse
import dataclasses
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import bound_report
from .harness import ExperimentConfig, run_trials, sweep, verify_suite, write_records
from .model import CapabilityError, InstanceError

EXIT_OK, EXIT_CONFIG, EXIT_CAPABILITY, EXIT_BATTERY = 0, 2, 3, 4

_FLAG_FIELDS = {
    'K': 'K', 'N': 'N', 'M': 'M', 'F_prime': 'F_prime', 'F': 'F', 'placement': 'placement',
    'delivery': 'delivery', 'g': 'g', 'demand': 'demand_mode', 'trials': 'trials',
    'seed': 'seed', 'grouping_size': 'grouping_size', 'workers': 'workers', 'out': 'output_path',
}


def _add_experiment_flags(p):
    p.add_argument('--K', type=int)
    p.add_argument('--N', type=int)
    p.add_argument('--M', type=Fraction)
    p.add_argument('--F-prime', dest='F_prime', type=int)
    p.add_argument('--F', type=int)
    p.add_argument('--placement', choices=['old_random', 'new_random', 'deterministic_grouped'])
    p.add_argument('--delivery', choices=['old_enum', 'greedy', 'modified', 'deterministic', 'optimal'])
    p.add_argument('--g', type=int)
    p.add_argument('--demand', choices=['distinct_worst_case', 'uniform_random', 'fixed'])
    p.add_argument('--fixed-demand', type=lambda s: [int(x) for x in s.split(',')],
                   help='comma-separated 0-based file indices, with --demand fixed')
    p.add_argument('--trials', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--grouping-size', dest='grouping_size', type=int)
    p.add_argument('--workers', type=int)
    p.add_argument('--out')
    p.add_argument('--format', choices=['csv', 'json'], default='csv')


def _config_from_args(args, base=None):
    d = dict(base or {})
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            d[name] = value
    if getattr(args, 'fixed_demand', None) is not None:
        d['fixed_demand'] = args.fixed_demand
    if 'output_path' in d:
        # the writer below owns the output file
        d.pop('output_path')
    return ExperimentConfig.from_dict(d)


def cmd_simulate(args):
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = _config_from_args(args, base)
    stats, records = run_trials(cfg)
    text = write_records(records, args.format)
    if args.out:
        Path(args.out).write_text(text)
        print(json.dumps(stats.to_dict()))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args):
    grid = json.loads(Path(args.grid).read_text())
    base = ExperimentConfig.from_dict(grid['base'])
    rows = sweep(base, grid['axes'], cache_dir=args.cache_dir)
    out = json.dumps(rows, indent=1) if args.format == 'json' else _rows_csv(rows, list(grid['axes']))
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out + ('' if out.endswith('\n') else '\n'))
    return EXIT_OK


def _rows_csv(rows, axes):
    cols = ['cell', *axes, 'F', 'mean', 'std', 'stderr', 'min', 'max', 'p50', 'p95', 'p99', 'trials']
    lines = [','.join(cols)]
    for r in rows:
        lines.append(','.join(str(r[c]) for c in cols))
    return '\n'.join(lines) + '\n'


def cmd_bounds(args):
    report = bound_report(args.K, args.N, args.M, args.F, g=args.g, eps=args.eps,
                          target_rate=args.target_rate, placement=args.placement)
    d = report.to_dict()
    if args.format == 'json':
        print(json.dumps(d, indent=1))
    else:
        width = max(map(len, d))
        for key, value in d.items():
            print(f'{key:<{width}}  {value}')
    return EXIT_OK


def cmd_verify(args):
    ok, report = verify_suite(seed=args.seed, count=args.count, equality_K_max=args.equality_K,
                              inject_fault=args.inject_fault)
    print(json.dumps({'ok': ok, 'batteries': report}, indent=1))
    return EXIT_OK if ok else EXIT_BATTERY


def build_parser():
    parser = argparse.ArgumentParser(prog='codedcaching', description=__doc__.splitlines()[0])
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='run one experiment')
    p.add_argument('--config', help='ExperimentConfig JSON file; flags override it')
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('sweep', help='run a grid of experiments')
    p.add_argument('grid', help='JSON file with "base" (ExperimentConfig) and "axes" (field -> values)')
    p.add_argument('--cache-dir', help='directory for resumable per-cell results')
    p.add_argument('--out')
    p.add_argument('--format', choices=['csv', 'json'], default='csv')
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('bounds', help='evaluate closed-form rates and bounds')
    p.add_argument('--K', type=int, required=True)
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--M', type=Fraction, required=True)
    p.add_argument('--F', type=int, required=True)
    p.add_argument('--g', type=int)
    p.add_argument('--eps', type=float, default=0.1)
    p.add_argument('--target-rate', type=float)
    p.add_argument('--placement', choices=['new', 'old'], default='new')
    p.add_argument('--format', choices=['table', 'json'], default='table')
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser('verify', help='run the property batteries')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--count', type=int, default=100)
    p.add_argument('--equality-K', type=int, default=10)
    p.add_argument('--inject-fault', choices=['drop_clique'])
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InstanceError, TypeError, KeyError, json.JSONDecodeError) as e:
        print(f'invalid config: {e}', file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as e:
        print(f'capability limit: {e}', file=sys.stderr)
        return EXIT_CAPABILITY


if __name__ == '__main__':
    sys.exit(main())
