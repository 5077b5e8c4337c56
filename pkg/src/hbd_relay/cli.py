"""
Command line entry point.

    hbd-relay simulate --scenario fig2 --realizations 200 --out results/
    hbd-relay check --invariants
    hbd-relay replay --manifest results/manifest.json
"""

import argparse
import dataclasses
import logging
import os
import sys

from .harness.invariants import run_invariants
from .harness.io import emit_results, file_digest, read_manifest, write_manifest
from .harness.runner import run_sweep
from .harness.scenarios import PRESETS, load_scenarios, preset
from .model import ConfigError

log = logging.getLogger('hbd_relay')

MANIFEST = 'manifest.json'


def _resolve(args):
    if args.scenario in PRESETS:
        scenarios = preset(args.scenario, args.realizations)
    elif os.path.isfile(args.scenario):
        scenarios = load_scenarios(args.scenario)
    else:
        raise SystemExit(f'--scenario: {args.scenario!r} is neither a preset '
                         f'({", ".join(sorted(PRESETS))}) nor a file')
    out = []
    for s in scenarios:
        changes = {}
        if args.realizations:
            changes['realizations'] = args.realizations
        if args.modes:
            changes['modes'] = tuple(args.modes.split(','))
        if args.seed is not None:
            changes['base'] = s.base.replace(seed=args.seed)
        out.append(dataclasses.replace(s, **changes))
    return out


def _execute(scenarios, out_dir, workers):
    os.makedirs(out_dir, exist_ok=True)
    outputs = {}
    for s in scenarios:
        log.info('running %s: %s over %s, %d realizations, modes %s', s.name,
                 s.sweep_var, list(s.values), s.realizations, ','.join(s.modes))
        result = run_sweep(s, workers=workers)
        path = os.path.join(out_dir, f'{s.name}.csv')
        emit_results(result, path)
        outputs[f'{s.name}.csv'] = file_digest(path)
        for r in result.rows:
            log.info('  %s=%s %-8s SE=%.3f +- %.3f  conv=%.3f', r.sweep_var, r.value,
                     r.mode, r.mean_sum_se, r.stderr, r.convergence_rate)
    return outputs


def cmd_simulate(args):
    scenarios = _resolve(args)
    outputs = _execute(scenarios, args.out, args.workers)
    manifest_path = os.path.join(args.out, MANIFEST)
    write_manifest(manifest_path, scenarios, outputs)
    print(f'wrote {len(outputs)} CSV file(s) and {manifest_path}')
    return 0


def cmd_replay(args):
    manifest, scenarios = read_manifest(args.manifest)
    out_dir = args.out or os.path.join(os.path.dirname(os.path.abspath(args.manifest)),
                                       'replay')
    outputs = _execute(scenarios, out_dir, args.workers)
    status = 0
    for name, digest in manifest['outputs'].items():
        ok = outputs.get(name) == digest
        status |= not ok
        print(f"[{'MATCH' if ok else 'DIFF'}] {name}")
    return status


def cmd_check(args):
    if not args.invariants:
        raise SystemExit('check: nothing selected (use --invariants)')
    results = run_invariants(realizations=args.realizations, seed=args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog='hbd-relay',
        description='Hybrid block-diagonalization two-way relay simulator')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='run a preset or scenario file',
                       parents=[common])
    p.add_argument('--scenario', required=True,
                   help=f'preset name ({", ".join(sorted(PRESETS))}) or JSON file')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--realizations', type=int, default=None)
    p.add_argument('--modes', default=None, help='comma list of hybrid,full_rf')
    p.add_argument('--out', default='results')
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('check', help='audit design invariants on random draws',
                       parents=[common])
    p.add_argument('--invariants', action='store_true')
    p.add_argument('--realizations', type=int, default=50)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser('replay', help='re-run a manifest and compare outputs',
                       parents=[common])
    p.add_argument('--manifest', required=True)
    p.add_argument('--out', default=None)
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(message)s')
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f'config error: {e}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
