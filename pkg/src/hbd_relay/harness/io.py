"""CSV results and run manifests."""

import csv
import hashlib
import json
import os

from .. import __version__
from .runner import SweepResult, SweepRow

__all__ = ['CSV_HEADER', 'emit_results', 'read_results', 'file_digest',
           'config_hash', 'write_manifest', 'read_manifest']

CSV_HEADER = ('sweep_var', 'value', 'mode', 'mean_sum_se', 'stderr', 'n',
              'convergence_rate', 'mean_leakage')


def _fmt(x):
    # repr round-trips floats exactly
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_results(result, path):
    """Write one CSV row per (sweep point, mode)."""
    try:
        with open(path, 'w', newline='') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow(CSV_HEADER)
            for r in result.rows:
                w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    except OSError as exc:
        raise OSError(f'cannot write results to {path}: {exc}') from exc
    return path


def _parse_value(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_results(path, scenario=None):
    with open(path, newline='') as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f'{path}: unexpected CSV header {reader.fieldnames}')
        rows = [SweepRow(sweep_var=d['sweep_var'], value=_parse_value(d['value']),
                         mode=d['mode'], mean_sum_se=float(d['mean_sum_se']),
                         stderr=float(d['stderr']), n=int(d['n']),
                         convergence_rate=float(d['convergence_rate']),
                         mean_leakage=float(d['mean_leakage']))
                for d in reader]
    name = scenario or os.path.splitext(os.path.basename(path))[0]
    return SweepResult(scenario=name, rows=rows)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, 'rb') as fh:
        h.update(fh.read())
    return h.hexdigest()


def config_hash(scenarios):
    blob = json.dumps([s.to_dict() for s in scenarios], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(path, scenarios, outputs):
    """
    Record everything needed to re-run a simulation bit-exactly.

    ``outputs`` maps CSV file names (relative to the manifest) to digests.
    """
    manifest = {
        'library': 'hbd_relay',
        'version': __version__,
        'config_hash': config_hash(scenarios),
        'seeds': sorted({s.base.seed for s in scenarios}),
        'scenarios': [s.to_dict() for s in scenarios],
        'outputs': outputs,
    }
    with open(path, 'w') as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def read_manifest(path):
    from .runner import Scenario
    with open(path) as fh:
        manifest = json.load(fh)
    scenarios = [Scenario.from_dict(d) for d in manifest['scenarios']]
    if config_hash(scenarios) != manifest['config_hash']:
        raise ValueError(f'{path}: config hash does not match recorded scenarios')
    return manifest, scenarios
