import csv
import dataclasses
import json

import numpy as np
import pytest

from hbd_relay import cli
from hbd_relay.harness import runner
from hbd_relay.harness.invariants import run_invariants
from hbd_relay.harness.io import (CSV_HEADER, emit_results, read_manifest,
                                  read_results, write_manifest)
from hbd_relay.harness.runner import (Scenario, design_and_evaluate, point_config,
                                      run_realization, run_sweep, signal_path_check)
from hbd_relay.harness.scenarios import dump_scenarios, load_scenarios, preset
from hbd_relay.linalg import ContractError
from hbd_relay.model import (ConfigError, SystemConfig, draw_channels, from_snr_db,
                             realization_rng)
from hbd_relay.relay_design import DegenerateChannelError


def _small_scenario(realizations=6, **kw):
    base = SystemConfig(K=2, N_U=2, M_D=2, N_R=16, seed=3)
    params = dict(name='small', base=base, sweep_var='snr_db', values=(0, 20),
                  realizations=realizations)
    params.update(kw)
    return Scenario(**params)


# -- single realization ------------------------------------------------------

def test_reference_realization(cfg_ref):
    res = run_realization(cfg_ref, 'hybrid', 0)
    assert np.isfinite(res.sum_se) and res.sum_se > 0
    assert res.diagnostics['leakage'] < 1e-9
    assert res.per_user_se.shape == (8,)
    assert res.sum_se == pytest.approx(res.per_user_se.sum())


def test_realization_is_deterministic(cfg_ref):
    a = run_realization(cfg_ref, 'hybrid', 4)
    b = run_realization(cfg_ref, 'hybrid', 4)
    assert a.per_user_se.tobytes() == b.per_user_se.tobytes()
    assert a.diagnostics == b.diagnostics


def test_modes_share_channels(cfg_ref):
    a = run_realization(cfg_ref, 'hybrid', 9)
    b = run_realization(cfg_ref, 'full_rf', 9)
    assert a.diagnostics['channel_digest'] == b.diagnostics['channel_digest']


def test_full_rf_beats_hybrid_paired(cfg_ref):
    n = 100
    wins = sum(run_realization(cfg_ref, 'full_rf', i).sum_se
               >= run_realization(cfg_ref, 'hybrid', i).sum_se for i in range(n))
    assert wins >= 0.9 * n


def test_invalid_config_rejected():
    with pytest.raises(ConfigError) as err:
        run_realization(SystemConfig(M_D=4, M_R=3), 'hybrid', 0)
    assert len(err.value.errors) >= 2


# -- signal-level path -------------------------------------------------------

def test_signal_path_noiseless_residuals():
    for K in (2, 4):
        cfg = from_snr_db(20.0, K=K, N_U=2, M_D=2, N_R=64)
        for index in range(5):
            r = signal_path_check(cfg, index)
            assert r['max_interpair_ratio'] <= 1e-8
            assert r['max_self_ratio'] <= 1e-8
            assert np.all(r['desired_power'] > 0)
            np.testing.assert_allclose(r['received_power'], r['predicted_power'], rtol=0.5)


def test_signal_path_noise_power_budget():
    cfg = from_snr_db(10.0, K=2, N_U=2, M_D=2, N_R=32)
    r = signal_path_check(cfg, 0, n_symbols=10_000, noise=True)
    np.testing.assert_allclose(r['received_power'], r['predicted_power'], rtol=0.05)


def test_signal_path_zero_symbols():
    cfg = from_snr_db(20.0, K=2, N_U=2, M_D=2, N_R=32)
    r = signal_path_check(cfg, 0, zero_symbols=True)
    np.testing.assert_array_equal(r['desired_power'], 0.0)
    np.testing.assert_array_equal(r['interpair_ratio'], 0.0)
    np.testing.assert_array_equal(r['received_power'], 0.0)


def test_decoded_streams_have_positive_real_gains():
    cfg = from_snr_db(30.0, K=2, N_U=2, M_D=2, N_R=32)
    r = signal_path_check(cfg, 1, n_symbols=64)
    for G in r['decoder_gain']:
        d = np.diag(G)
        assert np.max(np.abs(G - np.diag(d))) <= 1e-8 * np.abs(d).max()
        assert np.all(np.abs(d.imag) <= 1e-8 * np.abs(d).max())
        assert np.all(d.real > 0)


# -- sweeps ------------------------------------------------------------------

def test_point_config():
    base = SystemConfig(K=2)
    cfg = point_config(base, 'snr_db', 20)
    assert cfg.P_R == pytest.approx(100.0) and cfg.p[0] == pytest.approx(100.0)
    assert point_config(base, 'K', 3).M_R == 12
    with pytest.raises(ContractError):
        point_config(base, 'beta', 0.2)


def test_sweep_rows_and_common_random_numbers():
    s = _small_scenario()
    res = run_sweep(s)
    assert len(res.rows) == len(s.values) * len(s.modes)
    assert all(r.n == s.realizations for r in res.rows)
    assert res.means('hybrid').shape == (2,)
    # realization i of the sweep is realization i of the single-shot pipeline
    cfg = point_config(s.base, 'snr_db', 20)
    for mode in s.modes:
        expected = [run_realization(cfg, mode, i).sum_se for i in range(s.realizations)]
        np.testing.assert_array_equal(res.samples[(20, mode)], expected)
    row = res.row(20, 'hybrid')
    assert row.stderr == pytest.approx(np.std(res.samples[(20, 'hybrid')], ddof=1)
                                       / np.sqrt(s.realizations))


def test_sweep_worker_count_does_not_matter():
    s = _small_scenario(realizations=8)
    a, b = run_sweep(s, workers=1), run_sweep(s, workers=2)
    assert a.rows == b.rows


def test_sweep_invalid_scenario():
    with pytest.raises(ConfigError):
        run_sweep(_small_scenario(values=(1, 4), sweep_var='M_D'))


def test_sweep_resamples_then_marks_invalid(monkeypatch):
    real = runner.design_and_evaluate
    calls = {'n': 0}

    def sometimes(cfg, channels, mode, relay=None):
        calls['n'] += 1
        if calls['n'] == 1:
            raise DegenerateChannelError('forced')
        return real(cfg, channels, mode, relay)

    monkeypatch.setattr(runner, 'design_and_evaluate', sometimes)
    res = run_sweep(_small_scenario(realizations=2))
    assert res.resamples == 1 and all(r.n == 2 for r in res.rows)

    def never(*a, **k):
        raise DegenerateChannelError('forced')

    monkeypatch.setattr(runner, 'design_and_evaluate', never)
    res = run_sweep(_small_scenario(realizations=2))
    assert all(r.n == 0 and np.isnan(r.mean_sum_se) for r in res.rows)


def test_design_and_evaluate_reuses_relay(cfg_ref, channels_ref):
    res, relay, _ = design_and_evaluate(cfg_ref, channels_ref, 'hybrid')
    res2, _, _ = design_and_evaluate(cfg_ref, channels_ref, 'hybrid',
                                     dataclasses.replace(relay, alpha=1.0))
    assert res.sum_se == res2.sum_se


# -- scenarios, CSV and manifest ---------------------------------------------

def test_presets_are_valid():
    for name in ('fig2', 'fig3', 'fig4', 'fig5', 'ci'):
        for s in preset(name, 10):
            assert s.errors() == [], s.name
    with pytest.raises(KeyError):
        preset('fig9')


def test_scenario_file_roundtrip(tmp_path):
    scenarios = preset('fig5', 7)
    path = tmp_path / 's.json'
    dump_scenarios(scenarios, path)
    assert load_scenarios(path) == scenarios
    single = tmp_path / 'one.json'
    single.write_text(json.dumps(scenarios[0].to_dict()))
    assert load_scenarios(single) == scenarios[:1]


def test_csv_roundtrip(tmp_path):
    res = run_sweep(_small_scenario(realizations=3))
    path = tmp_path / 'small.csv'
    emit_results(res, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + len(res.rows)
    back = read_results(path)
    assert back.rows == res.rows and back.scenario == 'small'


def test_csv_write_error_has_path(tmp_path):
    res = run_sweep(_small_scenario(realizations=2))
    bad = tmp_path / 'missing' / 'x.csv'
    with pytest.raises(OSError, match='missing'):
        emit_results(res, bad)


def test_manifest_detects_tampering(tmp_path):
    s = [_small_scenario(realizations=2)]
    path = tmp_path / 'manifest.json'
    write_manifest(path, s, {})
    manifest, back = read_manifest(path)
    assert back == s and manifest['seeds'] == [3]
    data = json.loads(path.read_text())
    data['scenarios'][0]['realizations'] = 5
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError, match='config hash'):
        read_manifest(path)


def test_invariant_audit_passes():
    results = run_invariants(realizations=10)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


# -- command line ------------------------------------------------------------

def test_cli_simulate_and_replay(tmp_path, capsys):
    scen = tmp_path / 'scen.json'
    dump_scenarios([_small_scenario(realizations=4)], scen)
    out = tmp_path / 'run'
    assert cli.main(['simulate', '--scenario', str(scen), '--out', str(out)]) == 0
    assert (out / 'small.csv').exists() and (out / 'manifest.json').exists()
    assert cli.main(['replay', '--manifest', str(out / 'manifest.json'),
                     '--out', str(tmp_path / 'again'), '--workers', '2']) == 0
    assert '[MATCH] small.csv' in capsys.readouterr().out
    assert (out / 'small.csv').read_bytes() == (tmp_path / 'again' / 'small.csv').read_bytes()


def test_cli_replay_reports_diff(tmp_path, capsys):
    out = tmp_path / 'run'
    cli.main(['simulate', '--scenario', 'ci', '--realizations', '2',
              '--modes', 'hybrid', '--out', str(out)])
    manifest = json.loads((out / 'manifest.json').read_text())
    manifest['outputs']['ci.csv'] = '0' * 64
    (out / 'manifest.json').write_text(json.dumps(manifest))
    assert cli.main(['replay', '--manifest', str(out / 'manifest.json')]) == 1
    assert '[DIFF] ci.csv' in capsys.readouterr().out


def test_cli_seed_override(tmp_path):
    out = tmp_path / 'run'
    cli.main(['simulate', '--scenario', 'ci', '--realizations', '2', '--seed', '42',
              '--modes', 'hybrid', '--out', str(out)])
    assert json.loads((out / 'manifest.json').read_text())['seeds'] == [42]


def test_cli_config_errors(tmp_path, capsys):
    bad = _small_scenario(base=SystemConfig(K=2, N_U=2, M_D=4, N_R=16))
    path = tmp_path / 'bad.json'
    dump_scenarios([bad], path)
    assert cli.main(['simulate', '--scenario', str(path), '--out', str(tmp_path)]) == 2
    assert 'M_D exceeds N_U' in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(['simulate', '--scenario', 'nope'])


def test_cli_check_invariants(capsys):
    assert cli.main(['check', '--invariants', '--realizations', '5', '-v']) == 0
    out = capsys.readouterr().out
    assert out.count('[PASS]') == 9
