"""Monte-Carlo execution: single realizations, signal-level checks, sweeps."""

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..linalg import ContractError, NumericalError, fro_norm
from ..metrics import SimulationResult, all_user_se, sum_se
from ..model import ConfigError, draw_channels, partner, realization_rng, validate
from ..relay_design import DegenerateChannelError, design_relay, interpair_leakage
from ..terminal_design import IllConditionedError, joint_amplification_design

__all__ = ['Scenario', 'SweepRow', 'SweepResult', 'SWEEP_VARS', 'MAX_RESAMPLES',
           'design_and_evaluate', 'run_realization', 'signal_path_check',
           'run_sweep', 'point_config']

log = logging.getLogger(__name__)

SWEEP_VARS = ('snr_db', 'N_R', 'K', 'M_D')
MAX_RESAMPLES = 3

# failures that trigger a redraw of the channel realization
DESIGN_FAILURES = (DegenerateChannelError, IllConditionedError, NumericalError)


def point_config(base, var, value):
    """Configuration of one sweep point."""
    if var == 'snr_db':
        snr = 10.0 ** (float(value) / 10.0)
        return base.replace(p=snr, P_R=snr)
    if var in ('N_R', 'K', 'M_D'):
        return base.replace(**{var: int(value)})
    raise ContractError(f'cannot sweep {var!r}; choose from {SWEEP_VARS}')


def design_and_evaluate(cfg, channels, mode, relay=None):
    """
    Run relay design, the joint alpha/codec iteration and SE evaluation.

    Returns
    -------
    result : SimulationResult
    relay : RelayDesign
        With the final ``alpha`` applied.
    codecs : UserCodecs
    """
    if relay is None:
        relay = design_relay(channels, cfg.beta, mode)
    state, codecs = joint_amplification_design(cfg, channels, relay)
    relay = _with_alpha(relay, state.alpha)
    gammas, regularized = all_user_se(relay.W, channels, codecs.D, codecs.Q, cfg)
    diagnostics = {
        'alpha': state.alpha,
        'converged': state.converged,
        'iterations': state.iteration,
        'alpha_history': list(state.history),
        'leakage': interpair_leakage(relay, channels),
        'regularized': regularized,
        'channel_digest': channels.digest(),
        'mode': mode,
    }
    result = SimulationResult(per_user_se=gammas, sum_se=sum_se(gammas),
                              diagnostics=diagnostics)
    return result, relay, codecs


def _with_alpha(relay, alpha):
    return dataclasses.replace(relay, alpha=alpha)


def _check(cfg, mode):
    errors = validate(cfg, mode)
    if errors:
        raise ConfigError(errors)


def run_realization(cfg, mode, realization_index, attempt=0):
    """End-to-end pipeline for one channel draw; deterministic in ``(seed, index, mode)``."""
    _check(cfg, mode)
    channels = draw_channels(cfg, realization_rng(cfg.seed, realization_index, attempt))
    result, _, _ = design_and_evaluate(cfg, channels, mode)
    result.realization_index = realization_index
    return result


def signal_path_check(cfg, realization_index, mode='hybrid', n_symbols=64,
                      noise=False, rng=None, zero_symbols=False):
    """
    Push actual symbol vectors through the two-phase relay link.

    Every user transmits ``x_k = sqrt(p_k/N_U) D_k s_k``; the relay forwards
    ``W y_R``; each user removes its own echo using the known self channel
    ``H_k^T W H_k``.  The residual after removing the partner's desired
    signal (and, with noise on, the noise) is what is left of the inter-pair
    interference.

    Returns
    -------
    dict
        Per-user arrays ``desired_power``, ``interpair_ratio``,
        ``self_ratio``, ``received_power``, ``predicted_power``, the
        worst-case ratios ``max_interpair_ratio``/``max_self_ratio`` and
        ``decoder_gain``: per receiver, the ``M_D x M_D`` least-squares map
        from the partner's symbols to the decoder output.
    """
    _check(cfg, mode)
    channels = draw_channels(cfg, realization_rng(cfg.seed, realization_index))
    _, relay, codecs = design_and_evaluate(cfg, channels, mode)
    if rng is None:
        rng = np.random.default_rng([cfg.seed, realization_index, 7])

    N_U, N_R, n_users = cfg.N_U, cfg.N_R, channels.n_users
    W, alpha = relay.W, relay.alpha
    p = cfg.user_powers

    def cn(*shape):
        z = rng.standard_normal(shape + (2,))
        return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)

    s = cn(n_users, cfg.M_D, n_symbols)
    if zero_symbols:
        s[:] = 0.0
    x = [np.sqrt(p[k] / N_U) * codecs.D[k] @ s[k] for k in range(n_users)]
    n_R = np.sqrt(cfg.sigma_R_sq) * cn(N_R, n_symbols) if noise else 0.0

    y_R = sum(H_k @ x_k for H_k, x_k in zip(channels.H_k, x)) + n_R
    x_R = W @ y_R

    decoder_gain = []
    out = {key: np.zeros(n_users) for key in (
        'desired_power', 'interpair_ratio', 'self_ratio', 'received_power',
        'predicted_power')}
    for rx in range(n_users):
        tx = partner(rx)
        H_rx = channels.H_k[rx]
        n_rx = np.sqrt(cfg.user_noise[rx]) * cn(N_U, n_symbols) if noise else 0.0
        y = H_rx.T @ x_R + n_rx
        # self-interference removal with the known self channel
        H_self = H_rx.T @ relay.W_tilde @ H_rx
        y_tilde = y - alpha * H_self @ x[rx]
        desired = alpha * (H_rx.T @ relay.W_tilde @ channels.H_k[tx]) @ x[tx]
        noise_part = (H_rx.T @ W @ n_R + n_rx) if noise else 0.0
        interpair = y_tilde - desired - noise_part
        self_residual = H_rx.T @ W @ (channels.H_k[rx] @ x[rx]) - alpha * H_self @ x[rx]

        if not zero_symbols:
            # least-squares fit of s_hat = G s over the symbol block
            s_hat = codecs.Q[rx] @ y_tilde
            decoder_gain.append(s_hat @ np.linalg.pinv(s[tx]))

        d_pow = np.mean(np.sum(np.abs(desired) ** 2, axis=0))
        out['desired_power'][rx] = d_pow
        ref = d_pow if d_pow > 0 else 1.0
        out['interpair_ratio'][rx] = np.mean(np.sum(np.abs(interpair) ** 2, axis=0)) / ref
        out['self_ratio'][rx] = np.mean(np.sum(np.abs(self_residual) ** 2, axis=0)) / ref
        out['received_power'][rx] = np.mean(np.sum(np.abs(y_tilde) ** 2, axis=0))
        G = H_rx.T @ W
        H_link = alpha * H_rx.T @ relay.W_tilde @ channels.H_k[tx]
        out['predicted_power'][rx] = (
            (p[tx] / N_U) * fro_norm(H_link @ codecs.D[tx]) ** 2
            + (cfg.sigma_R_sq * fro_norm(G) ** 2 + cfg.user_noise[rx] * N_U if noise else 0.0))
    out['max_interpair_ratio'] = float(out['interpair_ratio'].max())
    out['max_self_ratio'] = float(out['self_ratio'].max())
    out['decoder_gain'] = decoder_gain
    return out


@dataclass(frozen=True)
class Scenario:
    """
    One curve family: ``base`` config swept over ``values`` of ``sweep_var``.

    ``name`` doubles as the CSV file stem.
    """
    name: str
    base: object
    sweep_var: str
    values: tuple
    realizations: int = 1000
    modes: tuple = ('hybrid', 'full_rf')

    def points(self):
        return [point_config(self.base, self.sweep_var, v) for v in self.values]

    def errors(self):
        errs = []
        if self.sweep_var not in SWEEP_VARS:
            errs.append(f'unknown sweep variable {self.sweep_var!r}')
            return errs
        if self.realizations < 1:
            errs.append('realizations must be >= 1')
        for v, cfg in zip(self.values, self.points()):
            for mode in self.modes:
                errs.extend(f'{self.sweep_var}={v} ({mode}): {e}'
                            for e in validate(cfg, mode))
        return errs

    def to_dict(self):
        return {'name': self.name, 'base': self.base.to_dict(),
                'sweep_var': self.sweep_var, 'values': list(self.values),
                'realizations': self.realizations, 'modes': list(self.modes)}

    @classmethod
    def from_dict(cls, d):
        from ..model import SystemConfig
        return cls(name=d['name'], base=SystemConfig.from_dict(d['base']),
                   sweep_var=d['sweep_var'], values=tuple(d['values']),
                   realizations=int(d.get('realizations', 1000)),
                   modes=tuple(d.get('modes', ('hybrid', 'full_rf'))))


@dataclass
class SweepRow:
    sweep_var: str
    value: float
    mode: str
    mean_sum_se: float
    stderr: float
    n: int
    convergence_rate: float
    mean_leakage: float


@dataclass
class SweepResult:
    """
    Aggregated sweep.  ``samples[(value, mode)]`` keeps the per-realization
    sum-SE in realization order (not serialized).
    """
    scenario: str
    rows: list
    samples: dict = field(default_factory=dict, repr=False)
    resamples: int = 0

    def row(self, value, mode):
        for r in self.rows:
            if r.value == value and r.mode == mode:
                return r
        raise KeyError((value, mode))

    def means(self, mode):
        return np.array([r.mean_sum_se for r in self.rows if r.mode == mode])


def _realization_task(args):
    """All sweep points and modes of one realization index."""
    scenario, index = args
    out = []
    designs = {}
    for cfg in scenario.points():
        dims = (cfg.N_R, cfg.K, cfg.N_U)
        record = None
        for attempt in range(MAX_RESAMPLES + 1):
            channels = draw_channels(cfg, realization_rng(cfg.seed, index, attempt))
            try:
                record = []
                for mode in scenario.modes:
                    # relay design does not depend on power levels: reuse it
                    key = dims + (mode, attempt, cfg.beta)
                    if key not in designs:
                        designs[key] = design_relay(channels, cfg.beta, mode)
                    res, _, _ = design_and_evaluate(cfg, channels, mode, designs[key])
                    d = res.diagnostics
                    record.append((res.sum_se, d['converged'], d['leakage']))
                break
            except DESIGN_FAILURES as exc:
                log.debug('realization %d attempt %d failed: %s', index, attempt, exc)
                record = None
        out.append((record, attempt))
    return out


def run_sweep(scenario, workers=1):
    """
    Mean sum-SE per sweep point and relay mode.

    All modes (and, for power sweeps, all points) of a realization share
    the same channel draw.  A failing realization is redrawn up to
    ``MAX_RESAMPLES`` times; if it still fails the point is marked invalid
    (NaN mean).  Results are merged in realization order, so they do not
    depend on ``workers``.
    """
    errors = scenario.errors()
    if errors:
        raise ConfigError(errors)
    tasks = [(scenario, i) for i in range(scenario.realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_realization_task, tasks,
                                   chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        chunks = [_realization_task(t) for t in tasks]

    rows, samples = [], {}
    resamples = 0
    for j, value in enumerate(scenario.values):
        records = [chunk[j] for chunk in chunks]
        resamples += sum(attempt for rec, attempt in records if rec is not None)
        invalid = any(rec is None for rec, _ in records)
        for i, mode in enumerate(scenario.modes):
            if invalid:
                rows.append(SweepRow(scenario.sweep_var, value, mode, float('nan'),
                                     float('nan'), 0, float('nan'), float('nan')))
                continue
            se = np.array([rec[i][0] for rec, _ in records])
            conv = np.array([rec[i][1] for rec, _ in records], dtype=float)
            leak = np.array([rec[i][2] for rec, _ in records])
            n = se.size
            stderr = float(se.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            rows.append(SweepRow(scenario.sweep_var, value, mode, float(se.mean()),
                                 stderr, n, float(conv.mean()), float(leak.mean())))
            samples[(value, mode)] = se
    return SweepResult(scenario=scenario.name, rows=rows, samples=samples,
                       resamples=resamples)
