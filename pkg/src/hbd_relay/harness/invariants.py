"""
Quick property audit of the design chain over random realizations.

Used by ``hbd-relay check --invariants``.  Each check returns the worst
observed value and compares it with a fixed bound.
"""

from dataclasses import dataclass

import numpy as np

from .. import linalg
from ..model import draw_channels, from_snr_db, realization_rng
from ..relay_design import (anomax_matrix, anomax_objective, design_relay,
                            interpair_leakage)
from ..terminal_design import (joint_amplification_design, relay_transmit_power,
                               noise_covariance, waterfill)

__all__ = ['CheckResult', 'run_invariants']


@dataclass
class CheckResult:
    name: str
    worst: float
    bound: float
    higher_is_worse: bool = True

    @property
    def passed(self):
        return self.worst <= self.bound if self.higher_is_worse else self.worst >= self.bound

    def line(self):
        op = '<=' if self.higher_is_worse else '>='
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: "
                f'worst {self.worst:.3e} {op} {self.bound:.1e}')


def _waterfill_kkt(rng, trials=200):
    worst = 0.0
    for _ in range(trials):
        g = rng.exponential(size=rng.integers(1, 6))
        budget = rng.uniform(0.1, 10.0)
        q = waterfill(g, budget)
        active = q > 0
        levels = q[active] + 1.0 / g[active]
        mu = levels.mean()
        worst = max(worst, float(np.ptp(levels)), abs(q.sum() - budget) / budget)
        # inactive streams must sit above the water level
        if np.any(~active):
            worst = max(worst, float(np.max(mu - 1.0 / g[~active])), 0.0)
    return worst


def run_invariants(realizations=50, seed=0, snr_db=20.0, N_R=64):
    """Run every check; returns a list of :class:`CheckResult`."""
    cfg = from_snr_db(snr_db, K=4, N_U=2, M_D=2, N_R=N_R, seed=seed)
    worst = dict.fromkeys(['modulus', 'leakage', 'anomax', 'svd', 'whiten',
                           'relay_power', 'user_power'], 0.0)
    converged = 0
    for i in range(realizations):
        ch = draw_channels(cfg, realization_rng(seed, i))
        relay = design_relay(ch, cfg.beta, 'hybrid')
        worst['modulus'] = max(worst['modulus'], float(np.max(
            np.abs(np.abs(relay.F_r) - 1.0 / np.sqrt(cfg.N_R)))))
        worst['leakage'] = max(worst['leakage'], interpair_leakage(relay, ch))

        H_E = relay.F_r @ ch.H
        for m, B in enumerate(relay.blocks):
            a, b = H_E[:, 2 * m * cfg.N_U:(2 * m + 1) * cfg.N_U], \
                H_E[:, (2 * m + 1) * cfg.N_U:(2 * m + 2) * cfg.N_U]
            L = anomax_matrix(B, B.T, a, b, cfg.beta)
            s_max = np.linalg.svd(L, compute_uv=False)[0]
            J = anomax_objective(relay.T_blocks[m], B, B.T, a, b, cfg.beta)
            worst['anomax'] = max(worst['anomax'], abs(J - s_max) / s_max)

        U, S, V = linalg.svd(ch.H, full_matrices=False)
        worst['svd'] = max(worst['svd'], linalg.fro_norm(ch.H - (U * S) @ V.conj().T)
                           / linalg.fro_norm(ch.H))

        state, codecs = joint_amplification_design(cfg, ch, relay)
        converged += state.converged
        W = state.alpha * relay.W_tilde
        alpha_design = state.alpha / state.history[-1]
        for k in range(ch.n_users):
            K_z = noise_covariance(ch.H_k[k], alpha_design * relay.W_tilde,
                                   cfg.sigma_R_sq, cfg.user_noise[k])
            Kw = codecs.K_w[k]
            worst['whiten'] = max(worst['whiten'], linalg.fro_norm(
                Kw @ K_z @ Kw.conj().T - np.eye(cfg.N_U)))
            worst['user_power'] = max(worst['user_power'], float(np.real(
                np.trace(codecs.D[k] @ codecs.D[k].conj().T))) - cfg.N_U)
        P = relay_transmit_power(W, ch, codecs.D, cfg)
        worst['relay_power'] = max(worst['relay_power'], abs(P - cfg.P_R) / cfg.P_R)

    return [
        CheckResult('constant-modulus analog beamformer', worst['modulus'], 1e-15),
        CheckResult('inter-pair leakage', worst['leakage'], 1e-9),
        CheckResult('pair amplification optimality gap', worst['anomax'], 1e-9),
        CheckResult('SVD reconstruction (relative)', worst['svd'], 1e-9),
        CheckResult('whitening identity', worst['whiten'], 1e-8),
        CheckResult('relay power (relative error)', worst['relay_power'], 1e-5),
        CheckResult('user power excess', worst['user_power'], 1e-9),
        CheckResult('alpha iteration convergence rate', converged / realizations,
                    0.95, higher_is_worse=False),
        CheckResult('water-filling KKT residual',
                    _waterfill_kkt(np.random.default_rng(seed)), 1e-10),
    ]
