"""Spectral efficiency of the two-way relay link (bps/Hz, log base 2)."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import NumericalError, fro_norm

__all__ = ['SimulationResult', 'user_se', 'user_se_details', 'all_user_se',
           'sum_se', 'SYMMETRY_TOL']

# Relative Hermitian asymmetry tolerated before log-det evaluation.
SYMMETRY_TOL = 1e-8


@dataclass
class SimulationResult:
    per_user_se: np.ndarray
    sum_se: float
    realization_index: int = 0
    diagnostics: dict = field(default_factory=dict)


def _logdet_hpd(A):
    """Natural log-determinant of a Hermitian positive-definite matrix."""
    scale = fro_norm(A)
    if fro_norm(A - A.conj().T) > SYMMETRY_TOL * scale:
        raise NumericalError('log-det argument is not Hermitian')
    L = np.linalg.cholesky(0.5 * (A + A.conj().T))
    return 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))


def user_se_details(k_rx, k_tx, W, channels, D_all, Q_all, cfg,
                    include_interpair=True):
    """
    Spectral efficiency of user ``k_rx`` decoding its partner ``k_tx``.

    Returns
    -------
    gamma : float
        ``0.5 log2 det(I + R^{-1} S)`` with ``S`` the desired-signal
        covariance after the decoder and ``R`` the covariance of inter-pair
        interference, forwarded relay noise and receiver noise.
    regularized : bool
        True if ``R`` was singular and had to be loaded with
        ``1e-12 trace(R)/M_D`` on its diagonal.
    """
    N_U = cfg.N_U
    p = cfg.user_powers
    Q = Q_all[k_rx]
    QG = Q @ channels.H_k[k_rx].T @ W
    A = QG @ (channels.H_k[k_tx] @ D_all[k_tx])
    S = (p[k_tx] / N_U) * (A @ A.conj().T)
    R = cfg.sigma_R_sq * (QG @ QG.conj().T) + cfg.user_noise[k_rx] * (Q @ Q.conj().T)
    if include_interpair:
        for i in range(channels.n_users):
            if i in (k_rx, k_tx):
                continue
            B = QG @ (channels.H_k[i] @ D_all[i])
            R = R + (p[i] / N_U) * (B @ B.conj().T)

    regularized = False
    try:
        logdet_R = _logdet_hpd(R)
    except np.linalg.LinAlgError:
        eps = 1e-12 * float(np.real(np.trace(R))) / R.shape[0]
        R = R + eps * np.eye(R.shape[0])
        logdet_R = _logdet_hpd(R)
        regularized = True
    gamma = 0.5 * (_logdet_hpd(R + S) - logdet_R) / np.log(2.0)
    return max(gamma, 0.0), regularized


def user_se(k_rx, k_tx, W, channels, D_all, Q_all, cfg):
    return user_se_details(k_rx, k_tx, W, channels, D_all, Q_all, cfg)[0]


def all_user_se(W, channels, D_all, Q_all, cfg, include_interpair=True):
    """Per-user SE (index = receiving user) and the regularization flag."""
    out = np.zeros(channels.n_users)
    flagged = False
    for k in range(channels.n_users):
        out[k], reg = user_se_details(k, k ^ 1, W, channels, D_all, Q_all, cfg,
                                      include_interpair)
        flagged |= reg
    return out, flagged


def sum_se(gammas):
    return float(np.sum(gammas))
