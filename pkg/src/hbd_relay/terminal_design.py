"""
User-side baseband processing and the relay amplification factor.

Each receiver whitens its equivalent noise (amplified relay noise plus its
own thermal noise), diagonalizes the whitened channel from its partner with
an SVD and lets the partner water-fill over the resulting eigenmodes.  The
codecs depend on the relay gain ``alpha`` and ``alpha`` depends on the
precoders through the relay power constraint, so both are refined jointly
by a fixed-point iteration (:func:`joint_amplification_design`).

Transmit power convention: ``x_k = sqrt(p_k / N_U) D_k s_k`` with
``trace(D_k D_k^H) = N_U``, so every user spends exactly ``p_k``.  The relay
input covariance therefore carries the same ``p_k / N_U`` factor.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import ContractError, fro_norm, herm
from .model import partner
from .relay_design import DegenerateChannelError

__all__ = ['IllConditionedError', 'UserCodecs', 'AlphaState',
           'noise_covariance', 'whitening_filter', 'waterfill',
           'design_codecs', 'relay_input_covariance', 'relay_transmit_power',
           'amplification_factor', 'joint_amplification_design', 'decode',
           'ALPHA_TOL']

# Early-stop threshold on |alpha_tilde - 1|.
ALPHA_TOL = 1e-6


class IllConditionedError(ArithmeticError):
    def __init__(self, message, cond):
        self.cond = cond
        super().__init__(f'{message} (condition number {cond:.3e})')


@dataclass
class UserCodecs:
    """
    Per-user precoder ``D``, decoder ``Q``, whitening filter ``K_w`` and
    stream powers ``Sigma_bar``.  ``K_z`` is the noise covariance each
    ``K_w`` was designed for, i.e. the one induced by the relay gain of the
    last codec update (one multiplicative correction behind the returned
    ``alpha``).
    """
    D: list
    Q: list
    K_w: list
    Sigma_bar: list
    K_z: list = field(default_factory=list)


@dataclass
class AlphaState:
    alpha: float = 1.0
    iteration: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    @property
    def monotone(self):
        """True when ``|alpha_tilde - 1|`` never increased across iterations."""
        err = np.abs(np.asarray(self.history) - 1.0)
        return bool(np.all(np.diff(err) <= 0.0))


def noise_covariance(H_k, W, sigma_R_sq, sigma_k_sq):
    """
    Covariance of the equivalent noise ``H_k^T W n_R + n_k`` at user ``k``.

    ``K_z = sigma_R^2 (H_k^T W)(H_k^T W)^H + sigma_k^2 I``.
    """
    G = H_k.T @ W
    K_z = sigma_R_sq * (G @ G.conj().T) + sigma_k_sq * np.eye(H_k.shape[1])
    return linalg.hermitian_part(K_z)


def whitening_filter(K_z):
    """
    ``K_w = Sigma_z^{-1/2} U_z^H`` from ``K_z = U_z Sigma_z U_z^H``, so that
    ``K_w K_z K_w^H = I``.  Works on a stack of covariances as well.

    Raises
    ------
    IllConditionedError
        If any covariance is not numerically positive definite.
    """
    w, U = linalg.eigh(K_z)
    w_min = w[..., -1]
    with np.errstate(divide='ignore', invalid='ignore'):
        cond = np.where(w_min > 0, w[..., 0] / w_min, np.inf)
    worst = float(np.max(cond))
    if not worst < 1.0 / linalg.EPS:
        raise IllConditionedError('noise covariance is not positive definite', worst)
    return herm(U / np.sqrt(w)[..., None, :])


def waterfill(gains, budget):
    """
    Maximize ``sum(log(1 + g_i q_i))`` subject to ``sum(q_i) = budget``.

    Returns ``q_i = max(mu - 1/g_i, 0)``.  The water level comes from the
    closed-form active-set solution over gains sorted in decreasing order;
    zero gains are never active.  A 2-D ``gains`` array is solved row by
    row.

    Raises
    ------
    ContractError
        If ``budget <= 0``, a gain is negative, or a row has no positive gain.
    """
    g = np.asarray(gains, dtype=float)
    if budget <= 0:
        raise ContractError('water-filling budget must be positive')
    if np.any(g < 0) or not np.all(np.any(g > 0, axis=-1)):
        raise ContractError('water-filling needs nonnegative gains, at least one positive')
    order = np.argsort(-g, axis=-1, kind='stable')
    g_sorted = np.take_along_axis(g, order, axis=-1)
    with np.errstate(divide='ignore', invalid='ignore'):
        inv = np.where(g_sorted > 0, 1.0 / g_sorted, np.inf)
        n = np.arange(1, g.shape[-1] + 1)
        levels = (budget + np.cumsum(inv, axis=-1)) / n
        # feasibility of the first n streams is a prefix property
        n_active = np.sum(levels > inv, axis=-1, keepdims=True)
        mu = np.take_along_axis(levels, n_active - 1, axis=-1)
        q_sorted = np.where(n <= n_active, mu - inv, 0.0)
    q = np.empty_like(q_sorted)
    np.put_along_axis(q, order, q_sorted, axis=-1)
    return q


def design_codecs(H_eff, K_w, alpha, p_tx, N_U, M_D):
    """
    SVD codecs for one link (or a stack of links along leading axes).

    Parameters
    ----------
    H_eff : ndarray, (..., N_U, N_U)
        Self-interference-free channel ``H_{k',k}`` from the transmitter
        ``k`` to the receiver ``k'`` (without ``alpha``).
    K_w : ndarray, (..., N_U, N_U)
        Whitening filter of the receiver.
    alpha : float
    p_tx : float or ndarray (...,)
        Transmit power of user ``k``.

    Returns
    -------
    D : (..., N_U, M_D) precoder of the transmitter
    Q : (..., M_D, N_U) decoder of the receiver
    Sigma_bar : (..., M_D) stream powers, summing to ``N_U``
    """
    H_hat = alpha * (K_w @ H_eff)
    U, S, V = linalg.svd(H_hat, full_matrices=True)
    n = min(M_D, S.shape[-1])
    s = np.zeros(S.shape[:-1] + (M_D,))
    s[..., :n] = S[..., :n]
    tol = linalg.rank_tol(H_hat.shape[-2:], S[..., :1])
    s[s <= tol] = 0.0
    if not np.all(np.any(s > 0, axis=-1)):
        raise DegenerateChannelError('effective pair channel is zero')
    gains = (np.asarray(p_tx, dtype=float)[..., None] / N_U) * s ** 2
    powers = waterfill(gains, float(N_U))
    D = V[..., :M_D] * np.sqrt(powers)[..., None, :]
    Q = herm(U[..., :M_D]) @ K_w
    return D, Q, powers


def relay_input_covariance(channels, D_all, p, N_U, sigma_R_sq):
    """``sum_k (p_k/N_U) H_k D_k D_k^H H_k^H + sigma_R^2 I``."""
    N_R = channels.H.shape[0]
    C = sigma_R_sq * np.eye(N_R, dtype=complex)
    for H_k, D_k, p_k in zip(channels.H_k, D_all, p):
        X = H_k @ D_k
        C += (p_k / N_U) * (X @ X.conj().T)
    return C


def relay_transmit_power(W, channels, D_all, cfg):
    """``trace(E[x_R x_R^H])`` for relay matrix ``W``."""
    total = cfg.sigma_R_sq * fro_norm(W) ** 2
    for H_k, D_k, p_k in zip(channels.H_k, D_all, cfg.p):
        total += (p_k / cfg.N_U) * fro_norm(W @ (H_k @ D_k)) ** 2
    return total


def amplification_factor(W, channels, D_all, cfg):
    """Gain that scales ``W`` onto the relay power budget ``P_R``."""
    power = relay_transmit_power(W, channels, D_all, cfg)
    if not power > 0:
        raise DegenerateChannelError('relay forwards no power')
    return float(np.sqrt(cfg.P_R / power))


def joint_amplification_design(cfg, channels, relay, tol=ALPHA_TOL):
    """
    Alternate between user codecs and the relay amplification factor.

    Starting from ``alpha = 1``, each iteration designs every ``D_k``/``Q_k``
    for the current ``W = alpha W_tilde``, computes the correction
    ``alpha_tilde`` that meets the relay power budget, and multiplies it
    into ``alpha``.  Stops after ``cfg.N_max`` iterations or once
    ``|alpha_tilde - 1| < tol``; hitting the cap is reported through
    ``AlphaState.converged`` and is not an error.

    Returns
    -------
    state : AlphaState
    codecs : UserCodecs
    """
    H, N_U, M_D = channels.H, cfg.N_U, cfg.M_D
    n_users = channels.n_users
    N_R = H.shape[0]
    tx = np.array([partner(k) for k in range(n_users)])
    W_t = relay.W_tilde
    # everything below is linear in alpha, so precompute with W_tilde
    G = (H.T @ W_t).reshape(n_users, N_U, N_R)
    GGh = G @ herm(G)
    H_hat = (G.reshape(-1, N_R) @ H).reshape(n_users, N_U, n_users, N_U)
    # H_link[rx] is the channel from partner(rx) to rx
    H_link = H_hat[np.arange(n_users), :, tx, :]
    WH = (W_t @ H).reshape(N_R, n_users, N_U).transpose(1, 0, 2)
    w_norm_sq = fro_norm(W_t) ** 2
    p = cfg.user_powers
    eye = np.eye(N_U)
    noise = cfg.user_noise[:, None, None] * eye

    state = AlphaState(alpha=1.0)
    for n in range(1, cfg.N_max + 1):
        a = state.alpha
        K_z = linalg.hermitian_part(cfg.sigma_R_sq * a ** 2 * GGh + noise)
        K_w = whitening_filter(K_z)
        D_rx, Q, Sigma_rx = design_codecs(H_link, K_w, a, p[tx], N_U, M_D)
        # D_rx[rx] belongs to the transmitter partner(rx)
        D, Sigma_bar = D_rx[tx], Sigma_rx[tx]
        X = WH @ D
        power = a ** 2 * (cfg.sigma_R_sq * w_norm_sq
                          + np.sum((p / N_U) * np.sum(np.abs(X) ** 2, axis=(1, 2))))
        if not power > 0:
            raise DegenerateChannelError('relay forwards no power')
        a_tilde = float(np.sqrt(cfg.P_R / power))
        state.alpha = a * a_tilde
        state.iteration = n
        state.history.append(a_tilde)
        if abs(a_tilde - 1.0) < tol:
            state.converged = True
            break
    return state, UserCodecs(D=list(D), Q=list(Q), K_w=list(K_w),
                             Sigma_bar=list(Sigma_bar), K_z=list(K_z))


def decode(Q, y):
    """Symbol estimate ``Q y``; ``y`` may hold one received vector per column."""
    return Q @ y
