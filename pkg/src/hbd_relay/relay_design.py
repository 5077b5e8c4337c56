"""
Relay beamforming chain ``W = alpha * F_t B_t T B_r F_r``.

The analog stage ``F_r`` is an equal-gain combiner (phase-only, constant
modulus ``1/sqrt(N_R)``).  The digital stage ``B_r`` block-diagonalizes the
composite channel so that every user-pair sees no interference from the
other pairs, and each pair's amplification block ``T_m`` maximizes a
weighted Frobenius norm of the two cross-channels of the pair.

Transmit-side matrices follow from TDD reciprocity: ``F_t = F_r^T`` and
``B_t = B_r^T``.

Two relay modes are supported:

``hybrid``
    ``M_R = 2 K N_U`` RF chains behind the EGC analog beamformer.
``full_rf``
    One RF chain per antenna (``F_r = I``).  The pair filter rows are the
    ``2 N_U`` dominant directions of the pair's channels inside the null
    space of the other pairs' channels.  This baseline construction is our
    own choice; only the architecture (fully digital relay) is fixed.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg
from .linalg import ContractError, fro_norm

__all__ = ['DegenerateChannelError', 'RelayDesign', 'MODES',
           'egc_receive_beamformer', 'composite_channel',
           'bd_receive_precoder', 'frr_receive_precoder', 'assemble_digital',
           'anomax_matrix', 'anomax_pair_matrix', 'anomax_objective',
           'effective_pair_channel', 'assemble_relay', 'design_relay',
           'interpair_leakage']

MODES = ('hybrid', 'full_rf')


class DegenerateChannelError(ArithmeticError):
    """Raised when a channel realization leaves a design step ill-defined."""


@dataclass(frozen=True)
class RelayDesign:
    """
    Assembled relay processing chain.

    In ``full_rf`` mode ``F_r``/``F_t`` are identities and ``B_r`` is
    ``2 K N_U x N_R`` (one row block per pair acting directly on the antenna
    signals); otherwise all dimensions are as in the hybrid architecture.
    """
    F_r: np.ndarray
    F_t: np.ndarray
    B_r: np.ndarray
    B_t: np.ndarray
    T: np.ndarray
    W_tilde: np.ndarray
    mode: str = 'hybrid'
    alpha: float = 1.0
    blocks: tuple = field(default=(), repr=False)
    T_blocks: tuple = field(default=(), repr=False)

    @property
    def W(self):
        return self.alpha * self.W_tilde

    def receive_filter(self, m):
        """Combined receive filter ``B_rm F_r`` of pair ``m`` (2N_U x N_R)."""
        return self.blocks[m] @ self.F_r


def egc_receive_beamformer(H):
    """
    Equal-gain-combining analog receive beamformer.

    Parameters
    ----------
    H : ndarray, shape (N_R, M_R)
        Concatenated uplink channel of all users.

    Returns
    -------
    F_r : ndarray, shape (M_R, N_R)
        ``[F_r]_{ij} = exp(1j * angle([H^H]_{ij})) / sqrt(N_R)``.  A zero
        channel entry gets phase 0.
    """
    N_R = H.shape[0]
    return np.exp(1j * np.angle(H.conj().T)) / np.sqrt(N_R)


def composite_channel(F_r, H, N_U):
    """Return ``H_E = F_r H`` and its per-user column blocks ``F_r H_k``."""
    if F_r.shape[1] != H.shape[0]:
        raise ContractError(f'F_r {F_r.shape} does not match H {H.shape}')
    H_E = F_r @ H
    n_users = H.shape[1] // N_U
    return H_E, [H_E[:, k * N_U:(k + 1) * N_U] for k in range(n_users)]


def _other_pairs(H_E, m, N_U):
    cols = np.arange(H_E.shape[1])
    keep = (cols < 2 * m * N_U) | (cols >= 2 * (m + 1) * N_U)
    return H_E[:, keep]


def _left_null_space(A):
    """Orthonormal basis of the left null space of the tall matrix ``A``."""
    U, S, _ = linalg.svd(A, full_matrices=True)
    r = A.shape[1]
    if r == 0:
        return U
    if S[-1] <= linalg.rank_tol(A.shape, S[0]):
        raise DegenerateChannelError(
            f'interference channel is rank deficient (sigma_min={S[-1]:.3e})')
    return U[:, r:]


def bd_receive_precoder(H_E, m, N_U):
    """
    Block-diagonalization receive filter for pair ``m``.

    The rows of the returned ``2N_U x M_R`` matrix are the conjugated last
    ``2N_U`` left singular vectors of the other pairs' composite channel, so
    they null every user outside pair ``m``.

    Raises
    ------
    DegenerateChannelError
        If the other pairs' channel is rank deficient, i.e. the null space
        is larger than ``2 N_U``.
    """
    M_R, n_cols = H_E.shape
    if M_R != n_cols:
        raise ContractError(f'hybrid BD needs M_R == 2KN_U, got H_E {H_E.shape}')
    if n_cols == 2 * N_U:
        return np.eye(M_R, dtype=complex)
    N = _left_null_space(_other_pairs(H_E, m, N_U))
    return N.conj().T


def frr_receive_precoder(H, m, N_U):
    """
    Receive filter of pair ``m`` for the full-RF-chain relay.

    The null space of the other pairs' channels has more than ``2 N_U``
    dimensions here; the rows are the ``2N_U`` strongest directions of the
    pair's own channels projected into it.
    """
    N = _left_null_space(_other_pairs(H, m, N_U))
    pair = H[:, 2 * m * N_U:2 * (m + 1) * N_U]
    U, _, _ = linalg.svd(N.conj().T @ pair, full_matrices=False)
    return (N @ U[:, :2 * N_U]).conj().T


def assemble_digital(blocks):
    """Stack per-pair receive filters into ``B_r``; ``B_t = B_r^T``."""
    B_r = np.vstack(blocks)
    return B_r, B_r.T


def anomax_matrix(B_rm, B_tm, H_a, H_b, beta):
    """
    Kronecker-structured matrix ``L`` whose transpose maps ``vec(T_m)`` to
    the stacked weighted cross-channels of the pair.

    ``L^T vec(T) = [beta vec(H_a^T B_tm T B_rm H_b);
    (1-beta) vec(H_b^T B_tm T B_rm H_a)]`` where ``H_a``/``H_b`` are the
    composite channels of the first/second user of the pair.
    """
    left = B_tm.T
    return np.hstack([beta * np.kron(B_rm @ H_b, left @ H_a),
                      (1.0 - beta) * np.kron(B_rm @ H_a, left @ H_b)])


def anomax_pair_matrix(B_rm, B_tm, H_a, H_b, beta):
    """
    Unit-Frobenius ``T_m`` maximizing the weighted pair cross-channel norm.

    The optimum is the conjugated dominant left singular vector of
    :func:`anomax_matrix`, reshaped column-wise into ``2N_U x 2N_U``.
    """
    if not 0.0 <= beta <= 1.0:
        raise ContractError(f'beta={beta} outside [0, 1]')
    L = anomax_matrix(B_rm, B_tm, H_a, H_b, beta)
    U, S, _ = linalg.svd(L, full_matrices=False)
    if S[0] == 0.0:
        raise DegenerateChannelError('pair channel is identically zero')
    n = B_rm.shape[0]
    return linalg.unvec(U[:, 0].conj(), n, n)


def anomax_objective(T_m, B_rm, B_tm, H_a, H_b, beta):
    """Weighted pair norm ``sqrt(b^2 |H_ab|^2 + (1-b)^2 |H_ba|^2)``."""
    h_ab = effective_pair_channel(H_a, H_b, B_tm, T_m, B_rm)
    h_ba = effective_pair_channel(H_b, H_a, B_tm, T_m, B_rm)
    return np.sqrt(beta ** 2 * fro_norm(h_ab) ** 2
                   + (1.0 - beta) ** 2 * fro_norm(h_ba) ** 2)


def effective_pair_channel(H_a, H_b, B_tm, T_m, B_rm):
    """Channel from user ``b`` to user ``a``: ``H_a^T B_tm T_m B_rm H_b``."""
    return H_a.T @ B_tm @ T_m @ B_rm @ H_b


def assemble_relay(F_r, B_r, T, mode='hybrid', blocks=(), T_blocks=()):
    """Build :class:`RelayDesign` with ``W_tilde = F_r^T B_r^T T B_r F_r``."""
    if mode not in MODES:
        raise ContractError(f'unknown relay mode {mode!r}')
    G = B_r @ F_r
    return RelayDesign(F_r=F_r, F_t=F_r.T, B_r=B_r, B_t=B_r.T, T=T,
                       W_tilde=G.T @ T @ G, mode=mode, alpha=1.0,
                       blocks=tuple(blocks), T_blocks=tuple(T_blocks))


def design_relay(channels, beta, mode='hybrid'):
    """
    Run the full relay design for one channel realization.

    Parameters
    ----------
    channels : ChannelSet
    beta : float
        Weight of the ``2m+1 -> 2m`` link in the pair objective.
    mode : {'hybrid', 'full_rf'}

    Returns
    -------
    RelayDesign
        With ``alpha = 1``; the amplification is set by the terminal design.
    """
    H, N_U = channels.H, channels.N_U
    N_R = H.shape[0]
    K = channels.n_users // 2
    if mode == 'hybrid':
        F_r = egc_receive_beamformer(H)
        H_E, H_tilde = composite_channel(F_r, H, N_U)
        blocks = [bd_receive_precoder(H_E, m, N_U) for m in range(K)]
    elif mode == 'full_rf':
        F_r = np.eye(N_R, dtype=complex)
        H_tilde = channels.H_k
        blocks = [frr_receive_precoder(H, m, N_U) for m in range(K)]
    else:
        raise ContractError(f'unknown relay mode {mode!r}')
    B_r, _ = assemble_digital(blocks)
    T_blocks = [anomax_pair_matrix(B, B.T, H_tilde[2 * m], H_tilde[2 * m + 1], beta)
                for m, B in enumerate(blocks)]
    T = scipy.linalg.block_diag(*T_blocks)
    return assemble_relay(F_r, B_r, T, mode, blocks, T_blocks)


def interpair_leakage(design, channels):
    """Largest ``|B_rm F_r H_j|_F / |H_j|_F`` over pairs ``m`` and users ``j`` outside ``m``."""
    worst = 0.0
    for m in range(len(design.blocks)):
        G = design.receive_filter(m)
        for j, H_j in enumerate(channels.H_k):
            if j // 2 == m:
                continue
            worst = max(worst, fro_norm(G @ H_j) / fro_norm(H_j))
    return worst
