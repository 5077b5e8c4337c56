"""Dense complex linear algebra used throughout the package.

Matrices are plain :class:`numpy.ndarray` objects of complex dtype.  Storage
order is numpy's default (C, row-major) and never leaks through the API: the
``vec``/``unvec`` pair always stacks *columns*, whatever the memory layout.

Singular and eigen vectors are returned without any phase canonicalization.
Callers must only rely on subspaces and magnitudes.
"""

import numpy as np

__all__ = ['NumericalError', 'ContractError', 'EPS', 'HERMITIAN_TOL',
           'rank_tol', 'svd', 'eigh', 'kron', 'vec', 'unvec', 'fro_norm',
           'vec_norm', 'hermitian_part', 'herm']

EPS = np.finfo(float).eps

# Relative Frobenius asymmetry accepted by ``eigh``.
HERMITIAN_TOL = 1e-10


class NumericalError(ArithmeticError):
    """A factorization failed to converge or produced non-finite output."""


class ContractError(ValueError):
    """An input violates the documented precondition of an operation."""


def rank_tol(shape, s_max):
    """Default rank tolerance ``max(rows, cols) * eps * s_max``."""
    return max(shape) * EPS * s_max


def _as_finite(A, name='A', batched=False):
    A = np.asarray(A)
    if A.ndim != 2 and not (batched and A.ndim > 2):
        raise ContractError(f'{name} must be 2-D, got shape {A.shape}')
    if not np.all(np.isfinite(A)):
        raise ContractError(f'{name} contains NaN or Inf entries')
    return A


def svd(A, full_matrices=True):
    """
    Singular value decomposition ``A = U @ diag(S) @ V^H``.

    Parameters
    ----------
    A : ndarray, shape (..., m, n)
        Leading axes, if any, index a stack of matrices.
    full_matrices : bool
        When True (default) ``U`` is m x m and ``V`` is n x n, so the
        trailing columns of ``U`` span the orthogonal complement of the
        column space of ``A``.

    Returns
    -------
    U, S, V : ndarray
        ``S`` is sorted in descending order.  Note ``V`` (not ``V^H``) is
        returned.
    """
    A = _as_finite(A, batched=True)
    try:
        U, S, Vh = np.linalg.svd(A, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f'SVD did not converge for {A.shape} input') from exc
    return U, S, np.swapaxes(Vh, -1, -2).conj()


def eigh(A):
    """
    Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Accepts a stack of matrices along leading axes.

    Raises
    ------
    ContractError
        If ``||A - A^H||_F > HERMITIAN_TOL * ||A||_F``.
    """
    A = _as_finite(A, batched=True)
    if A.shape[-1] != A.shape[-2]:
        raise ContractError(f'eigh needs square matrices, got {A.shape}')
    scale = np.linalg.norm(A, axis=(-2, -1))
    asym = np.linalg.norm(A - np.swapaxes(A, -1, -2).conj(), axis=(-2, -1))
    if np.any(asym > HERMITIAN_TOL * scale):
        raise ContractError('eigh input is not Hermitian')
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError('Hermitian eigendecomposition did not converge') from exc
    return w[..., ::-1], U[..., ::-1]


def kron(A, B):
    """Kronecker product, shape ``(rA*rB, cA*cB)``."""
    return np.kron(_as_finite(A, 'A'), _as_finite(B, 'B'))


def vec(A):
    """Stack the columns of ``A`` into a 1-D vector."""
    return np.asarray(A).reshape(-1, order='F')


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise ContractError(
            f'cannot unvec a vector of length {v.size} into {rows}x{cols}')
    return v.reshape((rows, cols), order='F')


def fro_norm(A):
    return float(np.linalg.norm(A, 'fro'))


def vec_norm(x):
    return float(np.linalg.norm(x))


def hermitian_part(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2).conj())


def herm(A):
    """Conjugate transpose over the last two axes."""
    return np.swapaxes(A, -1, -2).conj()
