"""Scenario configuration and i.i.d. Rayleigh channel generation.

Users are indexed ``0 .. 2K-1`` and user-pair ``m`` (``0 .. K-1``) is made of
users ``2m`` and ``2m + 1``.  Transmitted symbols are assumed to have unit
covariance, ``E[s s^H] = I``.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ['SystemConfig', 'ChannelSet', 'ConfigError', 'validate',
           'draw_channels', 'realization_rng', 'partner', 'pair_users',
           'from_snr_db', 'load_config', 'dump_config', 'db2lin']


class ConfigError(ValueError):
    """Raised with the full list of violated configuration constraints."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__('; '.join(self.errors))


def db2lin(db):
    return 10.0 ** (db / 10.0)


def partner(k):
    """Index of the user exchanging data with user ``k``."""
    return k ^ 1


def pair_users(m):
    return 2 * m, 2 * m + 1


@dataclass(frozen=True)
class SystemConfig:
    """
    All scalar parameters of a multi-pair two-way relay scenario.

    ``p`` holds one transmit power per user (length ``2K``); a scalar given
    at construction is broadcast.  ``M_R`` defaults to ``2 * K * N_U``, the
    RF-chain count the hybrid relay needs.
    """
    K: int = 4
    N_U: int = 2
    M_D: int = 2
    N_R: int = 64
    M_R: int = None
    p: tuple = 1.0
    P_R: float = 1.0
    sigma_R_sq: float = 1.0
    sigma_k_sq: tuple = 1.0
    beta: float = 0.5
    N_max: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.M_R is None:
            object.__setattr__(self, 'M_R', 2 * self.K * self.N_U)
        object.__setattr__(self, 'p', _per_user(self.p, self.K))
        object.__setattr__(self, 'sigma_k_sq', _per_user(self.sigma_k_sq, self.K))

    @property
    def n_users(self):
        return 2 * self.K

    @property
    def user_powers(self):
        return np.asarray(self.p, dtype=float)

    @property
    def user_noise(self):
        return np.asarray(self.sigma_k_sq, dtype=float)

    def replace(self, **changes):
        """
        Copy with ``changes`` applied, keeping derived sizes consistent.

        Changing ``K`` or ``N_U`` resets ``M_R`` to ``2 K N_U`` unless it is
        given explicitly, and re-broadcasts uniform per-user vectors.
        """
        K = changes.get('K', self.K)
        if K != self.K:
            for name in ('p', 'sigma_k_sq'):
                if name not in changes:
                    values = set(getattr(self, name))
                    if len(values) != 1:
                        raise ConfigError([f'cannot resize non-uniform {name} to K={K}'])
                    changes[name] = values.pop()
        if ('K' in changes or 'N_U' in changes) and 'M_R' not in changes:
            changes['M_R'] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d['p'] = list(self.p)
        d['sigma_k_sq'] = list(self.sigma_k_sq)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f'unknown config field {u!r}' for u in sorted(unknown)])
        kw = dict(d)
        for name in ('p', 'sigma_k_sq'):
            if isinstance(kw.get(name), list):
                kw[name] = tuple(float(x) for x in kw[name])
        return cls(**kw)


def _per_user(value, K):
    if np.isscalar(value):
        return (float(value),) * (2 * K)
    return tuple(float(x) for x in value)


def from_snr_db(snr_db, **kwargs):
    """Config with unit noise variances and ``P_R = p_k = 10^(snr_db/10)``."""
    snr = db2lin(snr_db)
    kwargs.setdefault('sigma_R_sq', 1.0)
    kwargs.setdefault('sigma_k_sq', 1.0)
    return SystemConfig(p=snr, P_R=snr, **kwargs)


def validate(cfg, mode='hybrid'):
    """
    Check every invariant of ``cfg``.

    Returns
    -------
    errors : list of str
        Empty when the configuration is valid.  All violations are listed,
        not only the first one.
    """
    errors = []
    for name in ('K', 'N_U', 'M_D', 'N_R', 'N_max'):
        if int(getattr(cfg, name)) < 1:
            errors.append(f'{name} must be a positive integer')
    if cfg.M_D > cfg.N_U:
        errors.append('M_D exceeds N_U')
    full = 2 * cfg.K * cfg.N_U
    if mode == 'hybrid':
        if cfg.M_R != full:
            errors.append(f'M_R must equal 2KN_U={full} for hybrid mode')
        if cfg.N_R < cfg.M_R:
            errors.append(f'N_R={cfg.N_R} is smaller than M_R={cfg.M_R}')
    elif mode == 'full_rf':
        # pair nulling needs 2N_U spare dimensions beyond the other pairs
        if cfg.N_R < full:
            errors.append(f'N_R={cfg.N_R} is smaller than 2KN_U={full}')
    else:
        errors.append(f'unknown relay mode {mode!r}')
    if not 0.0 <= cfg.beta <= 1.0:
        errors.append('beta must lie in [0, 1]')
    if len(cfg.p) != 2 * cfg.K:
        errors.append(f'p must hold 2K={2 * cfg.K} values, got {len(cfg.p)}')
    if len(cfg.sigma_k_sq) != 2 * cfg.K:
        errors.append(f'sigma_k_sq must hold 2K={2 * cfg.K} values, got {len(cfg.sigma_k_sq)}')
    if any(x <= 0 for x in cfg.p) or cfg.P_R <= 0:
        errors.append('all powers must be positive')
    if cfg.sigma_R_sq <= 0 or any(x <= 0 for x in cfg.sigma_k_sq):
        errors.append('all noise variances must be positive')
    return errors


def realization_rng(seed, index, attempt=0):
    """
    Independent generator for realization ``index`` of ``seed``.

    Streams are derived with :class:`numpy.random.SeedSequence`, so any
    realization can be regenerated without touching the others.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), int(attempt)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ChannelSet:
    """
    Uplink channels of all ``2K`` users.

    ``H`` is ``N_R x 2K N_U``; user ``k`` occupies columns
    ``k N_U .. (k+1) N_U``.  Downlink channels are the transposes.
    """
    H: np.ndarray
    N_U: int
    H_k: list = field(init=False, repr=False)

    def __post_init__(self):
        n = self.H.shape[1] // self.N_U
        blocks = [self.H[:, k * self.N_U:(k + 1) * self.N_U] for k in range(n)]
        object.__setattr__(self, 'H_k', blocks)

    @property
    def n_users(self):
        return len(self.H_k)

    def digest(self):
        return hashlib.sha256(np.ascontiguousarray(self.H).tobytes()).hexdigest()


def draw_channels(cfg, rng):
    """Draw ``H`` with i.i.d. CN(0, 1) entries."""
    shape = (cfg.N_R, 2 * cfg.K * cfg.N_U)
    z = rng.standard_normal(shape + (2,))
    H = (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
    return ChannelSet(H=H, N_U=cfg.N_U)


def load_config(path):
    with open(path) as fh:
        return SystemConfig.from_dict(json.load(fh))


def dump_config(cfg, path):
    with open(path, 'w') as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
