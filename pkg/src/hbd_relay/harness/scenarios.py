"""
Built-in experiment presets and scenario files.

The presets cover four spectral-efficiency experiments: SE against SNR for
several relay array sizes (fig2), against the array size (fig3), against
the number of user pairs (fig4) and against the stream count (fig5).  The
relay-antenna and SNR grids below are choices of this package.
"""

import json

from ..model import SystemConfig
from .runner import Scenario

__all__ = ['PRESETS', 'preset', 'load_scenarios', 'dump_scenarios']

SNR_GRID = (0, 10, 20, 30)
FIG2_NR = (32, 64, 128)
FIG3_NR = (64, 96, 128, 192, 256)
FIG4_K = (2, 3, 4, 5, 6, 7, 8)
FIG5_MD = (1, 2, 4)


def _fig2(realizations):
    return [Scenario(f'fig2_NR{n}', SystemConfig(K=4, N_U=2, M_D=2, N_R=n),
                     'snr_db', SNR_GRID, realizations) for n in FIG2_NR]


def _fig3(realizations):
    snr = 100.0
    return [Scenario(f'fig3_NU{nu}',
                     SystemConfig(K=4, N_U=nu, M_D=nu, N_R=FIG3_NR[0], p=snr, P_R=snr),
                     'N_R', FIG3_NR, realizations) for nu in (2, 4, 8)]


def _fig4(realizations):
    out = []
    for snr_db in (10, 20):
        snr = 10.0 ** (snr_db / 10.0)
        out.append(Scenario(f'fig4_SNR{snr_db}',
                            SystemConfig(K=FIG4_K[0], N_U=2, M_D=2, N_R=64, p=snr, P_R=snr),
                            'K', FIG4_K, realizations))
    return out


def _fig5(realizations):
    return [Scenario(f'fig5_MD{md}', SystemConfig(K=4, N_U=4, M_D=md, N_R=64),
                     'snr_db', SNR_GRID, realizations) for md in FIG5_MD]


def _ci(realizations):
    return [Scenario('ci', SystemConfig(K=4, N_U=2, M_D=2, N_R=64), 'snr_db',
                     SNR_GRID, realizations)]


PRESETS = {
    'fig2': (_fig2, 1000),
    'fig3': (_fig3, 1000),
    'fig4': (_fig4, 1000),
    'fig5': (_fig5, 1000),
    'ci': (_ci, 50),
}


def preset(name, realizations=None):
    """Scenarios of a named preset (``fig2`` .. ``fig5`` or ``ci``)."""
    try:
        build, default = PRESETS[name]
    except KeyError:
        raise KeyError(f'unknown preset {name!r}; known: {sorted(PRESETS)}') from None
    return build(realizations or default)


def load_scenarios(path):
    """
    Read scenarios from a JSON file holding either one scenario object or
    ``{"scenarios": [...]}``.  Each object mirrors :class:`Scenario`, with
    ``base`` mirroring :class:`SystemConfig`.
    """
    with open(path) as fh:
        data = json.load(fh)
    items = data['scenarios'] if 'scenarios' in data else [data]
    return [Scenario.from_dict(d) for d in items]


def dump_scenarios(scenarios, path):
    with open(path, 'w') as fh:
        json.dump({'scenarios': [s.to_dict() for s in scenarios]}, fh, indent=2)
