"""Hybrid block-diagonalization beamforming for a multi-pair two-way AF massive-MIMO relay."""

__version__ = '0.1.0'

from .model import SystemConfig, ChannelSet, draw_channels, from_snr_db, validate  # noqa: E402
from .relay_design import RelayDesign, design_relay  # noqa: E402
from .terminal_design import joint_amplification_design  # noqa: E402
from .metrics import SimulationResult, all_user_se, sum_se  # noqa: E402

__all__ = ['SystemConfig', 'ChannelSet', 'draw_channels', 'from_snr_db',
           'validate', 'RelayDesign', 'design_relay',
           'joint_amplification_design', 'SimulationResult', 'all_user_se',
           'sum_se', '__version__']
