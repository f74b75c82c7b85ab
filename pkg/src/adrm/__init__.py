"""Amplitude-domain reflection modulation with an active reconfigurable surface."""

__version__ = "0.1.0"

from .config import ConfigError, SystemConfig, dbm_to_watt, watt_to_dbm  # noqa: E402
from .channel import ChannelRealization, draw_channel, h_statistics, mean_channel  # noqa: E402
from .modem import AapCodebook, Constellation, ml_detect, qam  # noqa: E402
from .codebook import DesignError, design_codebook_ga, design_codebook_sca  # noqa: E402
from .analysis import abep_bound, mi_estimate, upep  # noqa: E402
from .engine import AdrmScheme, BerCurve, MimoAdrmScheme, SweepSpec, run_ber_sweep  # noqa: E402
from .baselines import BaselineScheme  # noqa: E402

__all__ = [
    "AapCodebook", "AdrmScheme", "BaselineScheme", "BerCurve", "ChannelRealization", "ConfigError",
    "Constellation", "DesignError", "MimoAdrmScheme", "SweepSpec", "SystemConfig", "abep_bound",
    "dbm_to_watt", "design_codebook_ga", "design_codebook_sca", "draw_channel", "h_statistics",
    "mean_channel", "mi_estimate", "ml_detect", "qam", "run_ber_sweep", "upep", "watt_to_dbm",
]
