"""Slot-level simulator of 802.11 CSMA/CA, CSMA/ECA and full-duplex (STR) operation."""

from .channel import ChannelParams
from .config import SimConfig, from_flat, ideal_cell
from .engine import SimResult, monte_carlo, run, run_paired
from .mac import MacParams
from .metrics import empirical_cdf, quantile, str_gain, throughput

__all__ = [
    "ChannelParams", "MacParams", "SimConfig", "SimResult", "from_flat", "ideal_cell",
    "run", "run_paired", "monte_carlo", "str_gain", "throughput", "empirical_cdf", "quantile",
]
__version__ = "0.1.0"
