"""Energy-aware WLAN discovery for UEs in a cellular/WLAN heterogeneous network."""

from .deployment import Region, WapSet, generate_ppp_waps, split_density
from .mobility import CalibrationParams, MobilityEstimator, MobilityState, calibrate
from .power import PowerModelParams, expected_channels_gps, expected_channels_wlan_aware, expected_power
from .schemes import SCHEMES, SchemeConfig
from .sim import ScanRecord, SimConfig, SweepReport, compare_analytical, run_replication, run_sweep

__version__ = "0.1.0"
