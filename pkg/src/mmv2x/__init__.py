"""Simulation of beamwidth-adaptive mmWave V2V scheduling on a multi-lane highway.

A sub-6GHz control plane carries CAMs and schedule announcements; each mmWave
transmitter picks the narrowest sector beam that lets it reach every LOS
neighbour within the intervals it is not committed to receive in.
"""

from .engine import SimConfig, run, run_replications
from .geometry import DEFAULT_ANTENNA, DEFAULT_LADDER, AntennaModel, BeamwidthLadder
from .phy import PhyConfig
from .scenario import ScenarioConfig, generate_drop
from .scheduler import SchedulingPeriod, adaptive_schedule, baseline_schedule

__version__ = "0.1.0"

__all__ = [
    "AntennaModel",
    "BeamwidthLadder",
    "DEFAULT_ANTENNA",
    "DEFAULT_LADDER",
    "PhyConfig",
    "ScenarioConfig",
    "SchedulingPeriod",
    "SimConfig",
    "adaptive_schedule",
    "baseline_schedule",
    "generate_drop",
    "run",
    "run_replications",
]
