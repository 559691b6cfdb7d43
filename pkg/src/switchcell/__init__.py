"""Electro-thermal switching-loss simulator for a SiC MOSFET / SiC Schottky diode pair."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import load_config, load_profile, parse_config
from .device import DeviceSet, apply_temperature, linearize_channel
from .multirate import Scenario, run_electrothermal
from .thermal import FosterLadder, foster_advance
from .transient import OperatingPoint, sample_trace, simulate_cycle, simulate_turn_off, simulate_turn_on

__all__ = [
    "DeviceSet", "FosterLadder", "OperatingPoint", "Scenario", "apply_temperature", "foster_advance",
    "linearize_channel", "load_config", "load_profile", "parse_config", "run_electrothermal",
    "sample_trace", "simulate_cycle", "simulate_turn_off", "simulate_turn_on",
]
