"""Optimal internal boundary control for bidirectional lane-free highways."""

from .ctm import SharingPlan, TrafficTrajectory, simulate, tts
from .scenario import Scenario, builtin_scenario, builtin_scenarios, load_scenario

__version__ = "0.1.0"

__all__ = [
    "Scenario",
    "SharingPlan",
    "TrafficTrajectory",
    "builtin_scenario",
    "builtin_scenarios",
    "load_scenario",
    "simulate",
    "tts",
]
