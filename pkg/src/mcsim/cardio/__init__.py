from .constants import CircConstants, load_constants, default_constants, realproxy_constants
from .model import (
    BeatSeries,
    CardiacParams,
    HemoState,
    SteadySummary,
    elastance,
    pump_flow,
    simulate_waveform,
    simulate_grid,
    steady_summary,
    export_beatseries_csv,
)

__all__ = [
    "CircConstants",
    "load_constants",
    "default_constants",
    "realproxy_constants",
    "BeatSeries",
    "CardiacParams",
    "HemoState",
    "SteadySummary",
    "elastance",
    "pump_flow",
    "simulate_waveform",
    "simulate_grid",
    "steady_summary",
    "export_beatseries_csv",
]
