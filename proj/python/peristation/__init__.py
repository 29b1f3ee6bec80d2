"""Peristaltic tube-transport station: ring geometry, plant simulation and controller."""

from ._core import (
    RingGeometry,
    ValidationReport,
    StationSummary,
    ReplaySummary,
    validate_geometry,
    solve_chamber_length,
    surrogate_inflation,
    sweep,
    time_to_contact,
    calibrate,
    run,
    replay,
)

__all__ = [
    "RingGeometry",
    "ValidationReport",
    "StationSummary",
    "ReplaySummary",
    "validate_geometry",
    "solve_chamber_length",
    "surrogate_inflation",
    "sweep",
    "time_to_contact",
    "calibrate",
    "run",
    "replay",
]
