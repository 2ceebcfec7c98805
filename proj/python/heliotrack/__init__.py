"""Vision-based heliostat tracking: Python access to the C++ core."""

from ._core import (
    CameraModel,
    ConfigError,
    NoSunDetected,
    OutOfEpoch,
    detect_ppm,
    load_scenario,
    pointing_uncertainty,
    rgb_to_hsl,
    run_scenario,
    sun_position,
    utc_timestamp,
)

__all__ = [
    "CameraModel",
    "ConfigError",
    "NoSunDetected",
    "OutOfEpoch",
    "detect_ppm",
    "load_scenario",
    "pointing_uncertainty",
    "rgb_to_hsl",
    "run_scenario",
    "sun_position",
    "utc_timestamp",
]
