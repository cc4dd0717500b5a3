"""Motion capture to arm ergonomics: joint angles, torques and muscle fatigue."""

import json as _json

from ._core import (
    ErgoError,
    JointAngles,
    World,
    __version__,
    capacity_closed_form,
    dh_transform,
    endurance_time,
    forward_kinematics,
    generate_synthetic,
    integrate_capacity,
    inverse_kinematics,
    parse_capture_csv,
    static_torques,
)
from ._core import run_pipeline as _run_pipeline


def run_pipeline(config, capture, out):
    """Run every stage into ``out`` and return the report as a dict."""
    return _json.loads(_run_pipeline(str(config), str(capture), str(out)))


__all__ = [
    "ErgoError",
    "JointAngles",
    "World",
    "__version__",
    "capacity_closed_form",
    "dh_transform",
    "endurance_time",
    "forward_kinematics",
    "generate_synthetic",
    "integrate_capacity",
    "inverse_kinematics",
    "parse_capture_csv",
    "run_pipeline",
    "static_torques",
]
