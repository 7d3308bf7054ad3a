"""Fault detection for wireless sensor networks with per-node predictive models."""

from .codec import RawFrame, decode_frame, encode_frame
from .conversion import SENSORS, EngineeringInstance
from .detector import Alert, AlertStage, FaultMonitor, ThresholdConfig
from .windows import WindowConfig

__all__ = [
    "RawFrame",
    "decode_frame",
    "encode_frame",
    "SENSORS",
    "EngineeringInstance",
    "Alert",
    "AlertStage",
    "FaultMonitor",
    "ThresholdConfig",
    "WindowConfig",
]
