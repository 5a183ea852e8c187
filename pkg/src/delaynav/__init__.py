"""Delay-compensated tightly coupled acoustic/inertial navigation."""

from .exceptions import (BufferUnderrun, ConfigError, CovarianceBlowup, DelayNavError, EmptyOverlap,
                         IllConditioned, NegativeTof, NonTerminating, NonUniformRate, OutOfWindow,
                         PolarSingularity, ZenithSingularity)
from .fusion import (CalibrationSet, FusionFilter, FusionMode, MeasurementNoise, assemble_H,
                     delayed_update, innovation, kalman_update, predict_observation)
from .geo import WGS84, EarthModel, GeodeticPosition
from .harness import RunMetrics, ScenarioConfig, compute_metrics, emit_report, run_scenario
from .ins import ErrorState26, NavState, ProcessNoiseSpec, mechanize
from .sensors import AcousticFix, AcousticSpec, DelayKind, ImuErrorSpec
from .trajectory import HelixParams, Trajectory, generate_helix

__version__ = "0.1.0"

__all__ = [
    "AcousticFix", "AcousticSpec", "BufferUnderrun", "CalibrationSet", "ConfigError",
    "CovarianceBlowup", "DelayKind", "DelayNavError", "EarthModel", "EmptyOverlap", "ErrorState26",
    "FusionFilter", "FusionMode", "GeodeticPosition", "HelixParams", "IllConditioned", "ImuErrorSpec",
    "MeasurementNoise", "NavState", "NegativeTof", "NonTerminating", "NonUniformRate", "OutOfWindow",
    "PolarSingularity", "ProcessNoiseSpec", "RunMetrics", "ScenarioConfig", "Trajectory", "WGS84",
    "ZenithSingularity", "assemble_H", "compute_metrics", "delayed_update", "emit_report",
    "generate_helix", "innovation", "kalman_update", "mechanize", "predict_observation", "run_scenario",
]
