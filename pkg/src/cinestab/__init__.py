"""Cinematic stabilization of camera trajectories by convex optimization over log-homographies."""

from .errors import (
    ConfigError,
    InfeasibleSaliency,
    LogDomain,
    NotOptimal,
    ParseError,
    StabilizationError,
)
from .lie import exp_h, log_h, normalize_det1
from .path import AnalysisPath, FrameGeometry, crop_window_from_fraction, derivatives
from .problem import CorrectionPlan, SaliencyTrack, StabilizerConfig, assemble, extract_plan
from .qp import SolverSettings, SparseQP, Status, solve
from .synth import Segment, SynthSpec, generate, quality
from .window import schedule, solve_global, solve_windowed, stabilize

__version__ = "0.1.0"

__all__ = [
    "AnalysisPath", "ConfigError", "CorrectionPlan", "FrameGeometry", "InfeasibleSaliency",
    "LogDomain", "NotOptimal", "ParseError", "SaliencyTrack", "Segment", "SolverSettings",
    "SparseQP", "StabilizationError", "StabilizerConfig", "Status", "SynthSpec", "assemble",
    "crop_window_from_fraction", "derivatives", "exp_h", "extract_plan", "generate", "log_h",
    "normalize_det1", "quality", "schedule", "solve", "solve_global", "solve_windowed", "stabilize",
]
