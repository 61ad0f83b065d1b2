"""Synthetic camera trajectories with known ground truth, and quality metrics.

Random numbers come from numpy's PCG64 bit generator (portable, documented,
seeded by a single integer). Gaussian samples use the Box-Muller transform
of PCG64 doubles so the stream depends only on the uniform generator.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lie
from .errors import ConfigError, LengthMismatch
from .path import AnalysisPath, cumulative_path
from .problem import SaliencyTrack

MOTION_KINDS = ("static", "velocity", "acceleration")
JITTER_MODES = ("position", "increment")


def _log_vector(value):
    """Accept a 9-vector or an ``[tx, ty]`` translation pair."""
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.shape == (2,):
        v = lie.translation_log(v[0], v[1])
    if v.shape != (9,):
        raise ConfigError("motion vectors are 9-vectors or [tx, ty] pairs")
    return lie.project_trace_zero(v)


@dataclass(frozen=True)
class Segment:
    duration: int
    kind: str = "static"
    vector: tuple = (0.0,) * 9

    def __post_init__(self):
        if int(self.duration) < 1:
            raise ConfigError("segment durations must be at least one frame")
        if self.kind not in MOTION_KINDS:
            raise ConfigError(f"motion kind must be one of {MOTION_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "duration", int(self.duration))
        object.__setattr__(self, "vector", tuple(_log_vector(self.vector)))


@dataclass(frozen=True)
class SynthSpec:
    """Piecewise camera motion plus jitter.

    ``jitter_mode="position"`` perturbs the cumulative path (handheld shake
    around the intended trajectory): ``f_t = g_t + j_t - j_{t-1}``.
    ``"increment"`` adds independent noise to each increment instead, which
    makes the cumulative path a random walk around the ground truth.
    ``keystone_ratio`` ties keystone to translation (``k = R t``) per axis.
    """

    segments: tuple
    jitter_sigma: object = 0.0
    seed: int = 0
    aspect: float = 9.0 / 16.0
    jitter_mode: str = "position"
    keystone_ratio: Optional[tuple] = None

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        if not segs:
            raise ConfigError("a synthetic spec needs at least one segment")
        sigma = np.asarray(self.jitter_sigma, dtype=float)
        if sigma.shape not in ((), (9,)) or np.any(sigma < 0) or np.any(~np.isfinite(sigma)):
            raise ConfigError("jitter_sigma must be a non-negative scalar or 9-vector")
        if self.jitter_mode not in JITTER_MODES:
            raise ConfigError(f"jitter mode must be one of {JITTER_MODES}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "jitter_sigma", float(sigma) if sigma.ndim == 0 else tuple(sigma))
        if self.keystone_ratio is not None:
            object.__setattr__(self, "keystone_ratio", tuple(float(r) for r in self.keystone_ratio))

    @property
    def n(self):
        return sum(s.duration for s in self.segments)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["segments"] = tuple(Segment(**s) for s in d["segments"])
        return cls(**d)

    def to_dict(self):
        return {
            "segments": [{"duration": s.duration, "kind": s.kind, "vector": list(s.vector)}
                         for s in self.segments],
            "jitter_sigma": self.jitter_sigma if isinstance(self.jitter_sigma, float)
            else list(self.jitter_sigma),
            "seed": self.seed,
            "aspect": self.aspect,
            "jitter_mode": self.jitter_mode,
            "keystone_ratio": None if self.keystone_ratio is None else list(self.keystone_ratio),
        }


def gaussian(rng, size):
    """Standard normal samples via Box-Muller on ``rng.random()`` doubles."""
    size = int(size)
    half = (size + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def ground_truth_increments(spec):
    g = np.zeros((spec.n, 9))
    vel = np.zeros(9)
    t = 0
    for seg in spec.segments:
        vec = np.asarray(seg.vector)
        for _ in range(seg.duration):
            if seg.kind == "static":
                vel = np.zeros(9)
            elif seg.kind == "velocity":
                vel = vec.copy()
            else:
                vel = vel + vec
            g[t] = vel
            t += 1
    return g


def _tie_keystone(x, ratio):
    x = x.copy()
    for (k_idx, t_idx), r in zip(zip(lie.KEYSTONE, lie.TRANSLATION), ratio):
        x[:, k_idx] = r * x[:, t_idx]
    return x


def jitter(spec):
    """The ``(n, 9)`` trace-zero jitter samples for ``spec`` (deterministic in the seed)."""
    rng = make_rng(spec.seed)
    n = spec.n
    sigma = np.broadcast_to(np.asarray(spec.jitter_sigma, dtype=float), (9,))
    z = gaussian(rng, n * 9).reshape(n, 9) * sigma
    z[:, 8] = -(z[:, 0] + z[:, 4])
    if spec.keystone_ratio is not None:
        z = _tie_keystone(z, spec.keystone_ratio)
    return z


def generate(spec):
    """Return ``(AnalysisPath, ground_truth_increments)`` for ``spec``."""
    g = ground_truth_increments(spec)
    if spec.keystone_ratio is not None:
        g = _tie_keystone(g, spec.keystone_ratio)
    j = jitter(spec)
    if spec.jitter_mode == "position":
        noise = j - np.vstack([np.zeros((1, 9)), j[:-1]])
    else:
        noise = j
    f = lie.project_trace_zero(g + noise)
    return AnalysisPath(f, spec.aspect), g


def sinusoid_track(n, amplitude=0.25, period=120.0, axis=0, phase=0.0):
    """Single salient point oscillating along one axis about the frame center."""
    t = np.arange(n)
    pts = np.zeros((n, 2))
    pts[:, axis] = amplitude * np.sin(2 * np.pi * t / period + phase)
    return SaliencyTrack(tuple(pts[i:i + 1] for i in range(n)))


@dataclass(frozen=True)
class QualityReport:
    sparsity: tuple
    rms_correction: float
    fov_ratio: float
    max_linearization_residual: float
    max_exit: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "sparsity_e1": self.sparsity[0],
            "sparsity_e2": self.sparsity[1],
            "sparsity_e3": self.sparsity[2],
            "rms_correction": self.rms_correction,
            "fov_ratio": self.fov_ratio,
            "max_linearization_residual": self.max_linearization_residual,
            "max_exit": self.max_exit,
        }


def exact_window_corners(plan):
    """Crop-window corners under each exact correction, ``(n, 4, 2)``."""
    return np.array([lie.apply_points(H, plan.crop_window) for H in plan.corrections])


def quality(plan, path, tau=1e-4):
    """Internal quality metrics computed from the exponentiated corrections.

    ``max_exit`` is how far (normalized units) any exact corner leaves the
    frame; zero when all corners are inside.
    """
    if plan.n != path.n:
        raise LengthMismatch("plan and path differ in length")
    fracs = tuple(float(np.mean(np.abs(e) > tau)) if e.size else 0.0 for e in (plan.e1, plan.e2, plan.e3))
    corners = exact_window_corners(plan)
    geom = plan.geometry
    J = lie.corner_jacobian(plan.crop_window)
    linear = plan.crop_window.reshape(-1)[None, :] + plan.p @ J.T
    lin_res = float(np.max(np.abs(corners.reshape(plan.n, -1) - linear), initial=0.0))
    areas = np.array([lie.shoelace(c) for c in corners])
    fov = float(np.sqrt(areas.min() / geom.frame_area))
    half = geom.frame_half_extent
    exit_ = float(np.max(np.abs(corners) - half, initial=0.0))
    return QualityReport(fracs, float(np.sqrt(np.mean(plan.p ** 2))), fov, lin_res, max(exit_, 0.0))


def compare_paths(a, b):
    """``(max_abs, rms)`` of the elementwise difference of two equal-length paths."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"paths differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0, 0.0
    d = a - b
    return float(np.max(np.abs(d))), float(np.sqrt(np.mean(d * d)))


def stabilized_cumulative(plan, path):
    return cumulative_path(path.f) + plan.p
