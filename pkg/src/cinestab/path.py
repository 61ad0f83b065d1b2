"""Camera paths in the log domain, derivative operators and crop geometry."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidFraction, LengthMismatch
from .lie import validate_corners, quad_area, sidelengths

# Coefficients of (p_t, p_{t+1}, ...) and (f_t, f_{t+1}, ...) in the first,
# second and third forward differences of the stabilized log path.
# The f coefficients come from telescoping the cumulative input path.
STENCILS = {
    1: (np.array([-1.0, 1.0]), np.array([0.0, 1.0])),
    2: (np.array([1.0, -2.0, 1.0]), np.array([0.0, -1.0, 1.0])),
    3: (np.array([-1.0, 3.0, -3.0, 1.0]), np.array([0.0, 1.0, -2.0, 1.0])),
}


def _as_path_array(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim == 1 and a.size % 9 == 0:
        a = a.reshape(-1, 9)
    if a.ndim != 2 or a.shape[1] != 9:
        raise ValueError(f"{name} must have shape (n, 9), got {a.shape}")
    return a


@dataclass(frozen=True)
class AnalysisPath:
    """Input motion: ``f[t]`` is the log of the homography mapping frame t to t-1.

    ``f[0]`` never enters the objective; it only anchors the cumulative path.
    """

    f: np.ndarray
    aspect: float = 9.0 / 16.0

    def __post_init__(self):
        f = _as_path_array(self.f, "f")
        if len(f) < 1:
            raise ValueError("a path needs at least one frame")
        tr = f[:, 0] + f[:, 4] + f[:, 8]
        if np.abs(tr).max() > 1e-10:
            raise ValueError(f"log-homographies must be trace-zero (max |trace| {np.abs(tr).max():.3g})")
        if not self.aspect > 0:
            raise ValueError("aspect must be positive")
        f = f.copy()
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def n(self):
        return len(self.f)

    def __len__(self):
        return len(self.f)

    def slice(self, start, stop):
        return AnalysisPath(self.f[start:stop], self.aspect)


def cumulative_path(f):
    """Running sum of the increments, the log-domain analogue of ``F_0 ... F_t``."""
    if isinstance(f, AnalysisPath):
        f = f.f
    return np.cumsum(_as_path_array(f, "f"), axis=0)


def difference(p, f, order):
    """One derivative trace; length ``n - order`` (empty when ``n <= order``)."""
    p = _as_path_array(p, "p")
    f = _as_path_array(f, "f")
    if p.shape != f.shape:
        raise LengthMismatch(f"p has {len(p)} frames but f has {len(f)}")
    cp, cf = STENCILS[order]
    m = len(p) - order
    out = np.zeros((max(m, 0), 9))
    for k in range(order + 1):
        out += cp[k] * p[k:k + m] + cf[k] * f[k:k + m]
    return out


def derivatives(p, f):
    """Forward-difference traces ``(e1, e2, e3)`` of the stabilized path.

    ``e1[t] = p[t+1] + f[t+1] - p[t]`` and so on; traces are shorter than
    the input by 1, 2 and 3 frames and come back empty for short paths.
    """
    return tuple(difference(p, f, k) for k in (1, 2, 3))


@dataclass(frozen=True)
class StabilizedPath:
    p: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @classmethod
    def from_corrections(cls, p, f):
        p = _as_path_array(p, "p")
        return cls(p, *derivatives(p, f))


def rectangle_corners(half_w, half_h):
    """Counter-clockwise corners of a centered rectangle, starting top-left."""
    return np.array([
        [-half_w, half_h],
        [-half_w, -half_h],
        [half_w, -half_h],
        [half_w, half_h],
    ])


@dataclass(frozen=True)
class FrameGeometry:
    crop_fraction: float
    aspect: float
    crop_window: np.ndarray
    frame_corners: np.ndarray
    margin: float = 0.0

    @property
    def frame_half_extent(self):
        return np.array([1.0, self.aspect])

    @property
    def window_half_extent(self):
        return np.abs(self.crop_window).max(axis=0)

    @property
    def frame_area(self):
        return quad_area(self.frame_corners)

    @property
    def window_area(self):
        return quad_area(self.crop_window)

    @property
    def frame_sidelengths(self):
        return sidelengths(self.frame_corners)

    @property
    def min_area(self):
        return (1.0 - self.crop_fraction) ** 2 * self.frame_area

    @property
    def min_sidelengths(self):
        return (1.0 - self.crop_fraction) * self.frame_sidelengths

    def pixel_scale(self, width_px):
        """Multiply normalized coordinates by this to get centered pixels."""
        return width_px / 2.0


def crop_window_from_fraction(crop_fraction, aspect=9.0 / 16.0, margin=None):
    """Centered crop window whose sides are ``1 - crop_fraction + margin`` of the frame.

    ``margin`` leaves room for corrections that shrink the window before the
    field-of-view bound is reached. Defaults to ``min(0.05, crop_fraction / 2)``.
    """
    if not (0.0 < crop_fraction <= 0.5):
        raise InvalidFraction(f"crop fraction must lie in (0, 0.5], got {crop_fraction}")
    if margin is None:
        margin = min(0.05, crop_fraction / 2.0)
    if not (0.0 <= margin < crop_fraction):
        raise InvalidFraction(f"margin must lie in [0, crop_fraction), got {margin}")
    if not aspect > 0:
        raise InvalidFraction(f"aspect must be positive, got {aspect}")
    factor = 1.0 - crop_fraction + margin
    frame = rectangle_corners(1.0, aspect)
    window = rectangle_corners(factor, factor * aspect)
    validate_corners(frame)
    validate_corners(window)
    return FrameGeometry(
        crop_fraction=float(crop_fraction),
        aspect=float(aspect),
        crop_window=window,
        frame_corners=frame,
        margin=float(margin),
    )
