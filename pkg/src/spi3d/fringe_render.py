"""Analytic fringe-projection forward model.

A depth map modulates the phase of a vertical sinusoidal carrier: the
projected intensity is

    I(x, y) = 0.5 + 0.5 * cos(2*pi*x/T + 2*pi*g*d(x, y)*tan(A)/T)

where T is the fringe period in pixels, A the projector-camera angle and
g a depth-to-lateral-shift gain (default 1). Deeper surface points shift
the carrier sideways, which is the classic triangulation cue. Binarized
fringes and seeded uniform intensity noise are provided as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene_gen import DepthMap


@dataclass(frozen=True)
class ProjectionGeometry:
    """Projector-camera angle (degrees), fringe period (px), phase gain."""

    angle: float
    period: float
    phase_gain: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.angle < 90.0:
            raise ValueError(f"angle must be in (0, 90) degrees, got {self.angle}")
        if self.period < 2.0:
            raise ValueError(f"period must be >= 2 px, got {self.period}")
        if self.phase_gain <= 0.0:
            raise ValueError(f"phase_gain must be positive, got {self.phase_gain}")


@dataclass(frozen=True)
class FringeImage:
    """Intensity grid in [0, 1]; kind is 'sinusoidal' or 'binary'."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"fringe image must be 2-D, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("fringe image contains non-finite values")
        if self.kind == "sinusoidal":
            if v.min() < 0.0 or v.max() > 1.0:
                raise ValueError("sinusoidal intensities must lie in [0, 1]")
        elif self.kind == "binary":
            if not np.isin(v, (0.0, 1.0)).all():
                raise ValueError("binary fringe values must be exactly 0 or 1")
        else:
            raise ValueError(f"unknown fringe kind {self.kind!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform additive noise: per-image amplitude drawn from [low, high]."""

    low: float
    high: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.low <= self.high < 1.0:
            raise ValueError(f"need 0 <= low <= high < 1, got [{self.low}, {self.high}]")


def render_sinusoid(depth: DepthMap | np.ndarray, geom: ProjectionGeometry) -> FringeImage:
    """Render the phase-modulated vertical carrier for a depth map."""
    d = depth.values if isinstance(depth, DepthMap) else np.asarray(depth, dtype=np.float64)
    cols = np.arange(d.shape[1], dtype=np.float64)[None, :]
    shift = geom.phase_gain * math.tan(math.radians(geom.angle))
    phase = 2.0 * math.pi * (cols + shift * d) / geom.period
    return FringeImage(0.5 + 0.5 * np.cos(phase), kind="sinusoidal")


def binarize(fringe: FringeImage, threshold: float = 0.5) -> FringeImage:
    """Threshold to {0, 1}; values exactly at the threshold map to 1."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return FringeImage((fringe.values >= threshold).astype(np.float64), kind="binary")


def add_noise(image: FringeImage, noise: NoiseSpec) -> FringeImage:
    """Add seeded per-pixel uniform noise in [-a, a], a drawn per image.

    Output is clamped back to [0, 1] and tagged sinusoidal (continuous)
    even when the input was binary.
    """
    rng = np.random.default_rng(noise.seed)
    a = rng.uniform(noise.low, noise.high)
    delta = rng.uniform(-a, a, size=image.values.shape)
    return FringeImage(np.clip(image.values + delta, 0.0, 1.0), kind="sinusoidal")


def sample_angle(angle_range: tuple[float, float], seed: int) -> float:
    """Seeded uniform draw of a projector angle in degrees."""
    low, high = angle_range
    if not 0.0 < low <= high < 90.0:
        raise ValueError(f"need 0 < low <= high < 90, got [{low}, {high}]")
    if low == high:
        return float(low)
    return float(np.random.default_rng(seed).uniform(low, high))
