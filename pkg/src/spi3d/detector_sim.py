"""Single-pixel detector simulation.

The detector integrates the scene intensity under one projected window
per measurement, producing a 1-D trace. Reordering the trace onto the
placement grid yields a low-resolution fringe image: each pixel is the
window average, optionally rounded half-up to {0, 1} (majority vote on
binary scenes). Random-mask acquisition is provided as the baseline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fringe_render import FringeImage
from .sampling import PatternSequence, RandomPatternSet, Window
from .scene_gen import DepthMap


@dataclass
class SignalTrace:
    """Ordered detector readings, one per projected pattern."""

    values: np.ndarray
    rate: float | None = None
    period: float | None = None
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError(f"trace must be 1-D, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("trace contains non-finite values")
        if v.size and v.min() < 0.0:
            raise ValueError("trace values must be nonnegative")
        self.values = v

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, SignalTrace) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class LowResFringe:
    """Reordered low-res image; kind 'binary' (rounded) or 'continuous'."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError(f"low-res image must be 2-D, got {self.values.shape}")
        if self.kind == "binary":
            if not np.isin(self.values, (0.0, 1.0)).all():
                raise ValueError("binary low-res values must be exactly 0 or 1")
        elif self.kind != "continuous":
            raise ValueError(f"unknown low-res kind {self.kind!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _scene_values(scene) -> np.ndarray:
    if isinstance(scene, (FringeImage, DepthMap)):
        return scene.values
    arr = np.asarray(scene, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"scene must be 2-D, got shape {arr.shape}")
    return arr


def measure(scene, window: Window, anchor: tuple[int, int]) -> float:
    """One detector reading: sum of scene values under the window at anchor."""
    s = _scene_values(scene)
    total = 0.0
    for dr, dc in window.cells:
        r, c = anchor[0] + dr, anchor[1] + dc
        if not (0 <= r < s.shape[0] and 0 <= c < s.shape[1]):
            raise ValueError(f"window cell ({r}, {c}) outside {s.shape} scene")
        total += s[r, c]
    return float(total)


def acquire(scene, seq: PatternSequence, rate: float | None = None,
            period: float | None = None, seed: int | None = None) -> SignalTrace:
    """Run the full placement sequence, emitting readings in scan order."""
    s = _scene_values(scene)
    if s.shape != seq.dims:
        raise ValueError(f"scene shape {s.shape} does not match sequence dims {seq.dims}")
    values = s[seq._rows, seq._cols].sum(axis=1)
    return SignalTrace(values, rate=rate if rate is not None else seq.rate,
                       period=period, seed=seed)


def reorder(trace: SignalTrace, seq: PatternSequence, mode: str = "rounded") -> LowResFringe:
    """Map the trace back onto the placement grid.

    rounded mode: pixel = floor(value/N + 0.5), i.e. round-half-up of the
    window average (ties at exactly 0.5 go to 1). raw mode: pixel =
    value/N. Placement order is inverted, so the result is scan-order
    independent.
    """
    if mode not in ("rounded", "raw"):
        raise ValueError(f"unknown reorder mode {mode!r}")
    if len(trace) != len(seq.placements):
        raise ValueError(
            f"trace length {len(trace)} does not match {len(seq.placements)} placements"
        )
    averages = trace.values / seq.n
    out = np.empty(seq.lowres_dims, dtype=np.float64)
    tr, tc = np.asarray(seq.targets, dtype=np.intp).T
    if mode == "rounded":
        out[tr, tc] = np.floor(averages + 0.5)
        return LowResFringe(out, kind="binary")
    out[tr, tc] = averages
    return LowResFringe(out, kind="continuous")


def acquire_random(scene, patterns: RandomPatternSet, seed: int | None = None) -> SignalTrace:
    """Detector readings under unstructured binary masks."""
    s = _scene_values(scene)
    if s.shape != patterns.dims:
        raise ValueError(f"scene shape {s.shape} does not match mask dims {patterns.dims}")
    values = patterns.patterns.reshape(patterns.count, -1) @ s.reshape(-1)
    return SignalTrace(values, rate=patterns.count / s.size, seed=seed)


def save_trace(path: str | Path, trace: SignalTrace) -> None:
    """Write `index,value` CSV; values use repr so reloads are bit-exact."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value"])
        for i, v in enumerate(trace.values):
            writer.writerow([i, repr(float(v))])


def load_trace(path: str | Path) -> SignalTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["index", "value"]:
            raise ValueError(f"unexpected trace header {header!r}")
        values = [float(row[1]) for row in reader]
    return SignalTrace(np.asarray(values, dtype=np.float64))
