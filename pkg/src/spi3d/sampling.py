"""Active sampling patterns for windowed single-pixel acquisition.

A Window is a set of cell offsets integrated by one detector reading; a
PatternSequence slides it over the scene so every pixel is covered exactly
once (the partition property), in raster or swirl order. Split-pair
windows come as two complementary halves of a 2 x N super-cell, mirroring
inverted pattern pairs. A RandomPatternSet provides the unstructured
baseline with a matched measurement budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NYQUIST_STRICT = "strict"
NYQUIST_RELAXED = "relaxed"
NYQUIST_ALIASED = "aliased"


@dataclass(frozen=True)
class Window:
    """Cell offsets from the anchor (top-left), plus a shape tag."""

    cells: tuple[tuple[int, int], ...]
    shape: str = "rect"

    def __post_init__(self):
        if not self.cells:
            raise ValueError("window must have at least one cell")
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("window cells must be distinct")
        if any(r < 0 or c < 0 for r, c in self.cells):
            raise ValueError("cell offsets must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def horizontal_extent(self) -> int:
        """M: pixel span along the fringe-carrier axis."""
        cols = [c for _, c in self.cells]
        return 1 + max(cols) - min(cols)

    @property
    def bounding_box(self) -> tuple[int, int]:
        return (1 + max(r for r, _ in self.cells), 1 + max(c for _, c in self.cells))


def make_window(
    n: int, shape: str = "rect", orientation: str = "vertical"
) -> Window | tuple[Window, Window]:
    """Build a rect window or a complementary split pair.

    Rect windows use the most-square factorization of n with the long edge
    along the fringe stripes (vertical) unless orientation says otherwise.
    Split pairs tile a 2 x n super-cell: A takes the first ceil(n/2) cells
    of the top row plus the rest of the bottom row, B is the complement.
    """
    if n < 1:
        raise ValueError(f"window cell count must be >= 1, got {n}")
    if orientation not in ("vertical", "horizontal"):
        raise ValueError(f"unknown orientation {orientation!r}")

    if shape == "rect":
        short = next(k for k in range(int(n**0.5), 0, -1) if n % k == 0)
        long_edge = n // short
        h, w = (long_edge, short) if orientation == "vertical" else (short, long_edge)
        cells = tuple((r, c) for r in range(h) for c in range(w))
        return Window(cells, shape="rect")

    if shape == "split_pair":
        k = (n + 1) // 2
        a = tuple((0, c) for c in range(k)) + tuple((1, c) for c in range(k, n))
        b = tuple((0, c) for c in range(k, n)) + tuple((1, c) for c in range(k))
        return Window(a, shape="split_pair_a"), Window(b, shape="split_pair_b")

    raise ValueError(f"unknown window shape {shape!r}")


def _swirl_anchor_order(rows: int, cols: int) -> list[tuple[int, int]]:
    # Outward rectangular spiral from the anchor-grid center; the cursor
    # walks the unbounded spiral and only in-bounds anchors are emitted.
    r, c = rows // 2, cols // 2
    out = [(r, c)]
    dirs = ((0, 1), (1, 0), (0, -1), (-1, 0))
    d, run = 0, 1
    while len(out) < rows * cols:
        for _ in range(2):
            dr, dc = dirs[d]
            for _ in range(run):
                r, c = r + dr, c + dc
                if 0 <= r < rows and 0 <= c < cols:
                    out.append((r, c))
                    if len(out) == rows * cols:
                        return out
            d = (d + 1) % 4
        run += 1
    return out


@dataclass
class PatternSequence:
    """Ordered window placements covering the scene exactly once.

    placements are (scene_row, scene_col, window_index) triples; targets
    give each measurement's pixel in the low-res image. Constructed via
    make_sequence or from_json, both of which verify the partition.
    """

    dims: tuple[int, int]
    windows: tuple[Window, ...]
    order: str
    placements: tuple[tuple[int, int, int], ...]
    lowres_dims: tuple[int, int] = field(compare=False)
    targets: tuple[tuple[int, int], ...] = field(compare=False, repr=False)
    _rows: np.ndarray = field(compare=False, repr=False)
    _cols: np.ndarray = field(compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.windows[0].n

    @property
    def rate(self) -> float:
        return 1.0 / self.n

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": list(self.dims),
                "windows": [
                    {"cells": [list(rc) for rc in w.cells], "shape": w.shape}
                    for w in self.windows
                ],
                "order": self.order,
                "placements": [list(p) for p in self.placements],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PatternSequence":
        doc = json.loads(text)
        windows = tuple(
            Window(tuple((r, c) for r, c in w["cells"]), shape=w["shape"])
            for w in doc["windows"]
        )
        placements = tuple((p[0], p[1], p[2]) for p in doc["placements"])
        return _finalize(
            (doc["dims"][0], doc["dims"][1]), windows, doc["order"], placements
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "PatternSequence":
        return cls.from_json(Path(path).read_text())


def _finalize(
    dims: tuple[int, int],
    windows: tuple[Window, ...],
    order: str,
    placements: tuple[tuple[int, int, int], ...],
) -> PatternSequence:
    height, width = dims
    n = windows[0].n
    if any(w.n != n for w in windows):
        raise ValueError("all windows in a sequence must have equal cell counts")

    rows = np.empty((len(placements), n), dtype=np.intp)
    cols = np.empty((len(placements), n), dtype=np.intp)
    coverage = np.zeros(dims, dtype=np.int64)
    targets = []
    paired = len(windows) == 2
    for p, (pr, pc, widx) in enumerate(placements):
        if not 0 <= widx < len(windows):
            raise ValueError(f"placement {p} references window {widx}")
        for i, (dr, dc) in enumerate(windows[widx].cells):
            r, c = pr + dr, pc + dc
            if not (0 <= r < height and 0 <= c < width):
                raise ValueError(f"placement {p} leaves the scene at ({r}, {c})")
            rows[p, i], cols[p, i] = r, c
            coverage[r, c] += 1
        if paired:
            # Complementary halves of one 2 x n super-cell land on the two
            # vertically stacked low-res pixels of that super-cell.
            targets.append((pr + widx, pc // n))
        else:
            bh, bw = windows[0].bounding_box
            targets.append((pr // bh, pc // bw))

    if not (coverage == 1).all():
        raise ValueError("window placements do not partition the scene")

    if paired:
        lowres = (height, width // n)
    else:
        bh, bw = windows[0].bounding_box
        lowres = (height // bh, width // bw)

    return PatternSequence(
        dims=dims,
        windows=windows,
        order=order,
        placements=placements,
        lowres_dims=lowres,
        targets=tuple(targets),
        _rows=rows,
        _cols=cols,
    )


def make_sequence(
    dims: tuple[int, int],
    window: Window | tuple[Window, Window],
    order: str = "raster",
) -> PatternSequence:
    """Slide a window (or split pair) over the scene in raster or swirl order."""
    height, width = dims
    if order not in ("raster", "swirl"):
        raise ValueError(f"unknown scan order {order!r}")
    windows = window if isinstance(window, tuple) else (window,)
    if len(windows) not in (1, 2):
        raise ValueError("expected one window or a complementary pair")

    if len(windows) == 2:
        step_r, step_c = 2, windows[0].n
    else:
        step_r, step_c = windows[0].bounding_box
    if height % step_r or width % step_c:
        raise ValueError(
            f"window of extent {step_r}x{step_c} does not tile a {height}x{width} scene"
        )

    grid_r, grid_c = height // step_r, width // step_c
    if order == "raster":
        anchors = [(ar, ac) for ar in range(grid_r) for ac in range(grid_c)]
    else:
        anchors = _swirl_anchor_order(grid_r, grid_c)

    placements = tuple(
        (ar * step_r, ac * step_c, widx)
        for ar, ac in anchors
        for widx in range(len(windows))
    )
    return _finalize(dims, windows, order, placements)


@dataclass
class RandomPatternSet:
    """Seeded Bernoulli masks used as the unstructured sampling baseline."""

    dims: tuple[int, int]
    count: int
    density: float
    seed: int
    patterns: np.ndarray = field(compare=False, repr=False)

    def __eq__(self, other):
        return (
            isinstance(other, RandomPatternSet)
            and (self.dims, self.count, self.density, self.seed) ==
            (other.dims, other.count, other.density, other.seed)
            and np.array_equal(self.patterns, other.patterns)
        )


def make_random_patterns(
    dims: tuple[int, int], count: int, density: float = 0.5, seed: int = 0
) -> RandomPatternSet:
    """Draw `count` independent binary masks with P(cell = 1) = density."""
    if count <= 0:
        raise ValueError(f"pattern count must be positive, got {count}")
    if not 0.0 < density < 1.0:
        raise ValueError(f"density must be in (0, 1), got {density}")
    rng = np.random.default_rng(seed)
    masks = (rng.random((count, dims[0], dims[1])) < density).astype(np.float64)
    return RandomPatternSet(dims=dims, count=count, density=density, seed=seed, patterns=masks)


def check_nyquist(window_extent: int, period: float) -> str:
    """Classify a window's horizontal extent M against the fringe period T.

    strict: M <= T/2, faithful sampling. relaxed: T/2 < M <= T, sampled
    with some distortion. aliased: M > T, under-sampling.
    """
    if window_extent < 1:
        raise ValueError(f"window extent must be >= 1, got {window_extent}")
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if 2 * window_extent <= period:
        return NYQUIST_STRICT
    if window_extent <= period:
        return NYQUIST_RELAXED
    return NYQUIST_ALIASED
