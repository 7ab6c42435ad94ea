"""Procedural depth-map scenes and dataset manifests.

Scenes are analytic heightfields (Gaussian bumps, hemispheres, ramps,
faceted cones, and max-composites of those) generated deterministically
from a SceneSpec, so every dataset entry can be regenerated bit-exactly
from its manifest record. Depth values are normalized to [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

PRIMITIVE_KINDS = ("gaussian-bump", "hemisphere", "ramp", "polyhedral-heightfield")
SCENE_KINDS = PRIMITIVE_KINDS + ("composite",)


@dataclass(frozen=True)
class DepthMap:
    """H x W grid of normalized depth values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"depth map must be 2-D, got shape {v.shape}")
        if v.shape[0] < 8 or v.shape[1] < 8:
            raise ValueError(f"depth map must be at least 8x8, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("depth map contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("depth values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one procedural scene.

    center is (row, col) as fractions of the image extent; radius is a
    fraction of min(height, width); amplitude is the peak depth in (0, 1];
    count is the number of facets (polyhedral) or members (composite);
    angle is the pose angle in degrees applied to direction-dependent
    primitives.
    """

    kind: str
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.3
    amplitude: float = 0.8
    count: int = 3
    angle: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": list(self.center),
            "radius": self.radius,
            "amplitude": self.amplitude,
            "count": self.count,
            "angle": self.angle,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        return cls(
            kind=d["kind"],
            center=(d["center"][0], d["center"][1]),
            radius=d["radius"],
            amplitude=d["amplitude"],
            count=d["count"],
            angle=d["angle"],
            seed=d["seed"],
        )


def _pixel_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    return np.broadcast_to(rows, (height, width)), np.broadcast_to(cols, (height, width))


def _eval_primitive(spec: SceneSpec, height: int, width: int) -> np.ndarray:
    ry, cx = _pixel_grid(height, width)
    cy0 = spec.center[0] * (height - 1)
    cx0 = spec.center[1] * (width - 1)
    scale_px = spec.radius * min(height, width)
    theta = math.radians(spec.angle)

    if spec.kind == "gaussian-bump":
        rho2 = (ry - cy0) ** 2 + (cx - cx0) ** 2
        return spec.amplitude * np.exp(-rho2 / (2.0 * scale_px**2))

    if spec.kind == "hemisphere":
        rho2 = (ry - cy0) ** 2 + (cx - cx0) ** 2
        return spec.amplitude * np.sqrt(np.maximum(0.0, scale_px**2 - rho2)) / scale_px

    if spec.kind == "ramp":
        # Linear gradient along the pose direction, normalized so the lowest
        # corner is 0 and the highest is `amplitude` exactly.
        p = cx * math.cos(theta) + ry * math.sin(theta)
        corners = [
            c * math.cos(theta) + r * math.sin(theta)
            for r in (0.0, height - 1.0)
            for c in (0.0, width - 1.0)
        ]
        lo, hi = min(corners), max(corners)
        return spec.amplitude * (p - lo) / (hi - lo)

    if spec.kind == "polyhedral-heightfield":
        # Faceted cone: apex at the center, `count` planar faces with seeded
        # azimuths/slopes, rotated rigidly by the pose angle.
        rng = np.random.default_rng(spec.seed)
        azimuths = rng.uniform(0.0, 2.0 * math.pi, size=spec.count) + theta
        slopes = rng.uniform(0.8, 2.0, size=spec.count) / scale_px
        drop = np.full((height, width), -np.inf)
        for phi, s in zip(azimuths, slopes):
            proj = (cx - cx0) * math.cos(phi) + (ry - cy0) * math.sin(phi)
            drop = np.maximum(drop, s * proj)
        return spec.amplitude * np.clip(1.0 - drop, 0.0, 1.0)

    raise ValueError(f"unknown primitive kind {spec.kind!r}")


def gen_scene(spec: SceneSpec, height: int, width: int) -> DepthMap:
    """Generate the depth map for a scene spec.

    Deterministic for a fixed (spec, seed, dims). Composite scenes are the
    clamped per-pixel maximum of their member primitives, mimicking opaque
    surfaces seen from the camera.
    """
    spec.validate()
    if height < 8 or width < 8:
        raise ValueError(f"scene dims must be >= 8, got {height}x{width}")

    if spec.kind != "composite":
        values = _eval_primitive(spec, height, width)
    else:
        rng = np.random.default_rng(spec.seed)
        values = np.zeros((height, width))
        for i in range(spec.count):
            member = SceneSpec(
                kind=PRIMITIVE_KINDS[rng.integers(0, len(PRIMITIVE_KINDS))],
                center=(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)),
                radius=rng.uniform(0.1, 0.4),
                amplitude=spec.amplitude * rng.uniform(0.4, 1.0),
                count=int(rng.integers(3, 7)),
                angle=spec.angle + rng.uniform(0.0, 360.0),
                seed=int(rng.integers(0, 2**31 - 1)),
            )
            values = np.maximum(values, _eval_primitive(member, height, width))

    return DepthMap(np.clip(values, 0.0, 1.0))


def augment_pose(spec: SceneSpec, count: int, seed: int) -> list[SceneSpec]:
    """Produce `count` pose variants of a spec.

    Pose angles step uniformly over a full turn starting from the base
    spec's angle; variants 1.. additionally get a small seeded center
    jitter. Variant 0 is the unmodified base spec.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    spec.validate()
    rng = np.random.default_rng(seed)
    variants = [spec]
    for i in range(1, count):
        jitter = rng.uniform(-0.05, 0.05, size=2)
        cy = min(max(spec.center[0] + jitter[0], 0.0), 1.0)
        cx = min(max(spec.center[1] + jitter[1], 0.0), 1.0)
        variants.append(
            replace(
                spec,
                angle=(spec.angle + 360.0 * i / count) % 360.0,
                center=(cy, cx),
            )
        )
    return variants


@dataclass
class ManifestEntry:
    scene_id: str
    spec: SceneSpec
    depth_path: str
    fringe_hi_path: str
    fringe_lo_path: str
    rate: float
    period: float
    split: str


@dataclass
class DatasetManifest:
    """Ordered dataset entries with a train/test split tag per entry."""

    entries: list[ManifestEntry] = field(default_factory=list)

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def to_json(self) -> str:
        return json.dumps(
            {
                "entries": [
                    {
                        "scene_id": e.scene_id,
                        "spec": e.spec.to_dict(),
                        "depth_path": e.depth_path,
                        "fringe_hi_path": e.fringe_hi_path,
                        "fringe_lo_path": e.fringe_lo_path,
                        "rate": e.rate,
                        "period": e.period,
                        "split": e.split,
                    }
                    for e in self.entries
                ]
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        entries = [
            ManifestEntry(
                scene_id=d["scene_id"],
                spec=SceneSpec.from_dict(d["spec"]),
                depth_path=d["depth_path"],
                fringe_hi_path=d["fringe_hi_path"],
                fringe_lo_path=d["fringe_lo_path"],
                rate=d["rate"],
                period=d["period"],
                split=d["split"],
            )
            for d in doc["entries"]
        ]
        return cls(entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


def build_manifest(
    specs: list[SceneSpec],
    split_ratio: float,
    seed: int,
    rates: list[float] | None = None,
    periods: list[float] | None = None,
) -> DatasetManifest:
    """Shuffle specs deterministically and tag floor(n * ratio) as train.

    Scene ids are assigned from the original spec order, so the same spec
    list always yields the same ids regardless of the shuffle seed. Rates
    and periods, when given, are per-spec (same order as `specs`).
    """
    if not specs:
        raise ValueError("spec list must not be empty")
    if not 0.0 < split_ratio < 1.0:
        raise ValueError(f"split_ratio must be in (0, 1), got {split_ratio}")
    n = len(specs)
    if rates is not None and len(rates) != n:
        raise ValueError("rates must match the number of specs")
    if periods is not None and len(periods) != n:
        raise ValueError("periods must match the number of specs")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(math.floor(n * split_ratio))

    entries = []
    for pos, idx in enumerate(order):
        sid = f"scene_{idx:04d}"
        entries.append(
            ManifestEntry(
                scene_id=sid,
                spec=specs[idx],
                depth_path=f"{sid}_depth.pgm",
                fringe_hi_path=f"{sid}_fringe_hi.pgm",
                fringe_lo_path=f"{sid}_fringe_lo.pgm",
                rate=rates[idx] if rates is not None else 0.25,
                period=periods[idx] if periods is not None else 7.0,
                split="train" if pos < n_train else "test",
            )
        )
    return DatasetManifest(entries)
