"""Reconstruction quality metrics and report plumbing.

Each depth reconstruction is scored with three error statistics on the
[0, 1]-normalized depth range - mean signed error (alpha), mean squared
error (delta), maximum absolute error (gamma) - plus the same
global-statistics SSIM the losses use, evaluated at 64-bit precision.
Dataset-level reports average alpha, delta, and SSIM over samples and
take the maximum of per-sample gamma values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scene_gen import DepthMap
from .tensor_engine import Tensor, ssim


def ssim_score(a: np.ndarray, b: np.ndarray) -> float:
    return ssim(Tensor(a, dtype=np.float64), Tensor(b, dtype=np.float64)).item()


@dataclass(frozen=True)
class SampleErrors:
    alpha: float
    delta: float
    gamma: float
    ssim: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "delta": self.delta,
                "gamma": self.gamma, "ssim": self.ssim}

    @classmethod
    def from_dict(cls, d: dict) -> "SampleErrors":
        return cls(d["alpha"], d["delta"], d["gamma"], d["ssim"])


@dataclass(frozen=True)
class EvalReport:
    alpha: float
    delta: float
    gamma: float
    ssim: float
    per_sample: tuple[SampleErrors, ...]

    def __post_init__(self):
        if not self.per_sample:
            raise ValueError("report needs at least one sample")
        if self.delta < 0.0:
            raise ValueError("mean squared error cannot be negative")
        if self.gamma < abs(self.alpha) - 1e-15:
            raise ValueError("max abs error cannot undercut the mean error")
        if self.ssim > 1.0 + 1e-12:
            raise ValueError("ssim cannot exceed 1")

    @property
    def sample_count(self) -> int:
        return len(self.per_sample)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "delta": self.delta,
            "gamma": self.gamma,
            "ssim": self.ssim,
            "sample_count": self.sample_count,
            "per_sample": [s.to_dict() for s in self.per_sample],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        report = cls(
            alpha=d["alpha"], delta=d["delta"], gamma=d["gamma"], ssim=d["ssim"],
            per_sample=tuple(SampleErrors.from_dict(s) for s in d["per_sample"]),
        )
        if d.get("sample_count") != report.sample_count:
            raise ValueError("sample_count disagrees with per-sample list")
        return report

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _values(image) -> np.ndarray:
    arr = image.values if isinstance(image, DepthMap) else np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D depth image, got shape {arr.shape}")
    return arr.astype(np.float64)


def evaluate(pred, truth) -> EvalReport:
    """Score one reconstruction against ground truth."""
    p, t = _values(pred), _values(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    err = p - t
    sample = SampleErrors(
        alpha=float(err.mean()),
        delta=float((err * err).mean()),
        gamma=float(np.abs(err).max()),
        ssim=ssim_score(p, t),
    )
    return EvalReport(sample.alpha, sample.delta, sample.gamma, sample.ssim, (sample,))


def aggregate(reports: list[EvalReport]) -> EvalReport:
    """Pool reports: mean alpha/delta/ssim, maximum gamma."""
    if not reports:
        raise ValueError("nothing to aggregate")
    samples = tuple(s for r in reports for s in r.per_sample)
    return EvalReport(
        alpha=float(np.mean([s.alpha for s in samples])),
        delta=float(np.mean([s.delta for s in samples])),
        gamma=float(np.max([s.gamma for s in samples])),
        ssim=float(np.mean([s.ssim for s in samples])),
        per_sample=samples,
    )


def evaluate_pairs(pairs) -> EvalReport:
    return aggregate([evaluate(pred, truth) for pred, truth in pairs])


_METRIC_NAMES = ("alpha", "delta", "gamma", "ssim")


def compare_reports(a: EvalReport, b: EvalReport) -> dict:
    """Side-by-side metric values with deltas (b minus a)."""
    if a.sample_count != b.sample_count:
        raise ValueError(
            f"reports cover different populations: {a.sample_count} vs {b.sample_count} samples"
        )
    return {
        name: {
            "a": getattr(a, name),
            "b": getattr(b, name),
            "delta": getattr(b, name) - getattr(a, name),
        }
        for name in _METRIC_NAMES
    }


def rate_label(rate: float) -> str:
    return f"{rate * 100.0:g}%"


def format_report(report: EvalReport) -> str:
    lines = [f"{'metric':<8}{'value':>14}"]
    for name in _METRIC_NAMES:
        lines.append(f"{name:<8}{getattr(report, name):>14.6f}")
    lines.append(f"{'samples':<8}{report.sample_count:>14d}")
    return "\n".join(lines)


def format_comparison(cmp: dict) -> str:
    lines = [f"{'metric':<8}{'a':>14}{'b':>14}{'delta':>14}"]
    for name in _METRIC_NAMES:
        row = cmp[name]
        lines.append(
            f"{name:<8}{row['a']:>14.6f}{row['b']:>14.6f}{row['delta']:>+14.6f}"
        )
    return "\n".join(lines)


def format_rate_table(reports_by_rate: dict[float, EvalReport]) -> str:
    """One column per sampling rate, highest rate first."""
    rates = sorted(reports_by_rate, reverse=True)
    header = f"{'metric':<8}" + "".join(f"{rate_label(r):>14}" for r in rates)
    lines = [header]
    for name in _METRIC_NAMES:
        cells = "".join(f"{getattr(reports_by_rate[r], name):>14.6f}" for r in rates)
        lines.append(f"{name:<8}{cells}")
    return "\n".join(lines)
