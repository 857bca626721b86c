"""Raw point sets -> normalized, outlier-clipped, capped point sets.

Fixed pipeline order: clip -> normalize -> sample, so the normalization
extent reflects the clipped data and the sample is drawn from in-range
points only. All outputs live in [0, 1]^2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyAfterClipError, PreconditionError
from .ingest import RawPointSet, ScatterplotSpec

DEFAULT_CLIP_LOW = 1.0
DEFAULT_CLIP_HIGH = 99.0
DEFAULT_SAMPLE_CAP = 10_000


@dataclass(frozen=True)
class Extent:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise PreconditionError("extent bounds out of order: %r" % (self,))

    @staticmethod
    def of_points(points: np.ndarray) -> "Extent":
        return Extent(
            float(points[:, 0].min()),
            float(points[:, 0].max()),
            float(points[:, 1].min()),
            float(points[:, 1].max()),
        )

    def union(self, other: "Extent") -> "Extent":
        return Extent(
            min(self.x_min, other.x_min),
            max(self.x_max, other.x_max),
            min(self.y_min, other.y_min),
            max(self.y_max, other.y_max),
        )

    def as_list(self) -> list[float]:
        return [self.x_min, self.x_max, self.y_min, self.y_max]


@dataclass(frozen=True)
class PointSet:
    spec: ScatterplotSpec
    points: np.ndarray  # shape (n, 2), float64, every coordinate in [0, 1]
    source_extent: Extent
    n_before_sampling: int

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


@dataclass(frozen=True)
class PreprocessConfig:
    clip_low: float = DEFAULT_CLIP_LOW
    clip_high: float = DEFAULT_CLIP_HIGH
    sample_cap: int = DEFAULT_SAMPLE_CAP
    seed: int = 0
    # None = per-plot extent, explicit Extent = shared frame,
    # "auto" = engine computes the union of post-clip extents.
    shared_extent: Extent | str | None = None

    def __post_init__(self):
        if not (0 <= self.clip_low < self.clip_high <= 100):
            raise PreconditionError(
                "clip percentiles must satisfy 0 <= low < high <= 100, got (%r, %r)"
                % (self.clip_low, self.clip_high)
            )
        if self.sample_cap < 1:
            raise PreconditionError("sample_cap must be >= 1, got %r" % self.sample_cap)
        if isinstance(self.shared_extent, str) and self.shared_extent != "auto":
            raise PreconditionError("shared_extent must be an Extent, 'auto', or None")


def clip_outliers(raw: RawPointSet, clip_low: float, clip_high: float) -> RawPointSet:
    """Keep points whose x AND y fall inside the per-axis percentile interval."""
    if raw.is_empty:
        raise PreconditionError("cannot clip an empty point set")
    xs, ys = raw.points[:, 0], raw.points[:, 1]
    x_lo, x_hi = np.percentile(xs, [clip_low, clip_high])
    y_lo, y_hi = np.percentile(ys, [clip_low, clip_high])
    keep = (xs >= x_lo) & (xs <= x_hi) & (ys >= y_lo) & (ys <= y_hi)
    if not keep.any():
        raise EmptyAfterClipError(
            "clip (%g, %g) removed all %d points" % (clip_low, clip_high, len(raw.points))
        )
    return replace(raw, points=raw.points[keep])


def normalize(raw: RawPointSet, shared_extent: Extent | None = None) -> PointSet:
    """Map points linearly into [0, 1]^2.

    With a shared extent, coordinates are clamped to [0, 1]; with the
    point set's own extent the endpoints land exactly on 0 and 1. A
    degenerate axis (min == max) maps to 0.5.
    """
    if raw.is_empty:
        raise PreconditionError("cannot normalize an empty point set")
    extent = shared_extent if shared_extent is not None else Extent.of_points(raw.points)
    out = np.empty_like(raw.points)
    for axis, (lo, hi) in enumerate(
        [(extent.x_min, extent.x_max), (extent.y_min, extent.y_max)]
    ):
        if hi == lo:
            out[:, axis] = 0.5
        else:
            out[:, axis] = (raw.points[:, axis] - lo) / (hi - lo)
    np.clip(out, 0.0, 1.0, out=out)
    return PointSet(
        spec=raw.spec,
        points=out,
        source_extent=extent,
        n_before_sampling=len(out),
    )


def sample(ps: PointSet, cap: int, seed: int) -> PointSet:
    """Uniform sample without replacement down to ``cap`` points.

    Identity when already under the cap; otherwise deterministic for a
    given seed, with input order preserved among the kept points.
    """
    if cap < 1:
        raise PreconditionError("sample cap must be >= 1, got %r" % cap)
    n = len(ps.points)
    if n <= cap:
        return ps
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=cap, replace=False))
    return PointSet(
        spec=ps.spec,
        points=ps.points[idx],
        source_extent=ps.source_extent,
        n_before_sampling=n,
    )


def empty_point_set(spec: ScatterplotSpec, extent: Extent | None = None) -> PointSet:
    return PointSet(
        spec=spec,
        points=np.empty((0, 2), dtype=np.float64),
        source_extent=extent or Extent(0.0, 0.0, 0.0, 0.0),
        n_before_sampling=0,
    )


def run_pipeline(raw: RawPointSet, cfg: PreprocessConfig, seed: int | None = None) -> PointSet:
    """clip -> normalize -> sample; empty inputs pass through flagged.

    ``shared_extent="auto"`` must be resolved to a concrete Extent by the
    caller (the engine) before this runs per plot.
    """
    if isinstance(cfg.shared_extent, str):
        raise PreconditionError("'auto' shared extent must be resolved before the pipeline runs")
    if raw.is_empty:
        return empty_point_set(raw.spec, cfg.shared_extent)
    clipped = clip_outliers(raw, cfg.clip_low, cfg.clip_high)
    ps = normalize(clipped, cfg.shared_extent)
    return sample(ps, cfg.sample_cap, cfg.seed if seed is None else seed)
