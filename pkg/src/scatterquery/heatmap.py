"""Multi-resolution heatmap pyramids for normalized point sets.

Cell convention, fixed for the wire format and the UI: ``cells[i, j]`` is
x-bin ``i`` (x increasing rightward) and y-bin ``j`` (y increasing upward).
Counts levels are integer arrays; density levels are counts divided by the
total point count and sum to 1 for nonempty plots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CannotDownsampleError, PreconditionError
from .preprocess import PointSet

DEFAULT_MIN_RESOLUTION = 2
DEFAULT_MAX_RESOLUTION = 64

COUNTS = "counts"
DENSITY = "density"


def _is_power_of_two(r: int) -> bool:
    return r >= 2 and (r & (r - 1)) == 0


@dataclass(frozen=True)
class HeatmapLevel:
    resolution: int
    cells: np.ndarray  # (r, r); int64 for counts, float64 for density
    kind: str

    def __post_init__(self):
        if not _is_power_of_two(self.resolution):
            raise PreconditionError("resolution must be a power of two >= 2, got %r" % self.resolution)
        if self.cells.shape != (self.resolution, self.resolution):
            raise PreconditionError(
                "cell grid shape %r does not match resolution %d" % (self.cells.shape, self.resolution)
            )
        if self.kind not in (COUNTS, DENSITY):
            raise PreconditionError("kind must be 'counts' or 'density', got %r" % self.kind)


@dataclass(frozen=True)
class HeatmapPyramid:
    spec_id: str
    levels: tuple[HeatmapLevel, ...]
    point_count: int

    def __post_init__(self):
        kinds = {lvl.kind for lvl in self.levels}
        if len(kinds) > 1:
            raise PreconditionError("pyramid levels mix kinds: %r" % kinds)
        res = [lvl.resolution for lvl in self.levels]
        if any(b != 2 * a for a, b in zip(res, res[1:])):
            raise PreconditionError("level resolutions must strictly double: %r" % res)

    @property
    def kind(self) -> str:
        return self.levels[0].kind

    @property
    def resolutions(self) -> tuple[int, ...]:
        return tuple(lvl.resolution for lvl in self.levels)

    @property
    def is_empty(self) -> bool:
        return self.point_count == 0

    def level_at(self, resolution: int) -> HeatmapLevel:
        for lvl in self.levels:
            if lvl.resolution == resolution:
                return lvl
        raise PreconditionError("pyramid has no level at resolution %d" % resolution)


@dataclass(frozen=True)
class PyramidConfig:
    min_resolution: int = DEFAULT_MIN_RESOLUTION
    max_resolution: int = DEFAULT_MAX_RESOLUTION
    # Compare plots by density (size-invariant) rather than raw counts;
    # counts mode is retained as an experimentation switch.
    density: bool = True

    def __post_init__(self):
        for r in (self.min_resolution, self.max_resolution):
            if not _is_power_of_two(r):
                raise PreconditionError("resolution %r is not a power of two >= 2" % r)
        if self.min_resolution > self.max_resolution:
            raise PreconditionError(
                "min resolution %d exceeds max %d" % (self.min_resolution, self.max_resolution)
            )

    @property
    def resolutions(self) -> tuple[int, ...]:
        out, r = [], self.min_resolution
        while r <= self.max_resolution:
            out.append(r)
            r *= 2
        return tuple(out)


def bin_points(ps: PointSet, resolution: int) -> HeatmapLevel:
    """Bin a normalized point set into an r x r counts grid.

    Point (x, y) lands in cell (floor(x*r), floor(y*r)); the coordinate 1.0
    is assigned to the last bin so every in-range point stays in-grid.
    """
    if not _is_power_of_two(resolution):
        raise PreconditionError("resolution must be a power of two >= 2, got %r" % resolution)
    r = resolution
    cells = np.zeros((r, r), dtype=np.int64)
    if len(ps.points):
        ix = np.minimum(np.floor(ps.points[:, 0] * r).astype(np.int64), r - 1)
        iy = np.minimum(np.floor(ps.points[:, 1] * r).astype(np.int64), r - 1)
        cells = np.bincount(ix * r + iy, minlength=r * r).reshape(r, r).astype(np.int64)
    return HeatmapLevel(resolution=r, cells=cells, kind=COUNTS)


def build_pyramid(ps: PointSet, cfg: PyramidConfig = PyramidConfig()) -> HeatmapPyramid:
    """One counts level per dyadic resolution in [min, max]."""
    levels = tuple(bin_points(ps, r) for r in cfg.resolutions)
    return HeatmapPyramid(spec_id=ps.spec.spec_id, levels=levels, point_count=len(ps.points))


def to_density(p: HeatmapPyramid) -> HeatmapPyramid:
    """Counts -> density (cells / point_count); empty pyramids stay all-zero."""
    if p.kind != COUNTS:
        raise PreconditionError("to_density expects a counts pyramid, got %r" % p.kind)
    if p.point_count == 0:
        levels = tuple(
            HeatmapLevel(lvl.resolution, lvl.cells.astype(np.float64), DENSITY) for lvl in p.levels
        )
    else:
        levels = tuple(
            HeatmapLevel(lvl.resolution, lvl.cells / float(p.point_count), DENSITY)
            for lvl in p.levels
        )
    return HeatmapPyramid(spec_id=p.spec_id, levels=levels, point_count=p.point_count)


def block_downsample(level: HeatmapLevel) -> HeatmapLevel:
    """Halve the resolution by summing disjoint 2x2 blocks (counts only)."""
    if level.kind != COUNTS:
        raise PreconditionError("block_downsample expects a counts level, got %r" % level.kind)
    if level.resolution == 2:
        raise CannotDownsampleError("cannot downsample below the 2x2 level")
    h = level.resolution // 2
    cells = level.cells.reshape(h, 2, h, 2).sum(axis=(1, 3))
    return HeatmapLevel(resolution=h, cells=cells, kind=COUNTS)
