"""Scores and distances over point sets and heatmap pyramids.

Two query families: distributional similarity (per-level Euclidean distance
aggregated into a weighted multi-level distance, lower is better) and region
match (points inside a drawn polygon, higher is better). An exact
earth-mover's distance solver is included as a desk-scale validation oracle;
it is deliberately capped at small resolutions and never serves queries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IncompatibleLevelError,
    IncompatiblePyramidError,
    InvalidRegionError,
    InvalidWeightsError,
    OracleScaleError,
    PreconditionError,
    ScatterQueryError,
    ZeroDistributionError,
)
from .heatmap import DENSITY, HeatmapLevel, HeatmapPyramid
from .preprocess import PointSet

LOWER_IS_BETTER = "lower-is-better"
HIGHER_IS_BETTER = "higher-is-better"

EMD_MAX_RESOLUTION = 16


@dataclass(frozen=True)
class Score:
    value: float
    direction: str

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise PreconditionError("score must be finite, got %r" % self.value)


@dataclass(frozen=True)
class WeightSchedule:
    """Per-level weights, aligned with pyramid levels coarse -> fine."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = self.weights
        if len(w) < 1:
            raise InvalidWeightsError("weight schedule is empty")
        if any(k < 0 for k in w):
            raise InvalidWeightsError("weights must be non-negative: %r" % (w,))
        if not any(k > 0 for k in w):
            raise InvalidWeightsError("at least one weight must be positive")
        if any(a < b for a, b in zip(w, w[1:])):
            raise InvalidWeightsError("weights must be non-increasing coarse to fine: %r" % (w,))


def default_weights(level_count: int) -> WeightSchedule:
    """Geometric halving (k_1 = 2 k_2 = 4 k_3 = ...), normalized to sum 1."""
    if level_count < 1:
        raise PreconditionError("level count must be >= 1, got %r" % level_count)
    ks = 2.0 ** -np.arange(level_count)
    return WeightSchedule(tuple(float(k) for k in ks / ks.sum()))


def level_distance(a: HeatmapLevel, b: HeatmapLevel) -> float:
    """Euclidean cell-wise distance divided by the resolution.

    The 1/r factor keeps levels of different resolutions on a comparable
    scale (density mass spreads over r^2 cells as r grows), so schedule
    weights express intent instead of correcting units.
    """
    if a.resolution != b.resolution or a.kind != b.kind:
        raise IncompatibleLevelError(
            "levels differ: %dx%d %s vs %dx%d %s"
            % (a.resolution, a.resolution, a.kind, b.resolution, b.resolution, b.kind)
        )
    diff = a.cells.astype(np.float64) - b.cells.astype(np.float64)
    return float(np.sqrt((diff * diff).sum()) / a.resolution)


def mld(pa: HeatmapPyramid, pb: HeatmapPyramid, w: WeightSchedule) -> Score:
    """Weighted sum of per-level distances over aligned resolutions."""
    if pa.resolutions != pb.resolutions or pa.kind != pb.kind:
        raise IncompatiblePyramidError(
            "pyramids differ: %r %s vs %r %s" % (pa.resolutions, pa.kind, pb.resolutions, pb.kind)
        )
    if len(w.weights) != len(pa.levels):
        raise InvalidWeightsError(
            "schedule has %d weights for %d levels" % (len(w.weights), len(pa.levels))
        )
    total = 0.0
    for k, la, lb in zip(w.weights, pa.levels, pb.levels):
        if k == 0.0:
            continue
        total += k * level_distance(la, lb)
    return Score(total, LOWER_IS_BETTER)


# ---------------------------------------------------------------------------
# Region queries


@dataclass(frozen=True)
class Region:
    """Closed simple polygon in normalized [0,1]^2 coordinates."""

    vertices: np.ndarray  # (m, 2) float64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        object.__setattr__(self, "vertices", v)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidRegionError("vertices must be an (m, 2) array")
        if len(v) < 3:
            raise InvalidRegionError("a region needs at least 3 vertices, got %d" % len(v))
        if not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0:
            raise InvalidRegionError("region vertices must lie in [0,1]^2")
        if _polygon_area(v) == 0.0:
            raise InvalidRegionError("region has zero area")
        if not _is_simple(v):
            raise InvalidRegionError("region polygon is self-intersecting")

    @staticmethod
    def from_vertices(vertices) -> "Region":
        """Build a region from a raw vertex list.

        Drops an explicit closing vertex (GeoJSON-style rings) and collapses
        consecutive duplicates before validating.
        """
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
        if len(v) >= 2 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if len(v) >= 2:
            keep = np.ones(len(v), dtype=bool)
            keep[1:] = (v[1:] != v[:-1]).any(axis=1)
            v = v[keep]
        return Region(v)


def _polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c) -> bool:
    # c is collinear with a-b; check it lies within the bounding box
    return (
        min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    )


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def _is_simple(v: np.ndarray) -> bool:
    m = len(v)
    for i in range(m):
        a1, a2 = v[i], v[(i + 1) % m]
        for j in range(i + 1, m):
            # skip adjacent edges (they legitimately share one endpoint)
            if j == i or (j + 1) % m == i or (i + 1) % m == j:
                continue
            if _segments_intersect(a1, a2, v[j], v[(j + 1) % m]):
                return False
    return True


def points_in_region(points: np.ndarray, region: Region) -> np.ndarray:
    """Boolean mask: even-odd rule, boundary points count as inside."""
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=bool)
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(n, dtype=bool)
    boundary = np.zeros(n, dtype=bool)
    v = region.vertices
    m = len(v)
    for k in range(m):
        x1, y1 = v[k]
        x2, y2 = v[(k + 1) % m]
        # boundary: zero cross product and inside the segment bbox
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on = (
            (cross == 0.0)
            & (px >= min(x1, x2))
            & (px <= max(x1, x2))
            & (py >= min(y1, y2))
            & (py <= max(y1, y2))
        )
        boundary |= on
        # even-odd crossing with the half-open rule, horizontal edges skipped
        crosses = (y1 > py) != (y2 > py)
        if crosses.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = (x2 - x1) * (py - y1) / (y2 - y1) + x1
            inside ^= crosses & (px < x_at)
    return inside | boundary


def region_score(ps: PointSet, region: Region, normalized: bool = False) -> Score:
    """Count (or fraction, when normalized) of the plot's points in the region."""
    count = int(points_in_region(ps.points, region).sum())
    if normalized:
        value = count / len(ps.points) if len(ps.points) else 0.0
    else:
        value = float(count)
    return Score(value, HIGHER_IS_BETTER)


# ---------------------------------------------------------------------------
# Exact earth mover's distance (desk-scale oracle)


def _cell_centers(resolution: int) -> np.ndarray:
    r = resolution
    i, j = np.divmod(np.arange(r * r), r)
    return np.column_stack([(i + 0.5) / r, (j + 0.5) / r])


def emd_exact(a: HeatmapLevel, b: HeatmapLevel) -> float:
    """Exact optimal-transport cost between two density grids.

    Ground distance is Euclidean between cell centers; both distributions
    are normalized to unit mass, then the transportation problem is solved
    to optimality by successive shortest paths. Capped at small resolutions:
    this is a validation oracle, not a query path.
    """
    if a.kind != DENSITY or b.kind != DENSITY:
        raise PreconditionError("emd_exact expects density levels")
    if a.resolution != b.resolution:
        raise IncompatibleLevelError(
            "resolutions differ: %d vs %d" % (a.resolution, b.resolution)
        )
    if a.resolution > EMD_MAX_RESOLUTION:
        raise OracleScaleError(
            "resolution %d exceeds the oracle cap %d" % (a.resolution, EMD_MAX_RESOLUTION)
        )
    wa = a.cells.astype(np.float64).ravel()
    wb = b.cells.astype(np.float64).ravel()
    if wa.sum() <= 0 or wb.sum() <= 0:
        raise ZeroDistributionError("emd is undefined for a zero distribution")
    wa = wa / wa.sum()
    wb = wb / wb.sum()

    src = np.flatnonzero(wa > 0)
    snk = np.flatnonzero(wb > 0)
    centers = _cell_centers(a.resolution)
    diff = centers[src][:, None, :] - centers[snk][None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))
    return _min_cost_transport(wa[src].copy(), wb[snk].copy(), cost)


def _min_cost_transport(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> float:
    """Balanced transportation problem via successive shortest paths.

    Node potentials keep residual reduced costs non-negative, so each phase
    is a dense Dijkstra over the bipartite residual graph; augmenting along
    the shortest path preserves optimality for the shipped amount.
    """
    m, n = cost.shape
    flow = np.zeros((m, n), dtype=np.float64)
    pot_s = np.zeros(m)
    pot_t = np.zeros(n)
    eps = 1e-14

    max_phases = 50 * (m + n) + 200
    for _ in range(max_phases):
        if supply.sum() <= 1e-12:
            break
        dist_s = np.where(supply > eps, 0.0, np.inf)
        dist_t = np.full(n, np.inf)
        settled_s = np.zeros(m, dtype=bool)
        settled_t = np.zeros(n, dtype=bool)
        parent_t = np.full(n, -1, dtype=np.int64)  # sink j reached from source parent_t[j]
        parent_s = np.full(m, -1, dtype=np.int64)  # source i reached from sink parent_s[i]

        t_star = -1
        while True:
            ds = np.where(settled_s, np.inf, dist_s)
            dt = np.where(settled_t, np.inf, dist_t)
            i = int(ds.argmin())
            j = int(dt.argmin())
            if not np.isfinite(ds[i]) and not np.isfinite(dt[j]):
                break
            if ds[i] <= dt[j]:
                settled_s[i] = True
                # forward arcs i -> every sink; reduced cost clamped at 0
                # against rounding so Dijkstra stays monotone
                red = np.maximum(cost[i, :] + pot_s[i] - pot_t, 0.0)
                nd = dist_s[i] + red
                upd = ~settled_t & (nd < dist_t)
                dist_t[upd] = nd[upd]
                parent_t[upd] = i
            else:
                if demand[j] > eps:
                    t_star = j
                    break
                settled_t[j] = True
                # backward arcs j -> i exist only where flow is positive
                red = np.maximum(-cost[:, j] - pot_s + pot_t[j], 0.0)
                nd = dist_t[j] + red
                upd = ~settled_s & (flow[:, j] > eps) & (nd < dist_s)
                dist_s[upd] = nd[upd]
                parent_s[upd] = j
        if t_star < 0:
            raise ScatterQueryError("transport phase found no augmenting path")

        d_cap = dist_t[t_star]
        pot_s += np.minimum(dist_s, d_cap)
        pot_t += np.minimum(dist_t, d_cap)

        # walk parents back to an origin source, collecting the path
        path = []  # (i, j, sign)
        j = t_star
        while True:
            i = int(parent_t[j])
            path.append((i, j, 1.0))
            if parent_s[i] < 0:
                origin = i
                break
            jb = int(parent_s[i])
            path.append((i, jb, -1.0))
            j = jb

        delta = min(supply[origin], demand[t_star])
        for i, j, sign in path:
            if sign < 0:
                delta = min(delta, flow[i, j])
        if delta <= 0:
            raise ScatterQueryError("transport augmentation stalled")
        for i, j, sign in path:
            flow[i, j] += sign * delta
        supply[origin] -= delta
        demand[t_star] -= delta
    else:
        raise ScatterQueryError("transport solver exceeded its phase budget")

    return float((flow * cost).sum())
