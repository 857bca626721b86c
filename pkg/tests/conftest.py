"""Shared fixtures: synthetic datasets, point-set builders, random polygons."""

from __future__ import annotations

import numpy as np
import pytest

from scatterquery.heatmap import DENSITY, HeatmapLevel, HeatmapPyramid
from scatterquery.ingest import ScatterplotSpec
from scatterquery.preprocess import Extent, PointSet

SHOT_TYPES = ["dunk", "hook shot", "jump shot", "layup", "tip shot"]
EVENT_TYPES = ["free throw", "rebound", "shot"]
TEAMS = ["Bulldogs", "Eagles", "Tigers", "Wildcats"]


def make_ncaa_csv(rows: int = 120, seed: int = 42, missing_every: int = 17) -> str:
    """Play-by-play style fixture: two court coordinates plus categories."""
    rng = np.random.default_rng(seed)
    lines = ["event_coord_x,event_coord_y,event_type,shot_type,team_name,points_scored"]
    for i in range(rows):
        x = rng.uniform(0, 94)
        y = rng.uniform(0, 50)
        event = EVENT_TYPES[int(rng.integers(len(EVENT_TYPES)))]
        shot = SHOT_TYPES[int(rng.integers(len(SHOT_TYPES)))]
        team = TEAMS[int(rng.integers(len(TEAMS)))]
        pts = int(rng.integers(0, 4))
        x_cell = "" if missing_every and i % missing_every == 3 else "%.3f" % x
        y_cell = "" if missing_every and i % missing_every == 9 else "%.3f" % y
        lines.append("%s,%s,%s,%s,%s,%d" % (x_cell, y_cell, event, shot, team, pts))
    return "\n".join(lines) + "\n"


def make_communities_csv(n_measures: int = 20, rows: int = 300, seed: int = 7) -> str:
    """Wide numeric fixture with built-in correlation structure.

    Columns attr_00/attr_01 follow a latent factor, attr_02/attr_03 follow
    its negation, so (attr_00, attr_02) shows an inverse trend with three
    sibling pairs; the rest is independent noise.
    """
    rng = np.random.default_rng(seed)
    latent = rng.normal(0, 1, rows)
    cols = []
    for j in range(n_measures):
        if j in (0, 1):
            col = latent * 1.0 + rng.normal(0, 0.25, rows) + j
        elif j in (2, 3):
            col = -latent + rng.normal(0, 0.25, rows) + j
        else:
            col = rng.normal(0, 1, rows) * (1 + j / 10)
        cols.append(col)
    names = ["attr_%02d" % j for j in range(n_measures)]
    lines = [",".join(names)]
    for i in range(rows):
        lines.append(",".join("%.6f" % cols[j][i] for j in range(n_measures)))
    return "\n".join(lines) + "\n"


def make_pointset(points, name: str = "fixture") -> PointSet:
    """Wrap already-normalized coordinates in a PointSet (clipped to [0,1])."""
    pts = np.clip(np.asarray(points, dtype=np.float64).reshape(-1, 2), 0.0, 1.0)
    return PointSet(
        spec=ScatterplotSpec("%s_x" % name, "%s_y" % name),
        points=pts,
        source_extent=Extent(0.0, 1.0, 0.0, 1.0),
        n_before_sampling=len(pts),
    )


def random_density_level(rng: np.random.Generator, resolution: int) -> HeatmapLevel:
    cells = rng.random((resolution, resolution))
    return HeatmapLevel(resolution, cells / cells.sum(), DENSITY)


def random_density_pyramid(rng: np.random.Generator, resolutions=(2, 4, 8, 16), spec_id="rand") -> HeatmapPyramid:
    levels = tuple(random_density_level(rng, r) for r in resolutions)
    return HeatmapPyramid(spec_id=spec_id, levels=levels, point_count=1)


def star_polygon(rng: np.random.Generator, n_vertices: int) -> np.ndarray:
    """Random simple polygon: sorted angles around an interior center."""
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
        if np.min(np.diff(angles)) > 1e-4:
            break
    cx, cy = rng.uniform(0.3, 0.7, 2)
    max_r = min(cx, 1 - cx, cy, 1 - cy) - 0.01
    radii = rng.uniform(0.02, max_r, n_vertices)
    return np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])


def point_in_polygon_oracle(px: float, py: float, verts: np.ndarray) -> bool:
    """Scalar even-odd point-in-polygon test, boundary counted as inside."""
    m = len(verts)
    for k in range(m):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % m]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if (
            cross == 0
            and min(x1, x2) <= px <= max(x1, x2)
            and min(y1, y2) <= py <= max(y1, y2)
        ):
            return True
    inside = False
    for k in range(m):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % m]
        if (y1 <= py < y2) or (y2 <= py < y1):
            t = (py - y1) / (y2 - y1)
            if px < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def emd_lp_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Transportation LP solved by a general-purpose solver (scipy HiGHS)."""
    from scipy.optimize import linprog

    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    a = a / a.sum()
    b = b / b.sum()
    r = int(round(len(a) ** 0.5))
    i, j = np.divmod(np.arange(r * r), r)
    centers = np.column_stack([(i + 0.5) / r, (j + 0.5) / r])
    diff = centers[:, None, :] - centers[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))

    m = n = r * r
    rows = []
    rhs = []
    for s in range(m):
        row = np.zeros((m, n))
        row[s, :] = 1.0
        rows.append(row.ravel())
        rhs.append(a[s])
    for t in range(n - 1):  # drop one redundant balance constraint
        row = np.zeros((m, n))
        row[:, t] = 1.0
        rows.append(row.ravel())
        rhs.append(b[t])
    res = linprog(
        cost.ravel(), A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs"
    )
    assert res.success, res.message
    return float(res.fun)


@pytest.fixture(scope="session")
def ncaa_csv() -> str:
    return make_ncaa_csv()


@pytest.fixture(scope="session")
def communities_csv() -> str:
    return make_communities_csv()
