"""Collections and query execution: build once, query many times.

A Collection eagerly materializes, preprocesses, and bins every spec so
queries only touch cached point sets and pyramids. Builds are deterministic
for a given table + configs + seed, and query results are invariant to spec
storage order (ties break on ascending spec id).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    EmptyAfterClipError,
    IncompatiblePyramidError,
    InvalidQueryError,
    NotFoundError,
    PreconditionError,
)
from .heatmap import HeatmapPyramid, PyramidConfig, build_pyramid, to_density
from .ingest import RawPointSet, ScatterplotSpec, Table, materialize
from .preprocess import (
    Extent,
    PointSet,
    PreprocessConfig,
    clip_outliers,
    empty_point_set,
    run_pipeline,
)
from .scoring import (
    HIGHER_IS_BETTER,
    LOWER_IS_BETTER,
    Region,
    Score,
    WeightSchedule,
    default_weights,
    level_distance,
    mld,
    region_score,
)

DEFAULT_K = 20


@dataclass(frozen=True)
class RankedResult:
    spec_id: str
    score: Score
    rank: int


@dataclass(frozen=True)
class PrunedResults:
    results: list[RankedResult]
    pruned_count: int
    threshold: float

    @property
    def pruning_active(self) -> bool:
        return math.isfinite(self.threshold)


@dataclass
class Collection:
    collection_id: str
    table_name: str
    specs: list[ScatterplotSpec]
    point_sets: dict[str, PointSet]
    count_pyramids: dict[str, HeatmapPyramid]
    scoring_pyramids: dict[str, HeatmapPyramid]
    preprocess_cfg: PreprocessConfig  # shared_extent resolved, never "auto"
    pyramid_cfg: PyramidConfig
    table: Table | None = None

    @property
    def spec_ids(self) -> list[str]:
        return [s.spec_id for s in self.specs]

    def __contains__(self, spec_id: str) -> bool:
        return spec_id in self.point_sets


def _spec_seed(base_seed: int, spec_id: str) -> int:
    digest = hashlib.sha256(("%d:%s" % (base_seed, spec_id)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _config_fingerprint(table_name: str, specs, pre: PreprocessConfig, pyr: PyramidConfig) -> str:
    shared = pre.shared_extent.as_list() if isinstance(pre.shared_extent, Extent) else pre.shared_extent
    payload = json.dumps(
        {
            "table": table_name,
            "specs": [s.spec_id for s in specs],
            "preprocess": [pre.clip_low, pre.clip_high, pre.sample_cap, pre.seed, shared],
            "pyramid": [pyr.min_resolution, pyr.max_resolution, pyr.density],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _resolve_shared_extent(raws: list[RawPointSet], cfg: PreprocessConfig) -> Extent | None:
    """'auto' = union of every plot's post-clip extent; None stays per-plot."""
    if cfg.shared_extent != "auto":
        return cfg.shared_extent
    union: Extent | None = None
    for raw in raws:
        if raw.is_empty:
            continue
        try:
            clipped = clip_outliers(raw, cfg.clip_low, cfg.clip_high)
        except EmptyAfterClipError:
            continue
        ext = Extent.of_points(clipped.points)
        union = ext if union is None else union.union(ext)
    return union


def build_collection(
    table: Table,
    specs: list[ScatterplotSpec],
    preprocess_cfg: PreprocessConfig = PreprocessConfig(),
    pyramid_cfg: PyramidConfig = PyramidConfig(),
    collection_id: str | None = None,
) -> Collection:
    """Materialize, preprocess, and bin every spec.

    Plots that end up with zero points (all rows dropped, or clipping
    removed everything) are retained flagged, with all-zero pyramids, so
    ranks stay aligned with the spec list.
    """
    if not specs:
        raise PreconditionError("cannot build a collection from zero specs")
    ids = [s.spec_id for s in specs]
    if len(set(ids)) != len(ids):
        raise PreconditionError("duplicate spec ids in collection")

    raws = [materialize(table, spec) for spec in specs]
    resolved = _resolve_shared_extent(raws, preprocess_cfg)
    cfg = replace(preprocess_cfg, shared_extent=resolved)

    point_sets: dict[str, PointSet] = {}
    count_pyramids: dict[str, HeatmapPyramid] = {}
    scoring_pyramids: dict[str, HeatmapPyramid] = {}
    for spec, raw in zip(specs, raws):
        try:
            ps = run_pipeline(raw, cfg, seed=_spec_seed(cfg.seed, spec.spec_id))
        except EmptyAfterClipError:
            ps = empty_point_set(spec, resolved)
        sid = spec.spec_id
        point_sets[sid] = ps
        counts = build_pyramid(ps, pyramid_cfg)
        count_pyramids[sid] = counts
        scoring_pyramids[sid] = to_density(counts) if pyramid_cfg.density else counts

    return Collection(
        collection_id=collection_id or _config_fingerprint(table.name, specs, cfg, pyramid_cfg),
        table_name=table.name,
        specs=list(specs),
        point_sets=point_sets,
        count_pyramids=count_pyramids,
        scoring_pyramids=scoring_pyramids,
        preprocess_cfg=cfg,
        pyramid_cfg=pyramid_cfg,
        table=table,
    )


def _query_pyramid(c: Collection, query) -> tuple[HeatmapPyramid, str | None]:
    """Resolve a query into a scoring pyramid; returns (pyramid, member id to exclude)."""
    if isinstance(query, str):
        if query not in c.scoring_pyramids:
            raise NotFoundError("no plot %r in collection %r" % (query, c.collection_id))
        return c.scoring_pyramids[query], query
    if isinstance(query, HeatmapPyramid):
        ref = next(iter(c.scoring_pyramids.values()))
        if query.resolutions != ref.resolutions or query.kind != ref.kind:
            raise IncompatiblePyramidError(
                "query pyramid %r/%s does not match collection %r/%s"
                % (query.resolutions, query.kind, ref.resolutions, ref.kind)
            )
        return query, None
    # raw points in data units: run them through the collection's own pipeline
    points = np.asarray(query, dtype=np.float64).reshape(-1, 2)
    spec = ScatterplotSpec("__query_x__", "__query_y__")
    raw = RawPointSet(spec=spec, points=points[np.isfinite(points).all(axis=1)], dropped_rows=0)
    try:
        ps = run_pipeline(raw, c.preprocess_cfg, seed=_spec_seed(c.preprocess_cfg.seed, "__query__"))
    except EmptyAfterClipError:
        ps = empty_point_set(spec, c.preprocess_cfg.shared_extent)
    counts = build_pyramid(ps, c.pyramid_cfg)
    return (to_density(counts) if c.pyramid_cfg.density else counts), None


def _resolve_weights(c: Collection, weights) -> WeightSchedule:
    if weights is None:
        return default_weights(len(c.pyramid_cfg.resolutions))
    if isinstance(weights, WeightSchedule):
        return weights
    return WeightSchedule(tuple(float(w) for w in weights))


def _check_k(k) -> int | None:
    if k is None:
        return None
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise InvalidQueryError("k must be a positive integer or None for all, got %r" % (k,))
    return k


def _ranked(scored: list[tuple[float, str]], direction: str, k: int | None) -> list[RankedResult]:
    reverse = direction == HIGHER_IS_BETTER
    scored.sort(key=lambda t: (-t[0] if reverse else t[0], t[1]))
    if k is not None:
        scored = scored[:k]
    return [
        RankedResult(spec_id=sid, score=Score(value, direction), rank=i + 1)
        for i, (value, sid) in enumerate(scored)
    ]


def query_similar(c: Collection, query, k: int | None = DEFAULT_K, weights=None) -> list[RankedResult]:
    """Top-k most similar plots by ascending multi-level distance.

    ``query`` is a member spec id (excluded from its own results), a
    pre-built pyramid, or raw (x, y) points in data units.
    """
    k = _check_k(k)
    qp, exclude = _query_pyramid(c, query)
    schedule = _resolve_weights(c, weights)
    scored = [
        (mld(qp, c.scoring_pyramids[sid], schedule).value, sid)
        for sid in c.spec_ids
        if sid != exclude
    ]
    return _ranked(scored, LOWER_IS_BETTER, k)


def query_region(
    c: Collection, region: Region, k: int | None = DEFAULT_K, normalized: bool = False
) -> list[RankedResult]:
    """Top-k plots by descending count of points inside the region."""
    k = _check_k(k)
    scored = [
        (region_score(c.point_sets[sid], region, normalized).value, sid) for sid in c.spec_ids
    ]
    return _ranked(scored, HIGHER_IS_BETTER, k)


def query_similar_pruned(
    c: Collection,
    query,
    k: int | None = DEFAULT_K,
    weights=None,
    threshold: float = math.inf,
) -> PrunedResults:
    """query_similar with opt-in coarse-level pruning.

    Candidates whose weighted coarsest-level term k_1 * D already exceeds
    the threshold are skipped before finer levels are evaluated. Finite
    thresholds may drop true top-k members; threshold = +inf reproduces
    query_similar exactly.
    """
    if not (threshold >= 0):
        raise InvalidQueryError("prune threshold must be >= 0, got %r" % threshold)
    k = _check_k(k)
    qp, exclude = _query_pyramid(c, query)
    schedule = _resolve_weights(c, weights)
    if len(schedule.weights) != len(qp.levels):
        raise InvalidQueryError(
            "schedule has %d weights for %d levels" % (len(schedule.weights), len(qp.levels))
        )
    k1 = schedule.weights[0]
    scored: list[tuple[float, str]] = []
    pruned = 0
    for sid in c.spec_ids:
        if sid == exclude:
            continue
        cand = c.scoring_pyramids[sid]
        if k1 * level_distance(qp.levels[0], cand.levels[0]) > threshold:
            pruned += 1
            continue
        scored.append((mld(qp, cand, schedule).value, sid))
    return PrunedResults(
        results=_ranked(scored, LOWER_IS_BETTER, k),
        pruned_count=pruned,
        threshold=threshold,
    )
