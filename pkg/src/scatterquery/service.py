"""HTTP facade: upload CSVs, build collections, run queries.

Handlers parse JSON bodies by hand so every failure surfaces as the one
documented ApiError shape ({code, message, detail}) instead of framework
validation output. Responses are plain dicts with fixed key order, so
re-querying an unchanged collection returns byte-identical JSON.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import engine, storage
from .errors import (
    InvalidQueryError,
    InvalidRegionError,
    NotFoundError,
    CapacityError,
    ScatterQueryError,
)
from .heatmap import HeatmapPyramid, PyramidConfig
from .ingest import AttributeCatalog, CsvFormat, Table, classify_attributes, enumerate_by_category, enumerate_pairwise, load_table
from .preprocess import PointSet, PreprocessConfig
from .scoring import Region
from .engine import Collection, RankedResult

CONFIG_ENV_VAR = "SCATTERQUERY_CONFIG"

_ERROR_STATUS = {
    "not-found": 404,
    "internal-error": 500,
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8075
    max_specs: int = 5000  # synchronous-build capacity guard
    default_k: int = 20
    preview_points: int = 500
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    pyramid: PyramidConfig = field(default_factory=PyramidConfig)

    @staticmethod
    def from_dict(d: dict) -> "ServiceConfig":
        cfg = ServiceConfig()
        plain = {k: d[k] for k in ("host", "port", "max_specs", "default_k", "preview_points") if k in d}
        cfg = replace(cfg, **plain)
        cfg = replace(cfg, preprocess=merge_preprocess(cfg.preprocess, d.get("preprocess")))
        cfg = replace(cfg, pyramid=merge_pyramid(cfg.pyramid, d.get("pyramid")))
        return cfg

    @staticmethod
    def load(path: str | Path | None = None) -> "ServiceConfig":
        path = path or os.environ.get(CONFIG_ENV_VAR)
        if not path:
            return ServiceConfig()
        return ServiceConfig.from_dict(json.loads(Path(path).read_text("utf-8")))


def merge_preprocess(base: PreprocessConfig, d: dict | None) -> PreprocessConfig:
    if not d:
        return base
    allowed = {"clip_low", "clip_high", "sample_cap", "seed", "shared_extent"}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise InvalidQueryError("unknown preprocess keys: %r" % unknown)
    kwargs = dict(d)
    if "shared_extent" in kwargs:
        kwargs["shared_extent"] = storage._extent_from_json(kwargs["shared_extent"])
    return replace(base, **kwargs)


def merge_pyramid(base: PyramidConfig, d: dict | None) -> PyramidConfig:
    if not d:
        return base
    allowed = {"min_resolution", "max_resolution", "density"}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise InvalidQueryError("unknown pyramid keys: %r" % unknown)
    return replace(base, **d)


class Registry:
    """In-process store; reads are lock-free, builds serialize per dataset."""

    def __init__(self):
        self.datasets: dict[str, tuple[Table, AttributeCatalog]] = {}
        self.collections: dict[str, Collection] = {}
        self._mutex = threading.Lock()
        self._build_locks: dict[str, threading.Lock] = {}

    def build_lock(self, dataset_id: str) -> threading.Lock:
        with self._mutex:
            return self._build_locks.setdefault(dataset_id, threading.Lock())

    def dataset(self, dataset_id: str) -> tuple[Table, AttributeCatalog]:
        try:
            return self.datasets[dataset_id]
        except KeyError:
            raise NotFoundError("unknown dataset %r" % dataset_id) from None

    def collection(self, collection_id: str) -> Collection:
        try:
            return self.collections[collection_id]
        except KeyError:
            raise NotFoundError("unknown collection %r" % collection_id) from None


def catalog_dict(catalog: AttributeCatalog, row_count: int) -> dict:
    return {
        "measures": list(catalog.measures),
        "categories": list(catalog.categories),
        "stats": {
            m: {"min": s.min, "max": s.max, "missing": s.missing}
            for m, s in sorted(catalog.stats.items())
        },
        "category_cardinality": {
            c: len(v) for c, v in sorted(catalog.category_values.items())
        },
        "row_count": row_count,
    }


def region_from_wire(obj) -> Region:
    """Accept a bare [[x, y], ...] ring or a GeoJSON-style Polygon."""
    if isinstance(obj, dict):
        if obj.get("type") != "Polygon" or "coordinates" not in obj:
            raise InvalidRegionError("polygon object must be GeoJSON-style with type 'Polygon'")
        rings = obj["coordinates"]
        if not isinstance(rings, list) or not rings:
            raise InvalidRegionError("polygon has no coordinate rings")
        if len(rings) > 1:
            raise InvalidRegionError("polygons with holes are not supported")
        obj = rings[0]
    if not isinstance(obj, list):
        raise InvalidRegionError("polygon must be a list of [x, y] vertices")
    return Region.from_vertices(obj)


def parse_k(value, default_k: int) -> int | None:
    if value is None:
        return default_k
    if value == "all":
        return None
    if isinstance(value, int) and not isinstance(value, bool) and value >= 1:
        return value
    raise InvalidQueryError("k must be a positive integer or 'all', got %r" % (value,))


def _preview_point_list(ps: PointSet, cap: int) -> list[list[float]]:
    pts = ps.points
    if len(pts) > cap:
        step = -(-len(pts) // cap)
        pts = pts[::step]
    return [[float(x), float(y)] for x, y in pts]


def _preview_resolution(cfg: PyramidConfig) -> int:
    return min(max(8, cfg.min_resolution), cfg.max_resolution)


def result_payload(c: Collection, results: list[RankedResult], preview_points: int) -> list[dict]:
    r_pre = _preview_resolution(c.pyramid_cfg)
    out = []
    for res in results:
        counts = c.count_pyramids[res.spec_id]
        ps = c.point_sets[res.spec_id]
        out.append(
            {
                "spec_id": res.spec_id,
                "score": res.score.value,
                "rank": res.rank,
                "preview": {
                    "resolution": r_pre,
                    "heatmap": counts.level_at(r_pre).cells.tolist(),
                    "points": _preview_point_list(ps, preview_points),
                    "extent": ps.source_extent.as_list(),
                    "point_count": counts.point_count,
                },
            }
        )
    return out


def pyramid_dict(p: HeatmapPyramid) -> dict:
    return {
        "kind": p.kind,
        "point_count": p.point_count,
        "levels": [
            {"resolution": lvl.resolution, "cells": lvl.cells.tolist()} for lvl in p.levels
        ],
    }


async def _json_body(request: Request) -> dict:
    raw = await request.body()
    try:
        body = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InvalidQueryError("request body is not valid JSON: %s" % exc) from None
    if not isinstance(body, dict):
        raise InvalidQueryError("request body must be a JSON object")
    return body


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    cfg = config or ServiceConfig.load()
    app = FastAPI(title="scatterquery", version="0.1.0")
    registry = Registry()
    app.state.registry = registry
    app.state.config = cfg

    @app.exception_handler(ScatterQueryError)
    async def _engine_error(_request, exc: ScatterQueryError):
        status = _ERROR_STATUS.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request, delimiter: str = ",", decimal: str = "."):
        body = await request.body()
        if not body:
            raise InvalidQueryError("empty request body; expected CSV content")
        dataset_id = hashlib.sha256(body).hexdigest()[:12]
        table = load_table(body, CsvFormat(delimiter=delimiter, decimal=decimal), name=dataset_id)
        catalog = classify_attributes(table)
        registry.datasets[dataset_id] = (table, catalog)
        return {
            "dataset_id": dataset_id,
            "catalog": catalog_dict(catalog, table.row_count),
        }

    @app.post("/datasets/{dataset_id}/collections", status_code=201)
    async def build_collection(dataset_id: str, request: Request):
        body = await _json_body(request)
        table, catalog = registry.dataset(dataset_id)
        mode = body.get("mode")
        if mode == "pairwise":
            specs = enumerate_pairwise(catalog)
        elif mode == "category-split":
            for key in ("x", "y", "category"):
                if not isinstance(body.get(key), str):
                    raise InvalidQueryError("category-split requires string field %r" % key)
            specs = enumerate_by_category(body["x"], body["y"], body["category"], catalog)
        else:
            raise InvalidQueryError("mode must be 'pairwise' or 'category-split', got %r" % mode)
        if not specs:
            raise InvalidQueryError("enumeration produced no scatterplot specs")
        if len(specs) > cfg.max_specs:
            raise CapacityError(
                "collection would have %d specs; synchronous build cap is %d"
                % (len(specs), cfg.max_specs)
            )
        pre = merge_preprocess(cfg.preprocess, body.get("preprocess"))
        pyr = merge_pyramid(cfg.pyramid, body.get("pyramid"))
        with registry.build_lock(dataset_id):
            collection = engine.build_collection(table, specs, pre, pyr)
            registry.collections[collection.collection_id] = collection
        return {
            "collection_id": collection.collection_id,
            "manifest": storage.manifest_dict(collection),
        }

    @app.post("/collections/{collection_id}/query")
    async def run_query(collection_id: str, request: Request):
        body = await _json_body(request)
        collection = registry.collection(collection_id)
        k = parse_k(body.get("k"), cfg.default_k)
        qtype = body.get("type")
        pruning = None

        if qtype == "region":
            region = region_from_wire(body.get("polygon"))
            normalized = bool(body.get("normalized", False))
            results = engine.query_region(collection, region, k=k, normalized=normalized)
            direction = "higher-is-better"
        elif qtype == "similar":
            ref = body.get("ref")
            if isinstance(ref, dict) and "points" in ref:
                query = _points_from_wire(ref["points"])
            elif isinstance(ref, list):
                query = _points_from_wire(ref)
            elif isinstance(ref, str):
                query = ref
            else:
                raise InvalidQueryError(
                    "similar query needs 'ref': spec id or {'points': [[x, y], ...]}"
                )
            weights = body.get("weights")
            threshold = body.get("prune_threshold")
            if threshold is None:
                results = engine.query_similar(collection, query, k=k, weights=weights)
            else:
                if not isinstance(threshold, (int, float)) or isinstance(threshold, bool) or not math.isfinite(threshold):
                    raise InvalidQueryError("prune_threshold must be a finite number")
                pruned = engine.query_similar_pruned(
                    collection, query, k=k, weights=weights, threshold=float(threshold)
                )
                results = pruned.results
                pruning = {
                    "threshold": pruned.threshold,
                    "pruned_count": pruned.pruned_count,
                    "active": pruned.pruning_active,
                }
            direction = "lower-is-better"
        else:
            raise InvalidQueryError("query type must be 'region' or 'similar', got %r" % qtype)

        return {
            "collection_id": collection_id,
            "type": qtype,
            "direction": direction,
            "pruning": pruning,
            "results": result_payload(collection, results, cfg.preview_points),
        }

    @app.get("/collections/{collection_id}/plots/{spec_id}")
    async def get_plot(collection_id: str, spec_id: str):
        collection = registry.collection(collection_id)
        if spec_id not in collection.point_sets:
            raise NotFoundError("no plot %r in collection %r" % (spec_id, collection_id))
        ps = collection.point_sets[spec_id]
        spec = next(s for s in collection.specs if s.spec_id == spec_id)
        return {
            "spec": storage.spec_to_dict(spec),
            "points": [[float(x), float(y)] for x, y in ps.points],
            "source_extent": ps.source_extent.as_list(),
            "n_before_sampling": ps.n_before_sampling,
            "empty": ps.is_empty,
            "pyramid": pyramid_dict(collection.count_pyramids[spec_id]),
        }

    return app


def _points_from_wire(obj) -> np.ndarray:
    try:
        pts = np.asarray(obj, dtype=np.float64)
    except (ValueError, TypeError):
        raise InvalidQueryError("inline points must be numeric [x, y] pairs") from None
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidQueryError("inline points must be a list of [x, y] pairs")
    return pts
