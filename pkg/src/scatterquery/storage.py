"""On-disk collection format: manifest.json + pyramids.bin + points.bin.

Everything is written with fixed ordering and no timestamps so rebuilding
the same collection produces byte-identical files. Pyramids are persisted
in counts kind (exact uint32 round-trip); density views are re-derived on
load when the manifest asks for them.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .engine import Collection
from .errors import ParseError
from .heatmap import COUNTS, DENSITY, HeatmapLevel, HeatmapPyramid, PyramidConfig, to_density
from .ingest import Filter, ScatterplotSpec
from .preprocess import Extent, PointSet, PreprocessConfig

PYRAMID_MAGIC = b"SQPYR1\n"
POINTS_MAGIC = b"SQPTS1\n"

MANIFEST_FILE = "manifest.json"
PYRAMIDS_FILE = "pyramids.bin"
POINTS_FILE = "points.bin"


def spec_to_dict(spec: ScatterplotSpec) -> dict:
    return {
        "x": spec.x_attr,
        "y": spec.y_attr,
        "filter": None
        if spec.filter is None
        else {"attr": spec.filter.attr, "value": spec.filter.value},
        "id": spec.spec_id,
    }


def spec_from_dict(d: dict) -> ScatterplotSpec:
    f = d.get("filter")
    filt = None
    if f is not None:
        value = f["value"]
        filt = Filter(f["attr"], float(value) if isinstance(value, (int, float)) else value)
    return ScatterplotSpec(d["x"], d["y"], filt)


def _extent_to_json(e: Extent | str | None):
    return e.as_list() if isinstance(e, Extent) else e


def _extent_from_json(v) -> Extent | str | None:
    if v is None or isinstance(v, str):
        return v
    return Extent(*[float(x) for x in v])


def manifest_dict(c: Collection) -> dict:
    pre, pyr = c.preprocess_cfg, c.pyramid_cfg
    return {
        "collection_id": c.collection_id,
        "table_name": c.table_name,
        "specs": [spec_to_dict(s) for s in c.specs],
        "preprocess": {
            "clip_low": pre.clip_low,
            "clip_high": pre.clip_high,
            "sample_cap": pre.sample_cap,
            "seed": pre.seed,
            "shared_extent": _extent_to_json(pre.shared_extent),
        },
        "pyramid": {
            "min_resolution": pyr.min_resolution,
            "max_resolution": pyr.max_resolution,
            "density": pyr.density,
        },
    }


def configs_from_manifest(m: dict) -> tuple[PreprocessConfig, PyramidConfig]:
    pre = m["preprocess"]
    pyr = m["pyramid"]
    return (
        PreprocessConfig(
            clip_low=pre["clip_low"],
            clip_high=pre["clip_high"],
            sample_cap=pre["sample_cap"],
            seed=pre["seed"],
            shared_extent=_extent_from_json(pre["shared_extent"]),
        ),
        PyramidConfig(
            min_resolution=pyr["min_resolution"],
            max_resolution=pyr["max_resolution"],
            density=pyr["density"],
        ),
    )


def _dumps(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def write_pyramids(pyramids: list[HeatmapPyramid], fh: io.BufferedIOBase) -> None:
    kind = pyramids[0].kind if pyramids else COUNTS
    header = {
        "kind": kind,
        "resolutions": list(pyramids[0].resolutions) if pyramids else [],
        "entries": [{"spec_id": p.spec_id, "point_count": p.point_count} for p in pyramids],
    }
    fh.write(PYRAMID_MAGIC)
    fh.write(_dumps(header))
    dtype = "<u4" if kind == COUNTS else "<f4"
    for p in pyramids:
        for lvl in p.levels:
            fh.write(np.ascontiguousarray(lvl.cells, dtype=dtype).tobytes())


def read_pyramids(fh: io.BufferedIOBase) -> list[HeatmapPyramid]:
    if fh.read(len(PYRAMID_MAGIC)) != PYRAMID_MAGIC:
        raise ParseError("not a pyramid cache file")
    header = json.loads(fh.readline().decode("utf-8"))
    kind = header["kind"]
    resolutions = header["resolutions"]
    dtype = "<u4" if kind == COUNTS else "<f4"
    cell_dtype = np.int64 if kind == COUNTS else np.float64
    out = []
    for entry in header["entries"]:
        levels = []
        for r in resolutions:
            buf = fh.read(r * r * 4)
            if len(buf) != r * r * 4:
                raise ParseError("truncated pyramid cache")
            cells = np.frombuffer(buf, dtype=dtype).reshape(r, r).astype(cell_dtype)
            levels.append(HeatmapLevel(r, cells, kind))
        out.append(
            HeatmapPyramid(
                spec_id=entry["spec_id"], levels=tuple(levels), point_count=entry["point_count"]
            )
        )
    return out


def write_points(point_sets: list[PointSet], fh: io.BufferedIOBase) -> None:
    header = {
        "entries": [
            {
                "spec_id": ps.spec.spec_id,
                "n": len(ps.points),
                "extent": ps.source_extent.as_list(),
                "n_before_sampling": ps.n_before_sampling,
            }
            for ps in point_sets
        ]
    }
    fh.write(POINTS_MAGIC)
    fh.write(_dumps(header))
    for ps in point_sets:
        fh.write(np.ascontiguousarray(ps.points, dtype="<f8").tobytes())


def read_points(fh: io.BufferedIOBase, specs: dict[str, ScatterplotSpec]) -> dict[str, PointSet]:
    if fh.read(len(POINTS_MAGIC)) != POINTS_MAGIC:
        raise ParseError("not a points cache file")
    header = json.loads(fh.readline().decode("utf-8"))
    out = {}
    for entry in header["entries"]:
        n = entry["n"]
        buf = fh.read(n * 2 * 8)
        if len(buf) != n * 2 * 8:
            raise ParseError("truncated points cache")
        pts = np.frombuffer(buf, dtype="<f8").reshape(n, 2).astype(np.float64)
        sid = entry["spec_id"]
        out[sid] = PointSet(
            spec=specs[sid],
            points=pts,
            source_extent=Extent(*entry["extent"]),
            n_before_sampling=entry["n_before_sampling"],
        )
    return out


def save_collection(c: Collection, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / MANIFEST_FILE).write_bytes(_dumps(manifest_dict(c)))
    with open(directory / PYRAMIDS_FILE, "wb") as fh:
        write_pyramids([c.count_pyramids[sid] for sid in c.spec_ids], fh)
    with open(directory / POINTS_FILE, "wb") as fh:
        write_points([c.point_sets[sid] for sid in c.spec_ids], fh)
    return directory


def load_collection(directory: str | Path) -> Collection:
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_FILE).read_text("utf-8"))
    pre_cfg, pyr_cfg = configs_from_manifest(manifest)
    specs = [spec_from_dict(d) for d in manifest["specs"]]
    by_id = {s.spec_id: s for s in specs}

    with open(directory / PYRAMIDS_FILE, "rb") as fh:
        counts = {p.spec_id: p for p in read_pyramids(fh)}
    with open(directory / POINTS_FILE, "rb") as fh:
        point_sets = read_points(fh, by_id)

    scoring = {
        sid: to_density(p) if pyr_cfg.density else p for sid, p in counts.items()
    }
    return Collection(
        collection_id=manifest["collection_id"],
        table_name=manifest["table_name"],
        specs=specs,
        point_sets=point_sets,
        count_pyramids=counts,
        scoring_pyramids=scoring,
        preprocess_cfg=pre_cfg,
        pyramid_cfg=pyr_cfg,
        table=None,
    )
