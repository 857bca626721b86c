"""Batch CLI: build an on-disk collection from a CSV, then query it.

Mirrors the HTTP operations against a saved collection directory and
shares the same engine, so both paths rank identically. Errors exit
nonzero with the machine-readable error code on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine, storage
from .errors import InvalidQueryError, ScatterQueryError
from .heatmap import PyramidConfig
from .ingest import CsvFormat, classify_attributes, enumerate_by_category, enumerate_pairwise, load_table
from .preprocess import Extent, PreprocessConfig
from .service import parse_k, region_from_wire


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatterquery")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a collection from a CSV file")
    b.add_argument("csv", type=Path)
    mode = b.add_mutually_exclusive_group(required=True)
    mode.add_argument("--pairwise", action="store_true", help="all measure pairs")
    mode.add_argument("--category", metavar="X,Y,CAT", help="one plot per value of CAT over axes X,Y")
    b.add_argument("--out", type=Path, required=True, help="output collection directory")
    b.add_argument("--delimiter", default=",")
    b.add_argument("--decimal", default=".")
    b.add_argument("--clip-low", type=float, default=PreprocessConfig.clip_low)
    b.add_argument("--clip-high", type=float, default=PreprocessConfig.clip_high)
    b.add_argument("--sample-cap", type=int, default=PreprocessConfig.sample_cap)
    b.add_argument("--seed", type=int, default=PreprocessConfig.seed)
    b.add_argument("--shared-extent", default=None, help="'auto' or x_min,x_max,y_min,y_max")
    b.add_argument("--min-resolution", type=int, default=PyramidConfig.min_resolution)
    b.add_argument("--max-resolution", type=int, default=PyramidConfig.max_resolution)
    b.add_argument("--counts", action="store_true", help="score on raw counts instead of densities")

    q = sub.add_parser("query", help="query a built collection directory")
    q.add_argument("collection", type=Path)
    qmode = q.add_mutually_exclusive_group(required=True)
    qmode.add_argument("--like", metavar="SPEC_ID", help="similarity query by member plot id")
    qmode.add_argument("--region", metavar="POLYGON", help="inline JSON polygon or path to a GeoJSON file")
    q.add_argument("--k", default=None, help="result count (integer or 'all')")
    q.add_argument("--normalized", action="store_true", help="region scores as fractions")
    q.add_argument("--weights", default=None, help="comma-separated per-level weights")
    q.add_argument("--prune-threshold", type=float, default=None)
    q.add_argument("--json", action="store_true", help="print results as JSON")
    return parser


def _shared_extent(arg: str | None):
    if arg is None or arg == "auto":
        return arg
    parts = [float(p) for p in arg.split(",")]
    if len(parts) != 4:
        raise InvalidQueryError("--shared-extent wants 4 numbers or 'auto', got %r" % arg)
    return Extent(*parts)


def _cmd_build(args) -> int:
    table = load_table(
        args.csv.read_bytes(),
        CsvFormat(delimiter=args.delimiter, decimal=args.decimal),
        name=args.csv.stem,
    )
    catalog = classify_attributes(table)
    if args.pairwise:
        specs = enumerate_pairwise(catalog)
    else:
        parts = args.category.split(",")
        if len(parts) != 3:
            raise InvalidQueryError("--category wants X,Y,CAT, got %r" % args.category)
        specs = enumerate_by_category(parts[0], parts[1], parts[2], catalog)
    if not specs:
        raise InvalidQueryError("enumeration produced no scatterplot specs")
    pre = PreprocessConfig(
        clip_low=args.clip_low,
        clip_high=args.clip_high,
        sample_cap=args.sample_cap,
        seed=args.seed,
        shared_extent=_shared_extent(args.shared_extent),
    )
    pyr = PyramidConfig(
        min_resolution=args.min_resolution,
        max_resolution=args.max_resolution,
        density=not args.counts,
    )
    collection = engine.build_collection(table, specs, pre, pyr)
    storage.save_collection(collection, args.out)
    print("built collection %s: %d plots -> %s" % (collection.collection_id, len(specs), args.out))
    return 0


def _load_region(arg: str):
    try:
        obj = json.loads(arg)
    except json.JSONDecodeError:
        path = Path(arg)
        if not path.exists():
            raise InvalidQueryError("--region is neither inline JSON nor an existing file: %r" % arg)
        obj = json.loads(path.read_text("utf-8"))
    return region_from_wire(obj)


def _cmd_query(args) -> int:
    collection = storage.load_collection(args.collection)
    k = parse_k(int(args.k) if isinstance(args.k, str) and args.k.isdigit() else args.k, engine.DEFAULT_K)
    weights = None
    if args.weights:
        weights = [float(w) for w in args.weights.split(",")]

    if args.like is not None:
        if args.prune_threshold is None:
            results = engine.query_similar(collection, args.like, k=k, weights=weights)
        else:
            results = engine.query_similar_pruned(
                collection, args.like, k=k, weights=weights, threshold=args.prune_threshold
            ).results
    else:
        region = _load_region(args.region)
        results = engine.query_region(collection, region, k=k, normalized=args.normalized)

    if args.json:
        payload = [{"spec_id": r.spec_id, "score": r.score.value, "rank": r.rank} for r in results]
        print(json.dumps(payload, separators=(",", ":")))
    else:
        for r in results:
            print("%3d. %-40s %.6g" % (r.rank, r.spec_id, r.score.value))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "build":
            return _cmd_build(args)
        return _cmd_query(args)
    except ScatterQueryError as exc:
        print("%s: %s" % (exc.code, exc.message), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print("not-found: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
