#!/usr/bin/env python3
"""Measure similarity-query latency over a synthetic pairwise collection.

Usage: python scripts/benchmark_query.py [--measures 20] [--rows 300]
"""

import argparse

import numpy as np

from scatterquery import build_collection, classify_attributes, enumerate_pairwise, load_table
from scatterquery.bench import measure_query_similar
from scatterquery.heatmap import PyramidConfig
from scatterquery.preprocess import PreprocessConfig


def synthetic_csv(n_measures: int, rows: int, seed: int = 7) -> str:
    rng = np.random.default_rng(seed)
    names = ["attr_%02d" % j for j in range(n_measures)]
    data = rng.normal(0, 1, (rows, n_measures))
    lines = [",".join(names)]
    lines += [",".join("%.6f" % v for v in row) for row in data]
    return "\n".join(lines) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--measures", type=int, default=20)
    parser.add_argument("--rows", type=int, default=300)
    parser.add_argument("--min-resolution", type=int, default=2)
    parser.add_argument("--max-resolution", type=int, default=64)
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=25)
    args = parser.parse_args()

    table = load_table(synthetic_csv(args.measures, args.rows))
    specs = enumerate_pairwise(classify_attributes(table))
    print("building collection: %d specs, resolutions %d..%d" % (
        len(specs), args.min_resolution, args.max_resolution))
    collection = build_collection(
        table,
        specs,
        PreprocessConfig(),
        PyramidConfig(args.min_resolution, args.max_resolution),
    )
    stats = measure_query_similar(collection, collection.spec_ids[0], k=args.k, repeats=args.repeats)
    print(
        "query_similar over %d plots: best %.2fms  median %.2fms  worst %.2fms (%d repeats)"
        % (
            stats["candidates"],
            stats["best"] * 1e3,
            stats["median"] * 1e3,
            stats["worst"] * 1e3,
            stats["repeats"],
        )
    )
    target = 0.1
    print("interactive target %.0fms: %s" % (target * 1e3, "met" if stats["median"] < target else "MISSED"))


if __name__ == "__main__":
    main()
