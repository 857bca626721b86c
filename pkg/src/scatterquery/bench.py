"""Latency measurement for the interactive-query target."""

from __future__ import annotations

import time

from . import engine
from .engine import Collection


def measure_query_similar(c: Collection, query, k: int | None = 20, repeats: int = 7) -> dict:
    """Time query_similar on one thread; returns seconds as best/median/worst."""
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        engine.query_similar(c, query, k=k)
        samples.append(time.perf_counter() - t0)
    samples.sort()
    return {
        "best": samples[0],
        "median": samples[len(samples) // 2],
        "worst": samples[-1],
        "repeats": repeats,
        "candidates": len(c.specs),
    }
