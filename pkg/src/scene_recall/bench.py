"""Retrieval latency/throughput measurement.

Timings cover queries only — index construction and file I/O are reported
separately and never mixed into the latency percentiles. The query
workload is a pure function of the seed, so repeated runs differ only in
the timing fields.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from scene_recall.embeddings import EmbeddingSet
from scene_recall.errors import InvalidParams
from scene_recall.index.ann import AnnIndex, AnnParams, build_ann
from scene_recall.index.flat import FlatIndex, build_flat

_WARMUP = 10


@dataclass(frozen=True)
class BenchReport:
    kind: str
    backend: str
    n_vectors: int
    dimension: int
    k: int
    n_queries: int
    queries_per_s: float
    p50_us: float
    p95_us: float
    p99_us: float
    build_ms: float
    memory_bytes: int

    def __post_init__(self):
        if not self.p50_us <= self.p95_us <= self.p99_us:
            raise InvalidParams("latency percentiles must be non-decreasing")


def bench_queries(n_queries: int, dimension: int, seed: int) -> np.ndarray:
    """Deterministic unit-vector workload."""
    rng = np.random.Generator(np.random.PCG64(seed))
    q = rng.standard_normal((n_queries, dimension))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return np.ascontiguousarray(q, dtype=np.float64)


def _memory_estimate(ix: FlatIndex | AnnIndex) -> int:
    total = ix.vectors.nbytes + sum(len(fid.encode()) for fid in ix.ids)
    if isinstance(ix, AnnIndex):
        for level in range(ix.level_count):
            layer = ix.layer(level)
            total += layer.adj.nbytes + layer.deg.nbytes
    return total


def run_bench(
    es: EmbeddingSet,
    kind: str = "flat",
    k: int = 5,
    n_queries: int = 1000,
    seed: int = 0,
    backend: str = "auto",
    params: AnnParams | None = None,
) -> BenchReport:
    if n_queries <= 0:
        raise InvalidParams(f"n_queries must be >= 1, got {n_queries}")
    t0 = time.perf_counter()
    if kind == "flat":
        ix: FlatIndex | AnnIndex = build_flat(es, backend=backend)
    elif kind == "ann":
        ix = build_ann(es, params, backend=backend)
    else:
        raise InvalidParams(f"index kind must be 'flat' or 'ann', got {kind!r}")
    build_ms = (time.perf_counter() - t0) * 1e3

    queries = bench_queries(n_queries, ix.dimension, seed)
    for i in range(min(_WARMUP, n_queries)):
        ix.query(queries[i], k)

    lats = np.empty(n_queries, dtype=np.float64)
    t_all0 = time.perf_counter()
    for i in range(n_queries):
        t1 = time.perf_counter_ns()
        ix.query(queries[i], k)
        lats[i] = (time.perf_counter_ns() - t1) / 1e3
    elapsed = time.perf_counter() - t_all0

    p50, p95, p99 = np.percentile(lats, [50, 95, 99])
    return BenchReport(
        kind=kind,
        backend=ix.backend_name,
        n_vectors=ix.size,
        dimension=ix.dimension,
        k=k,
        n_queries=n_queries,
        queries_per_s=n_queries / elapsed,
        p50_us=float(p50),
        p95_us=float(p95),
        p99_us=float(p99),
        build_ms=build_ms,
        memory_bytes=_memory_estimate(ix),
    )


def report_json(reports: Sequence[BenchReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=2) + "\n"


def save_reports_csv(path: str | Path, reports: Sequence[BenchReport]) -> None:
    """One row per run."""
    fields = list(asdict(reports[0]).keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in reports:
            w.writerow([asdict(r)[f] for f in fields])
