"""Embedding records, the EMB1 binary file format, and synthetic workloads.

Vectors are float32 and unit-normalized at ingestion so cosine similarity
downstream is a plain dot product. The file format is little-endian and
fully deterministic: writing the same set twice yields identical bytes.

EMB1 layout:
    magic   4 bytes  b"EMB1"
    version u16      1
    dim     u32
    count   u64
    records count times:
        id_len  u16   byte length of the UTF-8 id
        id      id_len bytes
        vector  dim * f32
No padding, no alignment.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from scene_recall.errors import (
    BadMagic,
    DuplicateFrameId,
    InvalidParams,
    NonFiniteComponent,
    NotNormalized,
    TruncatedFile,
    VersionUnsupported,
    ZeroVector,
)
from scene_recall.schema import AnnotationRecord, AttributeDef, AttributeSchema

MAGIC = b"EMB1"
VERSION = 1
NORM_TOL = 1e-6

_HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, count
_ID_LEN = struct.Struct("<H")


def normalize(vector) -> np.ndarray:
    """Return the float32 unit vector pointing the same way as `vector`.

    Raises ZeroVector on zero norm and NonFiniteComponent on NaN/Inf.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidParams(f"expected a 1-d vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise NonFiniteComponent("vector contains NaN or Inf")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return (v / norm).astype(np.float32)


@dataclass(frozen=True)
class EmbeddingRecord:
    """One frame id with its unit-normalized float32 vector."""

    frame_id: str
    vector: np.ndarray

    def __post_init__(self):
        v = self.vector
        if v.dtype != np.float32 or v.ndim != 1:
            raise InvalidParams(
                f"record {self.frame_id!r}: vector must be 1-d float32, "
                f"got {v.dtype} with shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise NonFiniteComponent(f"record {self.frame_id!r} contains NaN or Inf")
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if abs(norm - 1.0) > NORM_TOL:
            raise NotNormalized(
                f"record {self.frame_id!r} has L2 norm {norm!r}, expected 1 ± {NORM_TOL}"
            )


@dataclass(frozen=True)
class EmbeddingSet:
    """Records of a common dimension with unique frame ids, order preserved."""

    dimension: int
    records: tuple[EmbeddingRecord, ...]

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))
        if self.dimension < 1:
            raise InvalidParams(f"dimension must be >= 1, got {self.dimension}")
        seen: set[str] = set()
        for rec in self.records:
            if rec.vector.shape[0] != self.dimension:
                raise InvalidParams(
                    f"record {rec.frame_id!r} has dimension {rec.vector.shape[0]}, "
                    f"set declares {self.dimension}"
                )
            if rec.frame_id in seen:
                raise DuplicateFrameId(f"frame id {rec.frame_id!r} appears twice")
            seen.add(rec.frame_id)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def frame_ids(self) -> tuple[str, ...]:
        return tuple(r.frame_id for r in self.records)


# -- binary format ---------------------------------------------------------


def _pack_body(es: EmbeddingSet) -> bytes:
    """dim + count + records; everything after magic and version."""
    out = bytearray(struct.pack("<IQ", es.dimension, len(es.records)))
    for rec in es.records:
        rid = rec.frame_id.encode("utf-8")
        if len(rid) > 0xFFFF:
            raise InvalidParams(f"frame id longer than 65535 bytes: {rec.frame_id[:40]!r}...")
        out += _ID_LEN.pack(len(rid))
        out += rid
        out += rec.vector.astype("<f4", copy=False).tobytes()
    return bytes(out)


class _Cursor:
    """Sequential reader raising TruncatedFile on short reads."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def done(self) -> None:
        if self.pos != len(self.data):
            raise TruncatedFile(
                f"{len(self.data) - self.pos} unexpected bytes after payload"
            )


def _unpack_body(cur: _Cursor) -> EmbeddingSet:
    dim, count = struct.unpack("<IQ", cur.take(12))
    records = []
    for _ in range(count):
        (id_len,) = _ID_LEN.unpack(cur.take(2))
        frame_id = cur.take(id_len).decode("utf-8")
        vec = np.frombuffer(cur.take(4 * dim), dtype="<f4").copy()
        records.append(EmbeddingRecord(frame_id, vec))
    return EmbeddingSet(dim, tuple(records))


def write_embeddings(es: EmbeddingSet, path: str | Path) -> None:
    """Write the EMB1 file; byte-identical output for identical input."""
    blob = MAGIC + struct.pack("<H", VERSION) + _pack_body(es)
    Path(path).write_bytes(blob)


def read_embeddings(path: str | Path) -> EmbeddingSet:
    """Read an EMB1 file; exact inverse of write_embeddings."""
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    magic = cur.take(4)
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, found {magic!r}")
    (version,) = struct.unpack("<H", cur.take(2))
    if version != VERSION:
        raise VersionUnsupported(f"embedding file version {version}, supported: {VERSION}")
    es = _unpack_body(cur)
    cur.done()
    return es


# -- synthetic workloads -----------------------------------------------------


def synth_schema(n_clusters: int) -> AttributeSchema:
    """Companion schema for synth_embeddings: attribute 0 is the cluster id."""
    cluster = AttributeDef(
        "cluster", tuple((c, f"cluster {c}") for c in range(max(n_clusters, 2)))
    )
    return AttributeSchema((cluster,), version="synthetic")


def synth_embeddings(
    seed: int,
    n_clusters: int = 10,
    per_cluster: int = 1000,
    d: int = 64,
    noise_scale: float = 0.05,
) -> tuple[EmbeddingSet, list[AnnotationRecord]]:
    """Deterministic clustered embeddings with cluster-id annotations.

    Cluster c centers on the axis unit vector e_c; Gaussian noise of scale
    `noise_scale` is added and the result renormalized. A fixed seed yields
    bit-identical output on any platform.
    """
    if n_clusters < 1 or per_cluster < 1:
        raise InvalidParams("n_clusters and per_cluster must be >= 1")
    if d < n_clusters:
        raise InvalidParams(f"d={d} must be >= n_clusters={n_clusters}")
    if noise_scale < 0:
        raise InvalidParams(f"noise_scale must be >= 0, got {noise_scale}")
    rng = np.random.Generator(np.random.PCG64(seed))
    records = []
    annotations = []
    for c in range(n_clusters):
        base = np.zeros(d, dtype=np.float64)
        base[c] = 1.0
        noise = rng.standard_normal((per_cluster, d)) * noise_scale
        for i in range(per_cluster):
            vec = normalize(base + noise[i])
            frame_id = f"c{c:02d}_f{i:04d}"
            records.append(EmbeddingRecord(frame_id, vec))
            annotations.append(AnnotationRecord(frame_id, (c,)))
    return EmbeddingSet(d, tuple(records)), annotations


def synth_queries(
    seed: int,
    n_queries: int,
    n_clusters: int = 10,
    d: int = 64,
    noise_scale: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Query workload drawn from the same clustered distribution.

    Returns (queries, cluster_ids): queries is an (n_queries, d) float32
    array of unit vectors cycling through the clusters; a pure function of
    its arguments.
    """
    if n_queries < 1:
        raise InvalidParams(f"n_queries must be >= 1, got {n_queries}")
    if d < n_clusters or n_clusters < 1:
        raise InvalidParams(f"need 1 <= n_clusters <= d, got {n_clusters}, {d}")
    if noise_scale < 0:
        raise InvalidParams(f"noise_scale must be >= 0, got {noise_scale}")
    rng = np.random.Generator(np.random.PCG64(seed))
    queries = np.empty((n_queries, d), dtype=np.float32)
    labels = np.empty(n_queries, dtype=np.int64)
    for i in range(n_queries):
        c = i % n_clusters
        base = np.zeros(d, dtype=np.float64)
        base[c] = 1.0
        queries[i] = normalize(base + rng.standard_normal(d) * noise_scale)
        labels[i] = c
    return queries, labels
