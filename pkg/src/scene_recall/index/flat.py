"""Exact cosine retrieval: an exhaustive scan over unit vectors.

Rows are held in ascending frame-id order so the kernels' ordinal
tie-break (smallest ordinal on equal similarity) realizes the documented
smallest-frame-id rule. This index is the correctness reference the ANN
index is measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scene_recall.embeddings import EmbeddingSet
from scene_recall.errors import BadK, DimensionMismatch, EmptySet, NonFiniteComponent
from scene_recall.kernels import get_backend


@dataclass(frozen=True)
class Neighbor:
    """One retrieval hit: frame id plus cosine similarity."""

    frame_id: str
    similarity: float


def sorted_rows(es: EmbeddingSet) -> tuple[np.ndarray, tuple[str, ...]]:
    """Contiguous float32 matrix and ids, both in ascending frame-id order."""
    order = sorted(range(len(es.records)), key=lambda i: es.records[i].frame_id)
    mat = np.ascontiguousarray(
        np.stack([es.records[i].vector for i in order]), dtype=np.float32
    )
    ids = tuple(es.records[i].frame_id for i in order)
    return mat, ids


def prepare_query(q, dimension: int) -> np.ndarray:
    """Validate a query vector and return it as float64."""
    qv = np.asarray(q, dtype=np.float64)
    if qv.ndim != 1 or qv.shape[0] != dimension:
        raise DimensionMismatch(
            f"query shape {qv.shape} does not match index dimension {dimension}"
        )
    if not np.isfinite(qv).all():
        raise NonFiniteComponent("query contains NaN or Inf")
    return np.ascontiguousarray(qv)


class FlatIndex:
    """Exhaustive exact top-k index over an embedding set."""

    kind = "flat"

    def __init__(self, mat: np.ndarray, ids: tuple[str, ...], backend: str = "auto"):
        if mat.shape[0] != len(ids):
            raise DimensionMismatch(
                f"{mat.shape[0]} rows but {len(ids)} ids"
            )
        self._mat = mat
        self._ids = ids
        self._backend = get_backend(backend)
        self._mat64: np.ndarray | None = None  # lazy cache for the numpy backend

    @property
    def dimension(self) -> int:
        return self._mat.shape[1]

    @property
    def size(self) -> int:
        return self._mat.shape[0]

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def vectors(self) -> np.ndarray:
        return self._mat

    @property
    def backend_name(self) -> str:
        return self._backend.BACKEND_NAME

    def _scan_matrix(self) -> np.ndarray:
        if self._backend.BACKEND_NAME != "python":
            return self._mat
        if self._mat64 is None:
            self._mat64 = self._mat.astype(np.float64)
        return self._mat64

    def query(self, q, k: int) -> list[Neighbor]:
        """Exact top-k by dot product; ties broken by ascending frame id."""
        if k < 1:
            raise BadK(f"k must be >= 1, got {k}")
        qv = prepare_query(q, self.dimension)
        ords, sims = self._backend.flat_topk(self._scan_matrix(), qv, k)
        return [Neighbor(self._ids[o], float(s)) for o, s in zip(ords, sims)]


def build_flat(es: EmbeddingSet, backend: str = "auto") -> FlatIndex:
    """Index exactly the set's records; raises EmptySet on an empty set."""
    if len(es.records) == 0:
        raise EmptySet("cannot build an index over zero records")
    mat, ids = sorted_rows(es)
    return FlatIndex(mat, ids, backend=backend)


def query_flat(ix: FlatIndex, q, k: int) -> list[Neighbor]:
    return ix.query(q, k)
