"""Exact retrieval against an independent brute-force oracle."""

import numpy as np
import pytest

from scene_recall.embeddings import EmbeddingRecord, EmbeddingSet, normalize
from scene_recall.errors import BadK, DimensionMismatch, EmptySet, NonFiniteComponent
from scene_recall.index import Neighbor, build_flat, query_flat


def brute_force(ids, vectors, q, k):
    """Reference scan, written independently of the index internals:
    float64 dots, sort by (similarity desc, frame_id asc), truncate."""
    sims = [float(np.dot(v.astype(np.float64), q)) for v in vectors]
    ranked = sorted(zip(ids, sims), key=lambda t: (-t[1], t[0]))
    return ranked[: min(k, len(ids))]


def make_set(seed, n, d):
    rng = np.random.Generator(np.random.PCG64(seed))
    recs = tuple(
        EmbeddingRecord(f"f{i:05d}", normalize(rng.standard_normal(d)))
        for i in range(n)
    )
    return EmbeddingSet(d, recs)


def test_two_row_exact_match():
    es = EmbeddingSet(
        2,
        (
            EmbeddingRecord("a", np.array([1, 0], dtype=np.float32)),
            EmbeddingRecord("b", np.array([0, 1], dtype=np.float32)),
        ),
    )
    ix = build_flat(es)
    out = query_flat(ix, np.array([1.0, 0.0]), 1)
    assert out == [Neighbor("a", 1.0)]


def test_two_row_derived_similarities():
    es = EmbeddingSet(
        2,
        (
            EmbeddingRecord("a", np.array([1, 0], dtype=np.float32)),
            EmbeddingRecord("b", np.array([0, 1], dtype=np.float32)),
        ),
    )
    ix = build_flat(es)
    q = normalize([0.9, 0.1]).astype(np.float64)
    out = ix.query(q, 2)
    assert [n.frame_id for n in out] == ["a", "b"]
    assert out[0].similarity == pytest.approx(0.9 / np.hypot(0.9, 0.1), abs=1e-6)
    assert out[1].similarity == pytest.approx(0.1 / np.hypot(0.9, 0.1), abs=1e-6)


def test_k_clamped_to_size():
    es = make_set(0, 2, 4)
    assert len(build_flat(es).query(es.records[0].vector, 5)) == 2


def test_empty_set_rejected():
    with pytest.raises(EmptySet):
        build_flat(EmbeddingSet(4, ()))


def test_bad_k():
    ix = build_flat(make_set(0, 3, 4))
    with pytest.raises(BadK):
        ix.query(np.zeros(4) + 0.5, 0)


def test_dimension_mismatch():
    ix = build_flat(make_set(0, 3, 4))
    with pytest.raises(DimensionMismatch):
        ix.query(np.ones(5), 1)


def test_nan_query_rejected():
    ix = build_flat(make_set(0, 3, 4))
    with pytest.raises(NonFiniteComponent):
        ix.query(np.array([np.nan, 0, 0, 0]), 1)


def test_duplicate_vectors_distinct_ids_both_retained():
    v = normalize([0.3, 0.7])
    es = EmbeddingSet(2, (EmbeddingRecord("b", v), EmbeddingRecord("a", v.copy())))
    ix = build_flat(es)
    assert ix.size == 2
    out = ix.query(v.astype(np.float64), 2)
    # identical similarity: ascending frame id breaks the tie
    assert [n.frame_id for n in out] == ["a", "b"]
    assert out[0].similarity == out[1].similarity


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("d", [8, 64])
def test_matches_brute_force_oracle(seed, d):
    rng = np.random.Generator(np.random.PCG64(seed + 500))
    n = int(rng.integers(1, 400))
    es = make_set(seed, n, d)
    ix = build_flat(es)
    ids = [r.frame_id for r in es.records]
    vectors = [r.vector for r in es.records]
    for k in (1, 3, 5):
        q = rng.standard_normal(d)
        q /= np.linalg.norm(q)
        got = [(nb.frame_id, nb.similarity) for nb in ix.query(q, k)]
        want = brute_force(ids, vectors, q, k)
        assert [g[0] for g in got] == [w[0] for w in want]
        np.testing.assert_allclose(
            [g[1] for g in got], [w[1] for w in want], rtol=0, atol=1e-12
        )


def test_similarity_bounds():
    es = make_set(3, 200, 16)
    ix = build_flat(es)
    q, _ = np.linalg.qr(np.random.Generator(np.random.PCG64(8)).standard_normal((16, 1)))
    for nb in ix.query(np.ascontiguousarray(q[:, 0]), 200):
        assert -1 - 1e-6 <= nb.similarity <= 1 + 1e-6


def test_results_non_increasing():
    es = make_set(4, 150, 8)
    ix = build_flat(es)
    out = ix.query(es.records[5].vector.astype(np.float64), 150)
    sims = [n.similarity for n in out]
    assert sims == sorted(sims, reverse=True)


def test_rows_follow_ascending_frame_id():
    # ingestion order must not leak into the index
    rng = np.random.Generator(np.random.PCG64(12)); d = 4
    recs = [EmbeddingRecord(fid, normalize(rng.standard_normal(d))) for fid in ("z", "m", "a")]
    ix = build_flat(EmbeddingSet(d, tuple(recs)))
    assert ix.ids == ("a", "m", "z")
