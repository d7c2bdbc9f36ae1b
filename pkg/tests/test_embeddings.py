import struct

import numpy as np
import pytest

from scene_recall.embeddings import (
    EmbeddingRecord,
    EmbeddingSet,
    normalize,
    read_embeddings,
    synth_embeddings,
    synth_queries,
    synth_schema,
    write_embeddings,
)
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


def unit(vec):
    return EmbeddingRecord("x", normalize(np.asarray(vec, dtype=np.float64)))


def test_normalize_three_four_five():
    out = normalize([3.0, 4.0])
    assert out.dtype == np.float32
    np.testing.assert_allclose(out, [0.6, 0.8], rtol=0, atol=1e-7)


def test_normalize_identity_on_unit_vector():
    np.testing.assert_array_equal(normalize([1.0, 0.0]), np.array([1, 0], dtype=np.float32))


def test_normalize_zero_vector():
    with pytest.raises(ZeroVector):
        normalize([0.0, 0.0])


def test_normalize_rejects_nan_and_inf():
    with pytest.raises(NonFiniteComponent):
        normalize([np.nan, 1.0])
    with pytest.raises(NonFiniteComponent):
        normalize([np.inf, 1.0])


def test_normalize_rejects_matrix():
    with pytest.raises(InvalidParams):
        normalize([[1.0, 0.0]])


def test_record_rejects_unnormalized_vector():
    with pytest.raises(NotNormalized):
        EmbeddingRecord("a", np.array([0.5, 0.5], dtype=np.float32))


def test_record_rejects_float64():
    with pytest.raises(InvalidParams):
        EmbeddingRecord("a", np.array([1.0, 0.0], dtype=np.float64))


def test_set_rejects_duplicate_ids():
    r = EmbeddingRecord("a", np.array([1, 0], dtype=np.float32))
    with pytest.raises(DuplicateFrameId):
        EmbeddingSet(2, (r, r))


def test_set_rejects_dimension_mismatch():
    a = EmbeddingRecord("a", np.array([1, 0], dtype=np.float32))
    b = EmbeddingRecord("b", np.array([1, 0, 0], dtype=np.float32))
    with pytest.raises(InvalidParams):
        EmbeddingSet(2, (a, b))


# -- EMB1 binary format -----


def test_write_one_record_body_is_25_bytes_after_magic(tmp_path):
    # version(2) + dim(4) + count(8) + [id_len(2) + "a"(1) + 2*f32(8)] = 25
    es = EmbeddingSet(2, (EmbeddingRecord("a", np.array([1, 0], dtype=np.float32)),))
    path = tmp_path / "one.emb1"
    write_embeddings(es, path)
    data = path.read_bytes()
    assert data[:4] == b"EMB1"
    assert len(data) - 4 == 25
    assert len(data) == 29


def test_write_empty_set_is_header_only(tmp_path):
    path = tmp_path / "empty.emb1"
    write_embeddings(EmbeddingSet(4, ()), path)
    data = path.read_bytes()
    magic, version, dim, count = struct.unpack("<4sHIQ", data)
    assert (magic, version, dim, count) == (b"EMB1", 1, 4, 0)


def test_round_trip_bit_exact(tmp_path):
    es, _ = synth_embeddings(seed=5, n_clusters=3, per_cluster=4, d=8)
    path = tmp_path / "set.emb1"
    write_embeddings(es, path)
    back = read_embeddings(path)
    assert back.dimension == es.dimension
    assert back.frame_ids == es.frame_ids
    for a, b in zip(es.records, back.records):
        assert a.vector.tobytes() == b.vector.tobytes()


def test_write_is_deterministic(tmp_path):
    es, _ = synth_embeddings(seed=5, n_clusters=2, per_cluster=3, d=4)
    p1, p2 = tmp_path / "a.emb1", tmp_path / "b.emb1"
    write_embeddings(es, p1)
    write_embeddings(es, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.emb1"
    path.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(BadMagic):
        read_embeddings(path)


def test_read_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.emb1"
    path.write_bytes(b"EMB1" + struct.pack("<H", 9) + struct.pack("<IQ", 2, 0))
    with pytest.raises(VersionUnsupported):
        read_embeddings(path)


def test_read_rejects_truncation(tmp_path):
    es, _ = synth_embeddings(seed=5, n_clusters=2, per_cluster=3, d=4)
    path = tmp_path / "cut.emb1"
    write_embeddings(es, path)
    whole = path.read_bytes()
    path.write_bytes(whole[:-3])
    with pytest.raises(TruncatedFile):
        read_embeddings(path)


def test_read_rejects_trailing_garbage(tmp_path):
    es, _ = synth_embeddings(seed=5, n_clusters=2, per_cluster=3, d=4)
    path = tmp_path / "extra.emb1"
    write_embeddings(es, path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(TruncatedFile):
        read_embeddings(path)


def test_read_rejects_nan_payload(tmp_path):
    es = EmbeddingSet(2, (EmbeddingRecord("a", np.array([1, 0], dtype=np.float32)),))
    path = tmp_path / "nan.emb1"
    write_embeddings(es, path)
    data = bytearray(path.read_bytes())
    data[-8:-4] = struct.pack("<f", float("nan"))
    path.write_bytes(bytes(data))
    with pytest.raises(NonFiniteComponent):
        read_embeddings(path)


# -- synthetic workloads -----


def test_synth_zero_noise_is_axis_vectors():
    es, anns = synth_embeddings(seed=7, n_clusters=2, per_cluster=3, d=4, noise_scale=0.0)
    assert len(es) == 6
    eye = np.eye(4, dtype=np.float32)
    for rec, ann in zip(es.records, anns):
        c = ann.values[0]
        np.testing.assert_array_equal(rec.vector, eye[c])


def test_synth_same_seed_identical_bytes(tmp_path):
    for i, p in enumerate(["a.emb1", "b.emb1"]):
        es, _ = synth_embeddings(seed=42, n_clusters=3, per_cluster=5, d=8)
        write_embeddings(es, tmp_path / p)
    assert (tmp_path / "a.emb1").read_bytes() == (tmp_path / "b.emb1").read_bytes()


def test_synth_small_noise_stays_near_center():
    # noise 0.05 keeps vectors tight around their centers: mean cosine to
    # the center stays above 0.99 (individual draws can tail below it)
    es, anns = synth_embeddings(seed=7, n_clusters=2, per_cluster=50, d=4, noise_scale=0.05)
    cosines = [rec.vector[ann.values[0]] for rec, ann in zip(es.records, anns)]
    assert np.mean(cosines) > 0.99
    assert min(cosines) > 0.98  # deterministic floor for this seed


def test_synth_annotations_match_schema():
    es, anns = synth_embeddings(seed=1, n_clusters=3, per_cluster=2, d=4)
    schema = synth_schema(3)
    from scene_recall.schema import validate_annotation

    for ann in anns:
        validate_annotation(schema, ann)


def test_synth_rejects_bad_params():
    with pytest.raises(InvalidParams):
        synth_embeddings(seed=0, n_clusters=8, per_cluster=1, d=4)
    with pytest.raises(InvalidParams):
        synth_embeddings(seed=0, noise_scale=-0.1)


def test_synth_queries_pure_function_of_seed():
    q1, l1 = synth_queries(seed=3, n_queries=10, n_clusters=4, d=8)
    q2, l2 = synth_queries(seed=3, n_queries=10, n_clusters=4, d=8)
    np.testing.assert_array_equal(q1, q2)
    np.testing.assert_array_equal(l1, l2)
    assert l1.tolist() == [0, 1, 2, 3, 0, 1, 2, 3, 0, 1]


def test_synth_queries_are_unit_norm():
    q, _ = synth_queries(seed=3, n_queries=16, n_clusters=4, d=8)
    norms = np.linalg.norm(q.astype(np.float64), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)
