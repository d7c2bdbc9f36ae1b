"""Index file round-trips: load(save(ix)) answers every query identically."""

import struct

import numpy as np
import pytest

from scene_recall.embeddings import synth_embeddings, synth_queries, write_embeddings, read_embeddings
from scene_recall.errors import BadMagic, InvalidParams, TruncatedFile, VersionUnsupported
from scene_recall.index import AnnParams, build_ann, build_flat, load_index, save_index


@pytest.fixture(scope="module")
def corpus():
    es, _ = synth_embeddings(seed=19, n_clusters=4, per_cluster=50, d=8)
    qs, _ = synth_queries(seed=29, n_queries=100, n_clusters=4, d=8)
    return es, qs


def answers(ix, qs, k=5):
    return [[(n.frame_id, n.similarity) for n in ix.query(q, k)] for q in qs]


def test_flat_round_trip_identical_answers(corpus, tmp_path):
    es, qs = corpus
    ix = build_flat(es)
    path = tmp_path / "flat.vix"
    save_index(ix, path)
    back = load_index(path)
    assert back.kind == "flat"
    assert answers(back, qs) == answers(ix, qs)


def test_ann_round_trip_identical_answers(corpus, tmp_path):
    es, qs = corpus
    ix = build_ann(es, AnnParams(max_degree=8, beam_width=32, seed=4))
    path = tmp_path / "ann.vix"
    save_index(ix, path)
    back = load_index(path)
    assert back.kind == "ann"
    assert back.params == ix.params
    assert back.entry_point == ix.entry_point
    assert answers(back, qs) == answers(ix, qs)


def test_save_is_deterministic(corpus, tmp_path):
    es, _ = corpus
    ix = build_ann(es, AnnParams(max_degree=8, beam_width=32, seed=4))
    p1, p2 = tmp_path / "a.vix", tmp_path / "b.vix"
    save_index(ix, p1)
    save_index(ix, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_embedding_file_round_trip_bit_exact(corpus, tmp_path):
    es, _ = corpus
    path = tmp_path / "set.emb1"
    write_embeddings(es, path)
    first = path.read_bytes()
    write_embeddings(read_embeddings(path), path)
    assert path.read_bytes() == first


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.vix"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(BadMagic):
        load_index(path)


def test_unsupported_version(corpus, tmp_path):
    es, _ = corpus
    path = tmp_path / "v9.vix"
    save_index(build_flat(es), path)
    data = bytearray(path.read_bytes())
    data[4:6] = struct.pack("<H", 9)
    path.write_bytes(bytes(data))
    with pytest.raises(VersionUnsupported):
        load_index(path)


def test_truncated_file(corpus, tmp_path):
    es, _ = corpus
    path = tmp_path / "cut.vix"
    save_index(build_ann(es, AnnParams(max_degree=4, beam_width=16, seed=0)), path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(TruncatedFile):
        load_index(path)


def test_too_short_for_header(tmp_path):
    path = tmp_path / "tiny.vix"
    path.write_bytes(b"VIX")
    with pytest.raises(TruncatedFile):
        load_index(path)


def test_unknown_kind(corpus, tmp_path):
    es, _ = corpus
    path = tmp_path / "kind.vix"
    save_index(build_flat(es), path)
    data = bytearray(path.read_bytes())
    data[6] = 7
    path.write_bytes(bytes(data))
    with pytest.raises(VersionUnsupported):
        load_index(path)


def test_loaded_index_honors_backend_override(corpus, tmp_path):
    es, qs = corpus
    path = tmp_path / "f.vix"
    save_index(build_flat(es), path)
    forced = load_index(path, backend="python")
    assert forced.backend_name == "python"
    assert answers(forced, qs) == answers(build_flat(es, backend="python"), qs)


def test_corrupt_neighbor_ordinal_rejected(corpus, tmp_path):
    es, _ = corpus
    ix = build_ann(es, AnnParams(max_degree=4, beam_width=16, seed=1))
    path = tmp_path / "corrupt.vix"
    save_index(ix, path)
    data = bytearray(path.read_bytes())
    # smash the file tail: depending on the top level's shape this lands on
    # a neighbor ordinal (out of range) or a degree field (runs off the end)
    data[-4:] = struct.pack("<I", 0xFFFFFFF0)
    path.write_bytes(bytes(data))
    with pytest.raises((InvalidParams, TruncatedFile)):
        load_index(path)
