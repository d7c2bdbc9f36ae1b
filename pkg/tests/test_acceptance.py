"""Acceptance gate: one test per release criterion.

Each test prints one PASS/FAIL line (visible with `pytest -s`); the pytest
verdict per test is the authoritative result. Stated runtime budgets are
asserted inside the tests themselves.
"""

import itertools
import math
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from scene_recall.bench import bench_queries, run_bench
from scene_recall.classifier import build_labeled, classify_batch, majority_vote
from scene_recall.codec import (
    TOKEN_BUDGET,
    check_budget,
    decode_compact,
    encode_compact,
    estimate_tokens,
)
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
from scene_recall.errors import BudgetExceeded, SplitOverlap
from scene_recall.index import (
    AnnParams,
    build_ann,
    build_flat,
    load_index,
    save_index,
)
from scene_recall.metrics import (
    BinaryConfusion,
    ModelRunResult,
    PRPoint,
    distance_to_ideal,
    evaluate_run,
    f1,
    mean_distance,
    pr_point,
    rank_models,
    weighted_means,
)
from scene_recall.models import model_registry_lookup
from scene_recall.pipeline import (
    SamplePlan,
    SplitManifest,
    assemble,
    filter_informative,
    sample_schedule,
)
from scene_recall.schema import (
    AnnotationRecord,
    AttributeDef,
    AttributeSchema,
    is_all_zero,
)


@contextmanager
def criterion(name):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        sys.stdout.write(f"FAIL  {name}\n")
        raise
    sys.stdout.write(f"PASS  {name}  ({time.perf_counter() - t0:.2f}s)\n")


# ---------------------------------------------------------------------------


def test_exact_retrieval_matches_brute_force():
    with criterion("exact retrieval == brute force on 50 random sets (<60s)"):
        t0 = time.perf_counter()
        rng = np.random.Generator(np.random.PCG64(2024))
        dims = [8, 64, 512]
        for trial in range(50):
            d = dims[trial % 3]
            n = int(rng.integers(1, 2001))
            mat = rng.standard_normal((n, d))
            # duplicated rows exercise the tie-order rule
            if n >= 4:
                mat[1] = mat[0]
                mat[3] = mat[2]
            mat /= np.linalg.norm(mat, axis=1, keepdims=True)
            ids = [f"f{i:05d}" for i in range(n)]
            es = EmbeddingSet(
                d, tuple(EmbeddingRecord(fid, np.asarray(row, dtype=np.float32))
                         for fid, row in zip(ids, mat.astype(np.float32)))
            )
            ix = build_flat(es)
            q = rng.standard_normal(d)
            q /= np.linalg.norm(q)
            sims = ix.vectors.astype(np.float64) @ q
            expected = sorted(zip(ix.ids, sims), key=lambda t: (-t[1], t[0]))
            for k in (1, 3, 5):
                got = ix.query(q, k)
                want = expected[: min(k, n)]
                assert [nb.frame_id for nb in got] == [fid for fid, _ in want]
                assert all(
                    math.isclose(nb.similarity, s, abs_tol=1e-9)
                    for nb, (_, s) in zip(got, want)
                )
        assert time.perf_counter() - t0 < 60


def test_ann_recall_on_clustered_workload():
    with criterion("ANN mean recall@5 >= 0.95 on 10x1000 d=64 (<120s)"):
        t0 = time.perf_counter()
        es, _ = synth_embeddings(
            seed=0, n_clusters=10, per_cluster=1000, d=64, noise_scale=0.05
        )
        flat = build_flat(es)
        ann = build_ann(es, AnnParams(max_degree=16, beam_width=64, seed=0))
        queries, _ = synth_queries(seed=1, n_queries=200, n_clusters=10, d=64)
        hits = total = 0
        for q in queries:
            exact = {nb.frame_id for nb in flat.query(q, 5)}
            approx = {nb.frame_id for nb in ann.query(q, 5)}
            hits += len(exact & approx)
            total += len(exact)
        recall = hits / total
        assert recall >= 0.95, f"recall@5 = {recall:.4f}"
        assert time.perf_counter() - t0 < 120


def test_vote_oracle_exhaustive():
    with criterion("majority vote == brute-force oracle on all ballots <=9 long"):

        def oracle(ballot):
            best_cls, best_n, tie = None, -1, False
            for cls in sorted(set(ballot)):
                n = ballot.count(cls)
                if n > best_n:
                    best_cls, best_n, tie = cls, n, False
                elif n == best_n:
                    tie = True
            return best_cls, tie

        mismatches = 0
        for length in range(1, 10):
            for ballot in itertools.product(range(4), repeat=length):
                if majority_vote(list(ballot)) != oracle(list(ballot)):
                    mismatches += 1
        assert mismatches == 0


def test_metric_fixtures():
    with criterion("metric fixtures within 1e-12; corner distances within 1e-15"):
        p = pr_point(BinaryConfusion(tp=3, fp=1, fn=2, tn=0))
        assert abs(p.precision - 0.75) <= 1e-12
        assert abs(p.recall - 0.6) <= 1e-12
        assert abs(f1(p) - (2 * 0.75 * 0.6 / 1.35)) <= 1e-12

        assert abs(distance_to_ideal(PRPoint(0.8, 0.6)) - math.sqrt(0.2)) <= 1e-12

        # one attribute, supports [8, 2], per-class F1 [1.0, 0.5] -> 0.9
        schema = AttributeSchema(
            (AttributeDef("X", ((0, "absent"), (1, "present"))),)
        )
        result = ModelRunResult(
            "m",
            5,
            {
                ("X", 0): BinaryConfusion(tp=8, fp=0, fn=0, tn=2),
                ("X", 1): BinaryConfusion(tp=1, fp=1, fn=1, tn=7),
            },
        )
        _, _, wf = weighted_means(result, schema)
        assert abs(wf - 0.9) <= 1e-12

        assert abs(distance_to_ideal(PRPoint(1.0, 1.0))) <= 1e-15
        assert abs(distance_to_ideal(PRPoint(0.0, 0.0)) - math.sqrt(2)) <= 1e-15


def test_ranking_fixtures():
    with criterion("distance ranking tags smallest first; ties by model name"):
        cells = rank_models({("X", 1): {"A": 0.1, "B": 0.3, "C": 0.2}})
        assert [(c.model_name, c.rank_tag) for c in cells] == [
            ("A", "best"),
            ("C", "second"),
            ("B", "third"),
        ]
        tie = rank_models({("X", 1): {"A": 0.2, "B": 0.2}})
        assert [(c.model_name, c.rank_tag) for c in tie] == [
            ("A", "best"),
            ("B", "second"),
        ]


def test_codec_laws():
    with criterion("codec identity on 1000 records x 5 schemas; 77-token budget"):
        rng = np.random.Generator(np.random.PCG64(7))
        for s in range(5):
            sizes = rng.integers(2, 6, size=int(rng.integers(1, 12)))
            schema = AttributeSchema(
                tuple(
                    AttributeDef(f"a{i}", tuple((c, f"c{c}") for c in range(n)))
                    for i, n in enumerate(sizes)
                )
            )
            for _ in range(200):
                values = tuple(int(rng.integers(0, n)) for n in sizes)
                rec = AnnotationRecord("f", values)
                assert decode_compact(schema, encode_compact(schema, rec)).values == values

        assert TOKEN_BUDGET == 77
        assert estimate_tokens(37) == 76
        assert check_budget(",".join(["0"] * 37)) == 76
        assert estimate_tokens(38) == 78
        with pytest.raises(BudgetExceeded):
            check_budget(",".join(["0"] * 38))


def test_preprocessing_criteria():
    with criterion("schedules, all-zero filter, split-overlap rejection"):
        assert sample_schedule(30, 3, "test") == [0, 30, 60]
        assert sample_schedule(30, 4, "train") == [0, 60]

        rng = np.random.Generator(np.random.PCG64(13))
        records = [
            AnnotationRecord(f"f{i}", tuple(int(v) for v in rng.integers(0, 2, 4)))
            for i in range(1000)
        ]
        kept = filter_informative(records)
        assert all(not is_all_zero(r) for r in kept)
        assert len(kept) == sum(1 for r in records if not is_all_zero(r))
        kept_ids = {r.frame_id for r in kept}
        assert all(is_all_zero(r) for r in records if r.frame_id not in kept_ids)

        es, anns = synth_embeddings(seed=2, n_clusters=2, per_cluster=2, d=4)
        with pytest.raises(SplitOverlap):
            assemble(
                SplitManifest("train", ("t1", "shared")),
                SplitManifest("test", ("shared",)),
                [SamplePlan(t, 30, 1, "test", (0,)) for t in ("t1", "shared")],
                anns,
                es,
            )


def test_end_to_end_desk_pipeline():
    with criterion("4-cluster e2e: weighted F1 >= 0.95, distance <= 0.10 (<60s)"):
        t0 = time.perf_counter()
        schema = synth_schema(4)
        train_es, train_anns = synth_embeddings(
            seed=10, n_clusters=4, per_cluster=250, d=64, noise_scale=0.05
        )
        test_es, test_anns = synth_embeddings(
            seed=11, n_clusters=4, per_cluster=50, d=64, noise_scale=0.05
        )
        li = build_labeled(train_es, train_anns, schema, kind="flat")
        queries = np.stack([r.vector for r in test_es.records]).astype(np.float64)
        preds = classify_batch(li, queries, 5, frame_ids=test_es.frame_ids)
        result = evaluate_run(schema, test_anns, preds, "desk", 5)
        _, _, wf = weighted_means(result, schema)
        assert wf >= 0.95, f"weighted F1 = {wf:.4f}"
        assert mean_distance(result) <= 0.10
        assert time.perf_counter() - t0 < 60


def test_persistence_round_trips(tmp_path):
    with criterion("index answers survive save/load on 100 queries; files bit-exact"):
        es, _ = synth_embeddings(seed=5, n_clusters=4, per_cluster=50, d=16)
        queries, _ = synth_queries(seed=6, n_queries=100, n_clusters=4, d=16)

        for build in (
            lambda: build_flat(es),
            lambda: build_ann(es, AnnParams(max_degree=8, beam_width=32, seed=0)),
        ):
            ix = build()
            path = tmp_path / f"{ix.kind}.vix"
            save_index(ix, path)
            back = load_index(path)
            for q in queries:
                assert back.query(q, 5) == ix.query(q, 5)

        emb_path = tmp_path / "set.emb"
        write_embeddings(es, emb_path)
        original = emb_path.read_bytes()
        rewrite = tmp_path / "set2.emb"
        write_embeddings(read_embeddings(emb_path), rewrite)
        assert rewrite.read_bytes() == original


def test_registry_values():
    with criterion("registry returns published figures for all five models"):
        expected = {
            "ViT-B/32": (86, 63, 149, (150, 200), (1.0, 2.0), "ViT"),
            "ViT-B/16": (86, 63, 149, (80, 120), (2.0, 3.0), "ViT"),
            "ViT-L/14": (304, 123, 427, (30, 60), (4.0, 6.0), "ViT"),
            "RN50": (102, 63, 165, (120, 160), (2.0, 3.0), "ResNet"),
            "RN101": (152, 63, 215, (70, 100), (3.0, 4.0), "ResNet"),
        }
        for name, (img, txt, tot, fps, vram, fam) in expected.items():
            meta = model_registry_lookup(name)
            assert meta.image_params == img * 1_000_000
            assert meta.text_params == txt * 1_000_000
            assert meta.total_params == tot * 1_000_000
            assert meta.fps_range == fps
            assert meta.vram_gb == vram
            assert meta.arch_family == fam
        assert model_registry_lookup("ViT-L/14").total_params == 427_000_000


def test_bench_sanity():
    with criterion("bench: p50<=p95<=p99, build excluded, seeded workload"):
        es, _ = synth_embeddings(seed=8, n_clusters=3, per_cluster=40, d=16)
        r = run_bench(
            es, kind="ann", k=5, n_queries=50, seed=0,
            params=AnnParams(max_degree=8, beam_width=32, seed=0),
        )
        assert r.p50_us <= r.p95_us <= r.p99_us
        assert r.build_ms > 0
        # build cost dwarfs a query; inclusion would blow up the tail
        assert r.p99_us < r.build_ms * 1e3
        assert np.array_equal(bench_queries(50, 16, 0), bench_queries(50, 16, 0))
