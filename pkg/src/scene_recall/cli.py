"""Command-line surface: preprocessing, indexing, inference, evaluation.

Every command is reproducible: the same inputs and flags produce
byte-identical outputs (bench timing fields excepted). Data errors exit 1
with one `error: <Kind>: <message>` line on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from scene_recall import bench as bench_mod
from scene_recall import codec, metrics, pipeline
from scene_recall import embeddings as emb
from scene_recall.classifier import (
    build_labeled,
    classify_batch,
    save_predictions,
    save_predictions_jsonl,
)
from scene_recall.errors import (
    DimensionMismatch,
    InvalidParams,
    Misaligned,
    SceneRecallError,
)
from scene_recall.index import AnnParams, build_ann, build_flat, load_index, save_index
from scene_recall.kernels import available_backends
from scene_recall.schema import (
    AnnotationRecord,
    default_schema,
    load_annotations,
    load_schema,
    save_annotations,
    save_schema,
)


# ---------------------------------------------------------------- config --


def parse_config(path: str | Path) -> tuple[dict[str, str], dict[str, dict[str, str]]]:
    """`key = value` lines; `[model NAME]` opens a per-model section."""
    top: dict[str, str] = {}
    models: dict[str, dict[str, str]] = {}
    current = top
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                head = line[1:-1].strip()
                if not head.startswith("model ") or not head[6:].strip():
                    raise InvalidParams(f"{path}:{lineno}: expected [model NAME], got {line!r}")
                name = head[6:].strip()
                if name in models:
                    raise InvalidParams(f"{path}:{lineno}: duplicate model section {name!r}")
                current = models.setdefault(name, {})
                continue
            if "=" not in line:
                raise InvalidParams(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            current[key.strip()] = value.strip()
    return top, models


def _load_schema_arg(path: str | None):
    return load_schema(path) if path else default_schema()


def _ann_params(args) -> AnnParams:
    return AnnParams(
        max_degree=args.max_degree, beam_width=args.beam_width, seed=args.seed
    )


def _add_ann_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-degree", type=int, default=16, help="graph degree cap per node")
    p.add_argument("--beam-width", type=int, default=64, help="construction/search beam")
    p.add_argument("--seed", type=int, default=0, help="level-assignment seed")


# -------------------------------------------------------------- commands --


def cmd_ingest(args) -> int:
    if args.synthetic:
        es, anns = emb.synth_embeddings(
            seed=args.seed,
            n_clusters=args.clusters,
            per_cluster=args.per_cluster,
            d=args.dim,
            noise_scale=args.noise,
        )
        emb.write_embeddings(es, args.out)
        if args.annotations_out:
            save_annotations(anns, emb.synth_schema(args.clusters), args.annotations_out)
        if args.schema_out:
            save_schema(emb.synth_schema(args.clusters), args.schema_out)
    else:
        if not args.vectors:
            raise InvalidParams("ingest needs --vectors CSV or --synthetic")
        records = []
        dim = None
        with open(args.vectors, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row:
                    continue
                if len(row) < 2:
                    raise InvalidParams(f"{args.vectors}:{lineno}: need frame_id plus components")
                if dim is None:
                    dim = len(row) - 1
                elif len(row) - 1 != dim:
                    raise DimensionMismatch(
                        f"{args.vectors}:{lineno}: {len(row) - 1} components, expected {dim}"
                    )
                try:
                    vec = np.array([float(x) for x in row[1:]], dtype=np.float64)
                except ValueError as exc:
                    raise InvalidParams(f"{args.vectors}:{lineno}: non-numeric component") from exc
                records.append(emb.EmbeddingRecord(row[0], emb.normalize(vec)))
        es = emb.EmbeddingSet(dim or 0, tuple(records))
        emb.write_embeddings(es, args.out)
    print(f"wrote {args.out}: {len(es.records)} records, dim {es.dimension}")
    return 0


def cmd_build_index(args) -> int:
    es = emb.read_embeddings(args.embeddings)
    if args.index == "flat":
        ix = build_flat(es, backend=args.backend)
    else:
        ix = build_ann(es, _ann_params(args), backend=args.backend)
    save_index(ix, args.out)
    print(f"wrote {args.out}: {ix.kind} index, {ix.size} vectors, dim {ix.dimension}")
    return 0


def _load_labeled(args, schema):
    anns = load_annotations(args.annotations, schema)
    if args.index_file:
        index = load_index(args.index_file, backend=args.backend)
        from scene_recall.classifier import LabeledIndex

        return LabeledIndex(index, {r.frame_id: r for r in anns}, schema)
    if not args.embeddings:
        raise InvalidParams("classify needs --embeddings or --index-file")
    es = emb.read_embeddings(args.embeddings)
    params = _ann_params(args) if args.index == "ann" else None
    return build_labeled(es, anns, schema, kind=args.index, params=params, backend=args.backend)


def cmd_classify(args) -> int:
    schema = _load_schema_arg(args.schema)
    li = _load_labeled(args, schema)
    queries = emb.read_embeddings(args.queries)
    vectors = np.stack([r.vector for r in queries.records]).astype(np.float64)
    preds = classify_batch(li, vectors, args.k, frame_ids=queries.frame_ids)
    save_predictions(args.out, schema, preds)
    if args.jsonl:
        save_predictions_jsonl(args.jsonl, schema, preds)
    print(f"wrote {args.out}: {len(preds)} predictions, k={args.k}")
    return 0


def _align_predictions(gold, preds):
    by_id = {p.frame_id: p for p in preds}
    aligned = []
    for g in gold:
        p = by_id.get(g.frame_id)
        if p is None:
            raise Misaligned(f"gold frame {g.frame_id!r} has no prediction")
        aligned.append(p)
    return aligned


def cmd_evaluate(args) -> int:
    top, models = parse_config(args.config)
    if not models:
        raise InvalidParams(f"{args.config}: no [model NAME] sections")

    def setting(key: str, flag_value, default=None):
        return flag_value if flag_value is not None else top.get(key, default)

    schema = _load_schema_arg(setting("schema", args.schema))
    gold_path = setting("gold", args.gold)
    queries_path = setting("queries", args.queries)
    train_ann_path = setting("train-annotations", args.train_annotations)
    out_dir = setting("out", args.out)
    strategy = setting("strategy", args.strategy, "per_attribute")
    if not (gold_path and queries_path and train_ann_path and out_dir):
        raise InvalidParams(
            "evaluate needs gold, queries, train-annotations and out "
            "(config keys or flags)"
        )
    gold = load_annotations(gold_path, schema)
    queries = emb.read_embeddings(queries_path)
    train_anns = load_annotations(train_ann_path, schema)
    vectors = np.stack([r.vector for r in queries.records]).astype(np.float64)

    results = []
    for name in sorted(models):
        section = models[name]
        emb_path = section.get("embeddings", top.get("train-embeddings"))
        if not emb_path:
            raise InvalidParams(f"model {name!r}: no embeddings path configured")
        k = int(args.k if args.k is not None else section.get("k", top.get("k", 5)))
        kind = args.index or section.get("index", top.get("index", "flat"))
        params = AnnParams(
            max_degree=int(section.get("max-degree", top.get("max-degree", 16))),
            beam_width=int(section.get("beam-width", top.get("beam-width", 64))),
            seed=int(section.get("seed", top.get("seed", 0))),
        )
        es = emb.read_embeddings(emb_path)
        li = build_labeled(
            es, train_anns, schema, kind=kind,
            params=params if kind == "ann" else None, backend=args.backend,
        )
        preds = classify_batch(li, vectors, k, frame_ids=queries.frame_ids)
        aligned = _align_predictions(gold, preds)
        result = metrics.evaluate_run(schema, gold, aligned, name, k)
        results.append(result)
        wp, wr, wf = metrics.weighted_means(result, schema, strategy)
        print(
            f"model {name}: k={k} weighted_precision={wp:.6f} "
            f"weighted_recall={wr:.6f} weighted_f1={wf:.6f} "
            f"mean_distance={metrics.mean_distance(result):.6f}"
        )
    paths = metrics.export_report(results, schema, out_dir, strategy)
    print(f"wrote {paths['heatmap']}, {paths['ranks']}, {paths['aggregate']}")
    return 0


def cmd_rank(args) -> int:
    table = metrics.load_distance_table(args.heatmap)
    cells = metrics.rank_models(table)
    metrics.save_ranks(args.out, cells)
    tagged = [c for c in cells if c.rank_tag != "none"]
    print(f"wrote {args.out}: {len(tagged)} tagged cells over {len(table)} rows")
    return 0


def cmd_encode(args) -> int:
    schema = _load_schema_arg(args.schema)
    if args.prompt:
        text = codec.render_prompt(schema)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            print(f"wrote {args.out}")
        else:
            sys.stdout.write(text)
        return 0
    if not args.annotations:
        raise InvalidParams("encode needs --annotations or --prompt")
    records = load_annotations(args.annotations, schema)
    if not args.out:
        raise InvalidParams("encode --annotations needs --out")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame_id", "text"])
        for rec in records:
            w.writerow([rec.frame_id, codec.encode_compact(schema, rec)])
    print(f"wrote {args.out}: {len(records)} texts")
    return 0


def cmd_make_pairs(args) -> int:
    schema = _load_schema_arg(args.schema)
    records = pipeline.filter_informative(load_annotations(args.annotations, schema))
    entries = codec.make_pairs(schema, records, args.image_root)
    codec.save_pairs(args.out, entries)
    print(f"wrote {args.out}: {len(entries)} pairs")
    return 0


def cmd_sample_plan(args) -> int:
    manifest = pipeline.parse_split(args.split, args.role)
    metas = pipeline.load_trip_meta(args.trips)
    plans = pipeline.build_plans(manifest, metas)
    pipeline.save_schedule(args.out, plans)
    total = sum(len(p.indices) for p in plans)
    print(f"wrote {args.out}: {total} frames across {len(plans)} trips")
    return 0


def cmd_bench(args) -> int:
    if args.embeddings:
        es = emb.read_embeddings(args.embeddings)
    else:
        es, _ = emb.synth_embeddings(
            seed=args.seed, n_clusters=args.clusters,
            per_cluster=args.per_cluster, d=args.dim, noise_scale=args.noise,
        )
    kinds = ["flat", "ann"] if args.index == "both" else [args.index]
    backends = list(available_backends()) if args.backend == "both" else [args.backend]
    reports = [
        bench_mod.run_bench(
            es, kind=kind, k=args.k, n_queries=args.queries,
            seed=args.seed, backend=be, params=_ann_params(args),
        )
        for kind in kinds
        for be in backends
    ]
    if args.csv:
        if not args.out:
            raise InvalidParams("--csv needs --out")
        bench_mod.save_reports_csv(args.out, reports)
        print(f"wrote {args.out}: {len(reports)} runs")
    else:
        text = bench_mod.report_json(reports)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            print(f"wrote {args.out}: {len(reports)} runs")
        else:
            sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser --


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scene-recall",
        description="Retrieval-based multi-attribute scene classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate vectors and write an embedding file")
    p.add_argument("--vectors", help="CSV rows: frame_id,x0,x1,...")
    p.add_argument("--synthetic", action="store_true", help="generate a clustered test set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=10)
    p.add_argument("--per-cluster", type=int, default=1000)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--annotations-out", help="with --synthetic: write cluster labels CSV")
    p.add_argument("--schema-out", help="with --synthetic: write the one-attribute schema")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-index", help="build and persist an index")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--index", choices=["flat", "ann"], default="flat")
    p.add_argument("--backend", default="auto")
    _add_ann_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("classify", help="k-NN majority vote for query embeddings")
    p.add_argument("--schema")
    p.add_argument("--embeddings", help="training embeddings (EMB1)")
    p.add_argument("--index-file", help="prebuilt index instead of --embeddings")
    p.add_argument("--annotations", required=True, help="training annotations CSV")
    p.add_argument("--queries", required=True, help="query embeddings (EMB1)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--index", choices=["flat", "ann"], default="flat")
    p.add_argument("--backend", default="auto")
    _add_ann_flags(p)
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--jsonl", help="also write a JSON-lines audit file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score model runs against gold annotations")
    p.add_argument("--config", required=True, help="key = value file with [model NAME] sections")
    p.add_argument("--schema")
    p.add_argument("--gold")
    p.add_argument("--queries")
    p.add_argument("--train-annotations")
    p.add_argument("--k", type=int)
    p.add_argument("--index", choices=["flat", "ann"])
    p.add_argument("--strategy", choices=list(metrics.WEIGHTING_STRATEGIES))
    p.add_argument("--backend", default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="tag top-3 models per attribute-class cell")
    p.add_argument("--heatmap", required=True, help="heatmap.csv from evaluate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("encode", help="compact attribute texts / prompt text")
    p.add_argument("--schema")
    p.add_argument("--annotations")
    p.add_argument("--prompt", action="store_true", help="emit the classification prompt")
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("make-pairs", help="image/text manifest for paired fine-tuning")
    p.add_argument("--schema")
    p.add_argument("--annotations", required=True)
    p.add_argument("--image-root", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_pairs)

    p = sub.add_parser("sample-plan", help="frame schedule from split + trip metadata")
    p.add_argument("--split", required=True, help="one trip id per line")
    p.add_argument("--trips", required=True, help="CSV trip_id,fps,duration_s")
    p.add_argument("--role", choices=list(pipeline.ROLES), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_plan)

    p = sub.add_parser("bench", help="retrieval latency/throughput")
    p.add_argument("--embeddings")
    p.add_argument("--index", choices=["flat", "ann", "both"], default="flat")
    p.add_argument("--backend", default="auto", help="auto|python|compiled|both")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--clusters", type=int, default=10)
    p.add_argument("--per-cluster", type=int, default=1000)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.05)
    _add_ann_flags(p)
    p.add_argument("--csv", action="store_true", help="CSV output instead of JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SceneRecallError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
