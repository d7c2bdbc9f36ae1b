"""k-NN inference: retrieve neighbors, majority-vote each attribute.

Votes are plain counts over the retrieved neighbors' annotations. A tie is
resolved toward the smallest class id (class 0 is the "absent" state in
every shipped attribute, so the default is conservative) and flagged so
downstream analysis can measure how often the rule fired.
"""

from __future__ import annotations

import csv
import json
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from scene_recall.errors import (
    BatchItemError,
    EmptyBallot,
    InvalidParams,
    MissingAnnotation,
)
from scene_recall.index.ann import AnnIndex, AnnParams, build_ann
from scene_recall.index.flat import FlatIndex, build_flat
from scene_recall.embeddings import EmbeddingSet
from scene_recall.schema import AnnotationRecord, AttributeSchema, validate_annotation

THREADS_ENV = "SCENE_RECALL_THREADS"


@dataclass(frozen=True)
class Prediction:
    """One classified query.

    tallies[i] lists (class_id, count) pairs for attribute i, ascending by
    class id; values[i] always holds a maximal count in tallies[i].
    """

    frame_id: str
    values: tuple[int, ...]
    ties: tuple[bool, ...]
    tallies: tuple[tuple[tuple[int, int], ...], ...]
    k: int


class LabeledIndex:
    """An index whose every frame carries a validated annotation."""

    def __init__(
        self,
        index: FlatIndex | AnnIndex,
        annotations: Mapping[str, AnnotationRecord],
        schema: AttributeSchema,
    ):
        for fid in index.ids:
            rec = annotations.get(fid)
            if rec is None:
                raise MissingAnnotation(f"indexed frame {fid!r} has no annotation")
            validate_annotation(schema, rec)
        self.index = index
        self.annotations = dict(annotations)
        self.schema = schema

    @property
    def size(self) -> int:
        return self.index.size

    @property
    def dimension(self) -> int:
        return self.index.dimension


def majority_vote(labels: Sequence[int]) -> tuple[int, bool]:
    """Winning class and whether the max count was shared."""
    if len(labels) == 0:
        raise EmptyBallot("cannot vote over an empty ballot")
    counts = Counter(labels)
    top = max(counts.values())
    leaders = [c for c, n in counts.items() if n == top]
    return min(leaders), len(leaders) > 1


def classify(li: LabeledIndex, q, k: int, frame_id: str = "") -> Prediction:
    """Vote each attribute independently over the query's top-k neighbors."""
    neighbors = li.index.query(q, k)
    records = []
    for nb in neighbors:
        rec = li.annotations.get(nb.frame_id)
        if rec is None:
            raise MissingAnnotation(f"neighbor {nb.frame_id!r} has no annotation")
        records.append(rec)
    values: list[int] = []
    ties: list[bool] = []
    tallies: list[tuple[tuple[int, int], ...]] = []
    for i in range(len(li.schema.attributes)):
        ballot = [rec.values[i] for rec in records]
        value, tie = majority_vote(ballot)
        values.append(value)
        ties.append(tie)
        tallies.append(tuple(sorted(Counter(ballot).items())))
    return Prediction(frame_id, tuple(values), tuple(ties), tuple(tallies), k)


def _max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError:
            raise InvalidParams(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if cap < 1:
            raise InvalidParams(f"{THREADS_ENV} must be >= 1, got {cap}")
        return cap
    return min(32, os.cpu_count() or 1)


def classify_batch(
    li: LabeledIndex,
    queries,
    k: int,
    frame_ids: Sequence[str] | None = None,
) -> list[Prediction]:
    """classify() each query; order preserved regardless of parallelism."""
    queries = np.asarray(queries)
    ids = list(frame_ids) if frame_ids is not None else [""] * len(queries)
    if len(ids) != len(queries):
        raise InvalidParams(
            f"{len(ids)} frame ids for {len(queries)} queries"
        )

    def one(i: int) -> Prediction:
        try:
            return classify(li, queries[i], k, frame_id=ids[i])
        except Exception as exc:
            raise BatchItemError(i, exc) from exc

    workers = _max_workers()
    if workers == 1 or len(queries) <= 1:
        return [one(i) for i in range(len(queries))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(queries))))


def build_labeled(
    es: EmbeddingSet,
    annotations: Mapping[str, AnnotationRecord] | Sequence[AnnotationRecord],
    schema: AttributeSchema,
    kind: str = "flat",
    params: AnnParams | None = None,
    backend: str = "auto",
) -> LabeledIndex:
    """Index an embedding set and attach its annotations."""
    if not isinstance(annotations, Mapping):
        annotations = {rec.frame_id: rec for rec in annotations}
    if kind == "flat":
        index: FlatIndex | AnnIndex = build_flat(es, backend=backend)
    elif kind == "ann":
        index = build_ann(es, params, backend=backend)
    else:
        raise InvalidParams(f"index kind must be 'flat' or 'ann', got {kind!r}")
    return LabeledIndex(index, annotations, schema)


def save_predictions(path: str | Path, schema: AttributeSchema, preds: Sequence[Prediction]) -> None:
    """CSV: frame_id, one value column per attribute, one _tie column each."""
    names = list(schema.names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame_id", *names, *[f"{n}_tie" for n in names]])
        for p in preds:
            w.writerow([p.frame_id, *p.values, *[int(t) for t in p.ties]])


def save_predictions_jsonl(path: str | Path, schema: AttributeSchema, preds: Sequence[Prediction]) -> None:
    """JSON-lines audit trail including per-attribute vote tallies."""
    names = list(schema.names)
    with open(path, "w", encoding="utf-8") as fh:
        for p in preds:
            row = {
                "frame_id": p.frame_id,
                "k": p.k,
                "values": {n: v for n, v in zip(names, p.values)},
                "ties": {n: t for n, t in zip(names, p.ties)},
                "tallies": {
                    n: {str(c): cnt for c, cnt in tally}
                    for n, tally in zip(names, p.tallies)
                },
            }
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")


def load_predictions(path: str | Path, schema: AttributeSchema) -> list[Prediction]:
    """Read the CSV written by save_predictions (tallies are not recoverable)."""
    names = list(schema.names)
    expected = ["frame_id", *names, *[f"{n}_tie" for n in names]]
    preds: list[Prediction] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise InvalidParams(f"{path}: unexpected prediction header {header}")
        n = len(names)
        for row in reader:
            if len(row) != 1 + 2 * n:
                raise InvalidParams(f"{path}: row has {len(row)} cells, expected {1 + 2 * n}")
            values = tuple(int(x) for x in row[1 : 1 + n])
            ties = tuple(bool(int(x)) for x in row[1 + n :])
            preds.append(Prediction(row[0], values, ties, (), 0))
    return preds
