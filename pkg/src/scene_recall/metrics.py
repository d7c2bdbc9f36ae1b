"""Per attribute-class evaluation and model ranking.

Every attribute-class pair is scored one-vs-rest. Precision or recall with
a 0/0 denominator is reported as 0 and flagged undefined, which pushes the
point toward the worst corner of precision-recall space; the flag keeps the
convention auditable. Models are ranked per cell by Euclidean distance to
the ideal (1, 1) point, smallest first.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from scene_recall.classifier import Prediction
from scene_recall.errors import InvalidParams, Misaligned, NoSupport
from scene_recall.schema import AnnotationRecord, AttributeSchema

IDEAL = (1.0, 1.0)
WEIGHTING_STRATEGIES = ("per_attribute", "global")


@dataclass(frozen=True)
class BinaryConfusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidParams("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def support(self) -> int:
        return self.tp + self.fn


@dataclass(frozen=True)
class PRPoint:
    precision: float
    recall: float
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass(frozen=True)
class ModelRunResult:
    model_name: str
    k: int
    confusions: Mapping[tuple[str, int], BinaryConfusion]


@dataclass(frozen=True)
class HeatmapCell:
    model_name: str
    attribute: str
    cls: int
    distance: float
    rank_tag: str  # best | second | third | none


def confusion(
    gold: Sequence[AnnotationRecord],
    preds: Sequence[Prediction],
    attr_index: int,
    cls: int,
) -> BinaryConfusion:
    """One-vs-rest counts for one attribute-class pair."""
    if len(gold) != len(preds):
        raise Misaligned(f"{len(gold)} gold records vs {len(preds)} predictions")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, preds):
        if g.frame_id != p.frame_id:
            raise Misaligned(f"gold frame {g.frame_id!r} vs prediction {p.frame_id!r}")
        gv = g.values[attr_index] == cls
        pv = p.values[attr_index] == cls
        if gv and pv:
            tp += 1
        elif pv:
            fp += 1
        elif gv:
            fn += 1
        else:
            tn += 1
    return BinaryConfusion(tp, fp, fn, tn)


def pr_point(c: BinaryConfusion) -> PRPoint:
    if c.tp + c.fp > 0:
        precision, p_def = c.tp / (c.tp + c.fp), True
    else:
        precision, p_def = 0.0, False
    if c.tp + c.fn > 0:
        recall, r_def = c.tp / (c.tp + c.fn), True
    else:
        recall, r_def = 0.0, False
    return PRPoint(precision, recall, p_def, r_def)


def distance_to_ideal(p: PRPoint) -> float:
    return math.sqrt((1.0 - p.precision) ** 2 + (1.0 - p.recall) ** 2)


def f1(p: PRPoint) -> float:
    s = p.precision + p.recall
    if s == 0.0:
        return 0.0
    return 2.0 * p.precision * p.recall / s


def evaluate_run(
    schema: AttributeSchema,
    gold: Sequence[AnnotationRecord],
    preds: Sequence[Prediction],
    model_name: str,
    k: int,
) -> ModelRunResult:
    """Confusions for every attribute-class pair in the schema."""
    confusions: dict[tuple[str, int], BinaryConfusion] = {}
    for i, attr in enumerate(schema.attributes):
        for cid, _ in attr.classes:
            confusions[(attr.name, cid)] = confusion(gold, preds, i, cid)
    return ModelRunResult(model_name, k, confusions)


def weighted_means(
    result: ModelRunResult,
    schema: AttributeSchema,
    strategy: str = "per_attribute",
) -> tuple[float, float, float]:
    """Support-weighted (precision, recall, f1).

    per_attribute: weight classes by support within each attribute, then
    average the attributes equally. global: weight every attribute-class
    cell by its share of total support.
    """
    if strategy not in WEIGHTING_STRATEGIES:
        raise InvalidParams(f"unknown weighting strategy {strategy!r}")
    per_attr: list[tuple[float, float, float]] = []
    flat_cells: list[tuple[int, float, float, float]] = []
    for attr in schema.attributes:
        cells = []
        for cid, _ in attr.classes:
            c = result.confusions[(attr.name, cid)]
            p = pr_point(c)
            cells.append((c.support, p.precision, p.recall, f1(p)))
        total = sum(s for s, *_ in cells)
        if total == 0:
            raise NoSupport(f"attribute {attr.name!r} has no gold support")
        per_attr.append(
            tuple(sum(s * m[i] for s, *m in cells) / total for i in range(3))
        )
        flat_cells.extend(cells)
    if strategy == "global":
        grand = sum(s for s, *_ in flat_cells)
        return tuple(sum(s * m[i] for s, *m in flat_cells) / grand for i in range(3))
    n = len(per_attr)
    return tuple(sum(t[i] for t in per_attr) / n for i in range(3))


def mean_distance(result: ModelRunResult) -> float:
    """Unweighted mean of distance_to_ideal over every attribute-class cell."""
    cells = sorted(result.confusions.keys())
    dists = [distance_to_ideal(pr_point(result.confusions[c])) for c in cells]
    return sum(dists) / len(dists)


def rank_models(
    distances: Mapping[tuple[str, int], Mapping[str, float]],
) -> list[HeatmapCell]:
    """Tag the three smallest distances per attribute-class cell.

    distances maps (attribute, class) to {model name: distance}. Ties break
    by ascending model name. Output is sorted by (attribute, class, rank).
    """
    tags = ("best", "second", "third")
    cells: list[HeatmapCell] = []
    for key in sorted(distances.keys()):
        per_model = distances[key]
        ordered = sorted(per_model.items(), key=lambda kv: (kv[1], kv[0]))
        for pos, (model, dist) in enumerate(ordered):
            tag = tags[pos] if pos < 3 else "none"
            cells.append(HeatmapCell(model, key[0], key[1], dist, tag))
    return cells


def distance_table(
    results: Sequence[ModelRunResult],
) -> dict[tuple[str, int], dict[str, float]]:
    """(attribute, class) → {model: distance_to_ideal} across runs."""
    if not results:
        raise InvalidParams("at least one model run is required")
    keys = set(results[0].confusions.keys())
    for r in results[1:]:
        if set(r.confusions.keys()) != keys:
            raise Misaligned("model runs cover different attribute-class cells")
    return {
        key: {
            r.model_name: distance_to_ideal(pr_point(r.confusions[key]))
            for r in results
        }
        for key in keys
    }


def export_report(
    results: Sequence[ModelRunResult],
    schema: AttributeSchema,
    out_dir: str | Path,
    strategy: str = "per_attribute",
) -> dict[str, Path]:
    """Write heatmap.csv, ranks.csv and aggregate.json; byte-deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: r.model_name)
    models = [r.model_name for r in results]
    table = distance_table(results)

    # Rows follow schema attribute order, then ascending class id.
    row_keys = [
        (attr.name, cid) for attr in schema.attributes for cid, _ in attr.classes
    ]
    heatmap_path = out / "heatmap.csv"
    with open(heatmap_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attribute", "class", *models])
        for key in row_keys:
            w.writerow(
                [key[0], key[1], *[f"{table[key][m]:.6f}" for m in models]]
            )

    cells = rank_models(table)
    by_key = {(c.attribute, c.cls, c.model_name): c for c in cells}
    ranks_path = out / "ranks.csv"
    with open(ranks_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attribute", "class", "model", "distance", "rank_tag"])
        for key in row_keys:
            per_model = sorted(
                (by_key[(key[0], key[1], m)] for m in models),
                key=lambda c: (c.distance, c.model_name),
            )
            for c in per_model:
                w.writerow([c.attribute, c.cls, c.model_name, f"{c.distance:.6f}", c.rank_tag])

    aggregate_path = out / "aggregate.json"
    rows = []
    for r in results:
        wp, wr, wf = weighted_means(r, schema, strategy)
        rows.append(
            {
                "model": r.model_name,
                "k": r.k,
                "weighted_precision": wp,
                "weighted_recall": wr,
                "weighted_f1": wf,
                "mean_distance": mean_distance(r),
            }
        )
    with open(aggregate_path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    return {"heatmap": heatmap_path, "ranks": ranks_path, "aggregate": aggregate_path}


def load_distance_table(path: str | Path) -> dict[tuple[str, int], dict[str, float]]:
    """Read a heatmap.csv back into the rank_models input shape."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["attribute", "class"] or len(header) < 3:
            raise InvalidParams(f"{path}: expected header attribute,class,<models...>")
        models = header[2:]
        table: dict[tuple[str, int], dict[str, float]] = {}
        for row in reader:
            if len(row) != len(header):
                raise InvalidParams(f"{path}: row width {len(row)} != header width {len(header)}")
            key = (row[0], int(row[1]))
            table[key] = {m: float(v) for m, v in zip(models, row[2:])}
    return table


def save_ranks(path: str | Path, cells: Sequence[HeatmapCell]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attribute", "class", "model", "distance", "rank_tag"])
        for c in cells:
            w.writerow([c.attribute, c.cls, c.model_name, f"{c.distance:.6f}", c.rank_tag])
