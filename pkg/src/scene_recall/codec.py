"""Compact attribute text: class ids joined by commas in schema order.

The string form exists so equal annotations always produce equal texts,
which keeps paired image/text samples consistent. A fixed token-estimate
formula enforces the 77-token encoder budget; the estimate deliberately
upper-bounds real subword counts for small schemas and is swappable if an
exact tokenizer count is ever supplied.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from scene_recall.errors import (
    BudgetExceeded,
    FieldCountMismatch,
    InvalidRecord,
    NonIntegerField,
    UnknownClassId,
)
from scene_recall.schema import AnnotationRecord, AttributeSchema, validate_annotation

TOKEN_BUDGET = 77
# One token per numeral, one per comma/terminator, plus start/end markers.
TOKENS_PER_FIELD = 2
TOKENS_FIXED = 2

_FIELD_RE = re.compile(r"[0-9]+$")


def estimate_tokens(field_count: int) -> int:
    return TOKENS_PER_FIELD * field_count + TOKENS_FIXED


def check_budget(text: str) -> int:
    """Token estimate for a compact text; error above the encoder budget."""
    fields = text.split(",") if text else []
    estimate = estimate_tokens(len(fields))
    if estimate > TOKEN_BUDGET:
        raise BudgetExceeded(estimate, TOKEN_BUDGET)
    return estimate


def encode_compact(schema: AttributeSchema, rec: AnnotationRecord) -> str:
    try:
        validate_annotation(schema, rec)
    except Exception as exc:
        raise InvalidRecord(str(exc)) from exc
    text = ",".join(str(v) for v in rec.values)
    check_budget(text)
    return text


def decode_compact(schema: AttributeSchema, text: str) -> AnnotationRecord:
    fields = text.split(",") if text else []
    if len(fields) != len(schema.attributes):
        raise FieldCountMismatch(
            f"{len(fields)} fields for {len(schema.attributes)} attributes"
        )
    values = []
    for field, attr in zip(fields, schema.attributes):
        if not _FIELD_RE.match(field):
            raise NonIntegerField(f"field {field!r} is not a decimal integer")
        v = int(field)
        if not any(cid == v for cid, _ in attr.classes):
            raise UnknownClassId(attr.name, v)
        values.append(v)
    return AnnotationRecord("", tuple(values))


@dataclass(frozen=True)
class PairManifestEntry:
    image_path: str
    compact_text: str
    frame_id: str


def make_pairs(
    schema: AttributeSchema,
    annotations: Iterable[AnnotationRecord],
    image_root: str,
) -> list[PairManifestEntry]:
    """One image/text pair per record, ascending frame_id."""
    root = str(image_root).rstrip("/")
    entries = [
        PairManifestEntry(
            image_path=f"{root}/{rec.frame_id}.jpg",
            compact_text=encode_compact(schema, rec),
            frame_id=rec.frame_id,
        )
        for rec in annotations
    ]
    entries.sort(key=lambda e: e.frame_id)
    return entries


def save_pairs(path: str | Path, entries: Sequence[PairManifestEntry]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_path", "text", "frame_id"])
        for e in entries:
            w.writerow([e.image_path, e.compact_text, e.frame_id])


def render_prompt(schema: AttributeSchema) -> str:
    """Deterministic classification instructions for a vision-language model."""
    lines = [
        "Analyze the driving scene image and classify every category below.",
        "For binary categories answer '0' if not detected and '1' if detected.",
        "For multi-class categories answer with the listed class number.",
        "",
        "Categories:",
    ]
    for attr in schema.attributes:
        options = "; ".join(f"{cid} = {label}" for cid, label in attr.classes)
        lines.append(f"- {attr.name}: {options}")
    lines += [
        "",
        "Respond with exactly one line: the class numbers for all "
        f"{len(schema.attributes)} categories in the order given, "
        "joined by commas, with no spaces or extra text.",
    ]
    return "\n".join(lines) + "\n"
