"""Attribute schema, per-frame annotations, and stage binarization.

A schema is an ordered list of attributes; each attribute has a finite set
of integer class ids starting at 0, where id 0 always means "absent / not
detected". The order is load-bearing: it fixes the column order of
annotation tables and the field order of the compact text codec.

Schema file format (UTF-8 text):
    # comment
    @version <string>          (optional, defaults to "1")
    <name>:<label0>|<label1>|...

Annotation table format (CSV):
    frame_id,<attr names in schema order>
    <id>,<int>,<int>,...
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from scene_recall.errors import (
    DuplicateFrameId,
    LengthMismatch,
    SchemaError,
    UnknownClassId,
)


class StageLabel(enum.Enum):
    """Temporal stage of an event attribute within a frame."""

    ABSENT = "absent"
    APPROACHING = "approaching"
    ENTERING = "entering"
    PASSING = "passing"


def binarize_stage(stage: StageLabel) -> int:
    """Collapse a temporal stage into a frame-level present/absent bit.

    ABSENT maps to 0; every other stage maps to 1.
    """
    return 0 if stage is StageLabel.ABSENT else 1


@dataclass(frozen=True)
class AttributeDef:
    """One scene attribute with its class id/label table.

    Class ids must be contiguous from 0 and id 0 denotes "not detected".
    """

    name: str
    classes: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if len(self.classes) < 2:
            raise SchemaError(f"attribute {self.name!r} needs at least 2 classes")
        ids = [cid for cid, _ in self.classes]
        if ids != list(range(len(ids))):
            raise SchemaError(
                f"attribute {self.name!r} class ids must be contiguous from 0, got {ids}"
            )

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def label(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.classes):
            raise UnknownClassId(self.name, class_id)
        return self.classes[class_id][1]


def binary_attribute(name: str) -> AttributeDef:
    """Two-class attribute: 0 = not detected, 1 = detected."""
    return AttributeDef(name, ((0, "not detected"), (1, "detected")))


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered, immutable attribute list; the contract for all tables."""

    attributes: tuple[AttributeDef, ...]
    version: str = "1"

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate attribute names: {dupes}")

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise SchemaError(f"no attribute named {name!r}")


@dataclass(frozen=True)
class AnnotationRecord:
    """Per-frame class ids, one per schema attribute, in schema order."""

    frame_id: str
    values: tuple[int, ...]

    def __post_init__(self):
        # Normalize lists passed by callers; invariants are schema-dependent
        # and checked by validate_annotation.
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))


def validate_annotation(schema: AttributeSchema, rec: AnnotationRecord) -> None:
    """Raise unless rec has one legal class id per schema attribute."""
    if len(rec.values) != len(schema):
        raise LengthMismatch(
            f"record {rec.frame_id!r} has {len(rec.values)} values, "
            f"schema has {len(schema)} attributes"
        )
    for attr, value in zip(schema.attributes, rec.values):
        if not 0 <= value < attr.n_classes:
            raise UnknownClassId(attr.name, value)


def is_all_zero(rec: AnnotationRecord) -> bool:
    """True iff every attribute is class 0 (nothing detected)."""
    return all(v == 0 for v in rec.values)


# -- schema file codec ----------------------------------------------------

_FORBIDDEN = set(":|\n\r")


def schema_to_text(schema: AttributeSchema) -> str:
    """Serialize to the line-oriented schema file format."""
    lines = [f"@version {schema.version}"]
    for attr in schema.attributes:
        for _, label in attr.classes:
            bad = _FORBIDDEN.intersection(attr.name) | _FORBIDDEN.intersection(label)
            if bad:
                raise SchemaError(
                    f"attribute {attr.name!r}: {sorted(bad)} not allowed in names/labels"
                )
        labels = "|".join(label for _, label in attr.classes)
        lines.append(f"{attr.name}:{labels}")
    return "\n".join(lines) + "\n"


def schema_from_text(text: str) -> AttributeSchema:
    """Parse the schema file format; inverse of schema_to_text."""
    version = "1"
    attrs: list[AttributeDef] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@version"):
            version = line[len("@version"):].strip()
            continue
        name, sep, labels = line.partition(":")
        if not sep:
            raise SchemaError(f"line {lineno}: expected 'name:label0|label1|...'")
        classes = tuple(
            (i, label) for i, label in enumerate(labels.split("|"))
        )
        attrs.append(AttributeDef(name.strip(), classes))
    return AttributeSchema(tuple(attrs), version=version)


def load_schema(path: str | Path) -> AttributeSchema:
    return schema_from_text(Path(path).read_text(encoding="utf-8"))


def save_schema(schema: AttributeSchema, path: str | Path) -> None:
    Path(path).write_text(schema_to_text(schema), encoding="utf-8")


# -- annotation table codec ------------------------------------------------


def load_annotations(path: str | Path, schema: AttributeSchema) -> list[AnnotationRecord]:
    """Read and validate an annotation CSV against the schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["frame_id", *schema.names]
        if header != expected:
            raise SchemaError(
                f"annotation header {header!r} does not match schema columns {expected!r}"
            )
        records = []
        seen: set[str] = set()
        for row in reader:
            if not row:
                continue
            frame_id, cells = row[0], row[1:]
            if frame_id in seen:
                raise DuplicateFrameId(f"frame id {frame_id!r} appears twice")
            seen.add(frame_id)
            try:
                values = tuple(int(c) for c in cells)
            except ValueError as exc:
                raise SchemaError(f"frame {frame_id!r}: non-integer cell ({exc})") from exc
            rec = AnnotationRecord(frame_id, values)
            validate_annotation(schema, rec)
            records.append(rec)
    return records


def save_annotations(
    records: Iterable[AnnotationRecord], schema: AttributeSchema, path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", *schema.names])
        for rec in records:
            writer.writerow([rec.frame_id, *rec.values])


# -- default schema --------------------------------------------------------

# The canonical driving-scene schema: every attribute named in the source
# dataset's documentation plus placeholders padding the count to 21. Replace
# with load_schema() for a real deployment; nothing downstream depends on
# this particular membership.
_WEATHER = AttributeDef(
    "Weather",
    ((0, "unknown"), (1, "rainy"), (2, "sunny"), (3, "cloudy"), (4, "foggy")),
)
_SURFACE = AttributeDef(
    "Surface",
    ((0, "unknown"), (1, "dry"), (2, "wet")),
)
_TYPES = AttributeDef(
    # Multi-level scene type attribute; level semantics are dataset-defined.
    "Types",
    ((0, "unknown"), (1, "level 1"), (2, "level 2")),
)
_ROAD_ENV = AttributeDef(
    "RoadEnvironment",
    ((0, "unknown"), (1, "rural"), (2, "urban"), (3, "highway"), (4, "ramp")),
)


def default_schema() -> AttributeSchema:
    """21-attribute driving-scene schema (binary unless noted)."""
    attrs = [
        _WEATHER,
        _SURFACE,
        _TYPES,
        _ROAD_ENV,
        binary_attribute("ZebraCrossing"),
        binary_attribute("StopIntersection"),
        binary_attribute("Merge_GoreOnLeft"),
        binary_attribute("Merge_GoreOnRight"),
        binary_attribute("Branch"),
        binary_attribute("ConstructionZone"),
        binary_attribute("Intersection3Way"),
        binary_attribute("Intersection4Way"),
        binary_attribute("Intersection5Way"),
        binary_attribute("OverheadBridgeUnderpass"),
        binary_attribute("Tunnel"),
        binary_attribute("RailCrossing"),
    ]
    # Pad to the canonical 21 attributes; placeholders are ordinary binary
    # attributes and can be renamed via a schema file.
    while len(attrs) < 21:
        attrs.append(binary_attribute(f"Placeholder{len(attrs) + 1:02d}"))
    return AttributeSchema(tuple(attrs))
