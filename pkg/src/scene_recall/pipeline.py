"""Preprocessing: split files, frame-sampling schedules, working sets.

Video decoding is out of scope. Each trip contributes (fps, duration)
metadata; the schedule says which frame indices external tooling must
extract, and frames are identified as `<trip_id>_<frame_index:06d>`
everywhere downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scene_recall.embeddings import EmbeddingRecord, EmbeddingSet
from scene_recall.errors import (
    DuplicateTrip,
    InvalidParams,
    MissingFrame,
    SplitOverlap,
)
from scene_recall.schema import AnnotationRecord, is_all_zero

ROLES = ("train", "test")
# Sampling period per role: one frame per second for test, one per two
# seconds for train.
ROLE_PERIOD_S = {"test": 1.0, "train": 2.0}


@dataclass(frozen=True)
class SplitManifest:
    role: str
    trip_ids: tuple[str, ...]


@dataclass(frozen=True)
class TripMeta:
    trip_id: str
    fps: float
    duration_s: float


@dataclass(frozen=True)
class SamplePlan:
    trip_id: str
    fps: float
    duration_s: float
    role: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class WorkingSet:
    """Aligned embeddings + annotations for one role, ascending frame_id."""

    role: str
    embeddings: EmbeddingSet
    annotations: tuple[AnnotationRecord, ...]


def _check_role(role: str) -> None:
    if role not in ROLES:
        raise InvalidParams(f"role must be one of {ROLES}, got {role!r}")


def frame_id(trip_id: str, index: int) -> str:
    return f"{trip_id}_{index:06d}"


def parse_split(path: str | Path, role: str) -> SplitManifest:
    """One trip id per non-empty line, order preserved."""
    _check_role(role)
    seen: set[str] = set()
    trips: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            trip = line.strip()
            if not trip:
                continue
            if trip in seen:
                raise DuplicateTrip(f"trip {trip!r} listed twice in {path}")
            seen.add(trip)
            trips.append(trip)
    return SplitManifest(role, tuple(trips))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample_schedule(fps: float, duration_s: float, role: str) -> list[int]:
    """Frame indices at round(t * fps) for t = 0, Δ, 2Δ, ... < duration_s."""
    _check_role(role)
    if not (fps > 0) or not (duration_s > 0):
        raise InvalidParams(f"fps and duration must be positive, got {fps}, {duration_s}")
    if not (math.isfinite(fps) and math.isfinite(duration_s)):
        raise InvalidParams("fps and duration must be finite")
    period = ROLE_PERIOD_S[role]
    limit = math.floor(fps * duration_s)
    indices: list[int] = []
    step = 0
    while step * period < duration_s:
        idx = _round_half_up(step * period * fps)
        # Defensive at fractional rates: stay inside the clip and ascending.
        if idx < limit and (not indices or idx > indices[-1]):
            indices.append(idx)
        step += 1
    return indices


def filter_informative(records: Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    """Drop frames whose every attribute is 0; order preserved."""
    return [rec for rec in records if not is_all_zero(rec)]


def load_trip_meta(path: str | Path) -> dict[str, TripMeta]:
    """CSV `trip_id,fps,duration_s` keyed by trip."""
    metas: dict[str, TripMeta] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["trip_id", "fps", "duration_s"]:
            raise InvalidParams(f"{path}: expected header trip_id,fps,duration_s, got {header}")
        for row in reader:
            if len(row) != 3:
                raise InvalidParams(f"{path}: expected 3 cells per row, got {row}")
            trip = row[0]
            if trip in metas:
                raise DuplicateTrip(f"trip {trip!r} listed twice in {path}")
            try:
                fps, duration = float(row[1]), float(row[2])
            except ValueError as exc:
                raise InvalidParams(f"{path}: bad number in row {row}") from exc
            metas[trip] = TripMeta(trip, fps, duration)
    return metas


def build_plans(manifest: SplitManifest, metas: Mapping[str, TripMeta]) -> list[SamplePlan]:
    plans = []
    for trip in manifest.trip_ids:
        meta = metas.get(trip)
        if meta is None:
            raise MissingFrame(f"trip {trip!r} has no fps/duration metadata")
        plans.append(
            SamplePlan(
                trip,
                meta.fps,
                meta.duration_s,
                manifest.role,
                tuple(sample_schedule(meta.fps, meta.duration_s, manifest.role)),
            )
        )
    return plans


def save_schedule(path: str | Path, plans: Sequence[SamplePlan]) -> None:
    """CSV `trip_id,frame_index`, one row per scheduled frame."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trip_id", "frame_index"])
        for plan in plans:
            for idx in plan.indices:
                w.writerow([plan.trip_id, idx])


def assemble(
    train: SplitManifest,
    test: SplitManifest,
    plans: Iterable[SamplePlan],
    annotations: Iterable[AnnotationRecord] | Mapping[str, AnnotationRecord],
    embeddings: EmbeddingSet,
) -> dict[str, WorkingSet]:
    """Gather each role's scheduled frames; all-zero frames are dropped.

    Every scheduled frame must have both an annotation and an embedding.
    """
    if train.role != "train" or test.role != "test":
        raise InvalidParams(
            f"manifest roles are {train.role!r}/{test.role!r}, expected train/test"
        )
    overlap = set(train.trip_ids) & set(test.trip_ids)
    if overlap:
        raise SplitOverlap(f"trips in both splits: {sorted(overlap)}")
    if not isinstance(annotations, Mapping):
        annotations = {rec.frame_id: rec for rec in annotations}
    by_trip: dict[str, SamplePlan] = {}
    for plan in plans:
        if plan.trip_id in by_trip:
            raise DuplicateTrip(f"two sample plans for trip {plan.trip_id!r}")
        by_trip[plan.trip_id] = plan
    emb_by_id = {rec.frame_id: rec for rec in embeddings.records}

    out: dict[str, WorkingSet] = {}
    for manifest in (train, test):
        kept_ann: list[AnnotationRecord] = []
        kept_emb: list[EmbeddingRecord] = []
        for trip in manifest.trip_ids:
            plan = by_trip.get(trip)
            if plan is None:
                raise MissingFrame(f"trip {trip!r} has no sample plan")
            for idx in plan.indices:
                fid = frame_id(trip, idx)
                ann = annotations.get(fid)
                if ann is None:
                    raise MissingFrame(f"scheduled frame {fid!r} has no annotation")
                emb = emb_by_id.get(fid)
                if emb is None:
                    raise MissingFrame(f"scheduled frame {fid!r} has no embedding")
                if is_all_zero(ann):
                    continue
                kept_ann.append(ann)
                kept_emb.append(emb)
        order = sorted(range(len(kept_ann)), key=lambda i: kept_ann[i].frame_id)
        out[manifest.role] = WorkingSet(
            manifest.role,
            EmbeddingSet(embeddings.dimension, tuple(kept_emb[i] for i in order)),
            tuple(kept_ann[i] for i in order),
        )
    return out
