"""Index persistence.

Layout (little-endian, no padding):

    magic   4s   "VIX1"
    version u16  1
    kind    u8   0 = flat, 1 = ann
    <vector payload: dimension u32, count u64, then per record
     id-length u16, UTF-8 id, dimension float32 components>

The ann kind appends the build parameters and the graph:

    max_degree u16, beam_width u16, seed u64,
    entry u32, level_count u16,
    per level: node count u64, then per node
        degree u16 + degree * u32 neighbor ordinals
    (levels above 0 carry sparse membership, so each node record there is
     prefixed with its ordinal u32; level 0 covers every ordinal in order)

Ordinals refer to records in ascending frame-id order, which is also the
order the payload is written in. Loading a flat index rebuilds it from the
payload; loading an ann index reattaches the stored adjacency unchanged, so
a round-trip answers every query identically.
"""

from __future__ import annotations

import struct
from pathlib import Path

from scene_recall.embeddings import EmbeddingSet, _Cursor, _pack_body, _unpack_body
from scene_recall.errors import BadMagic, InvalidParams, TruncatedFile, VersionUnsupported
from scene_recall.index.ann import AnnIndex, AnnParams, _Layer
from scene_recall.index.flat import FlatIndex, build_flat, sorted_rows

MAGIC = b"VIX1"
VERSION = 1
KIND_FLAT = 0
KIND_ANN = 1


def _embedding_set(ix: FlatIndex | AnnIndex) -> EmbeddingSet:
    # Index rows are already validated unit vectors in ascending-id order.
    from scene_recall.embeddings import EmbeddingRecord

    records = tuple(
        EmbeddingRecord(fid, ix.vectors[i]) for i, fid in enumerate(ix.ids)
    )
    return EmbeddingSet(ix.dimension, records)


def _pack_ann_graph(ix: AnnIndex) -> bytes:
    parts = [
        struct.pack(
            "<HHQIH",
            ix.params.max_degree,
            ix.params.beam_width,
            ix.params.seed,
            ix.entry_point,
            ix.level_count,
        )
    ]
    for level in range(ix.level_count):
        layer = ix.layer(level)
        if level == 0:
            members = range(ix.size)
        else:
            members = [o for o in range(ix.size) if layer.deg[o] > 0 or o == ix.entry_point]
        parts.append(struct.pack("<Q", len(members)))
        for o in members:
            nbs = layer.neighbors(o)
            if level > 0:
                parts.append(struct.pack("<I", o))
            parts.append(struct.pack("<H", len(nbs)))
            parts.append(struct.pack(f"<{len(nbs)}I", *(int(x) for x in nbs)))
    return b"".join(parts)


def _unpack_ann_graph(cur: _Cursor, n: int) -> tuple[AnnParams, int, list[_Layer]]:
    max_degree, beam_width, seed, entry, level_count = struct.unpack(
        "<HHQIH", cur.take(18)
    )
    params = AnnParams(max_degree=max_degree, beam_width=beam_width, seed=seed)
    if entry >= n:
        raise InvalidParams(f"entry ordinal {entry} out of range for {n} records")
    if level_count < 1:
        raise InvalidParams("ann index must have at least one level")
    layers: list[_Layer] = []
    for level in range(level_count):
        (count,) = struct.unpack("<Q", cur.take(8))
        if level == 0 and count != n:
            raise InvalidParams(f"level 0 covers {count} nodes, expected {n}")
        layer = _Layer(n, (2 * max_degree if level == 0 else max_degree) + 1)
        for i in range(count):
            o = i if level == 0 else struct.unpack("<I", cur.take(4))[0]
            if o >= n:
                raise InvalidParams(f"node ordinal {o} out of range")
            (deg,) = struct.unpack("<H", cur.take(2))
            nbs = struct.unpack(f"<{deg}I", cur.take(4 * deg))
            for nb in nbs:
                if nb >= n:
                    raise InvalidParams(f"neighbor ordinal {nb} out of range")
                layer.append(o, int(nb))
        layers.append(layer)
    return params, entry, layers


def save_index(ix: FlatIndex | AnnIndex, path: str | Path) -> None:
    """Write the index; identical indexes produce identical bytes."""
    kind = KIND_FLAT if ix.kind == "flat" else KIND_ANN
    blob = [struct.pack("<4sHB", MAGIC, VERSION, kind), _pack_body(_embedding_set(ix))]
    if kind == KIND_ANN:
        blob.append(_pack_ann_graph(ix))
    Path(path).write_bytes(b"".join(blob))


def load_index(path: str | Path, backend: str = "auto") -> FlatIndex | AnnIndex:
    data = Path(path).read_bytes()
    if len(data) < 7:
        raise TruncatedFile(f"{path}: {len(data)} bytes is too short for a header")
    magic, version, kind = struct.unpack_from("<4sHB", data, 0)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"{path}: version {version} unsupported")
    cur = _Cursor(data, 7)
    es = _unpack_body(cur)
    if kind == KIND_FLAT:
        cur.done()
        return build_flat(es, backend=backend)
    if kind != KIND_ANN:
        raise VersionUnsupported(f"{path}: unknown index kind {kind}")
    ids = es.frame_ids
    if any(ids[i] >= ids[i + 1] for i in range(len(ids) - 1)):
        raise InvalidParams(f"{path}: ann payload ids are not strictly ascending")
    params, entry, layers = _unpack_ann_graph(cur, len(ids))
    cur.done()
    mat, sorted_ids = sorted_rows(es)
    return AnnIndex(mat, sorted_ids, params, layers, entry, backend=backend)
