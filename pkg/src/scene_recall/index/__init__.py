"""Exact and approximate cosine retrieval over embedding sets."""

from scene_recall.index.ann import AnnIndex, AnnParams, build_ann, query_ann
from scene_recall.index.flat import FlatIndex, Neighbor, build_flat, query_flat
from scene_recall.index.io import load_index, save_index

__all__ = [
    "AnnIndex",
    "AnnParams",
    "FlatIndex",
    "Neighbor",
    "build_ann",
    "build_flat",
    "load_index",
    "query_ann",
    "query_flat",
    "save_index",
]
