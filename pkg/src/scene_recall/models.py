"""Static metadata registry for the supported vision-language models.

Published approximate figures are stored as exact integers; this is
metadata for reports and model selection, not a measurement. FPS ranges
assume a high-end desktop GPU, VRAM ranges assume batch size 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from scene_recall.errors import UnknownModel


@dataclass(frozen=True)
class ModelMeta:
    """Size, speed and memory envelope of one embedding model."""

    name: str
    image_params: int
    text_params: int
    total_params: int
    fps_range: tuple[int, int]
    vram_gb: tuple[float, float]
    arch_family: str  # "ViT" or "ResNet"

    def __post_init__(self):
        if self.image_params + self.text_params != self.total_params:
            raise ValueError(
                f"{self.name}: image {self.image_params} + text {self.text_params} "
                f"!= total {self.total_params}"
            )
        if self.arch_family not in ("ViT", "ResNet"):
            raise ValueError(f"{self.name}: unknown arch family {self.arch_family!r}")


_M = 1_000_000

MODEL_REGISTRY: dict[str, ModelMeta] = {
    m.name: m
    for m in (
        ModelMeta("ViT-B/32", 86 * _M, 63 * _M, 149 * _M, (150, 200), (1.0, 2.0), "ViT"),
        ModelMeta("ViT-B/16", 86 * _M, 63 * _M, 149 * _M, (80, 120), (2.0, 3.0), "ViT"),
        ModelMeta("ViT-L/14", 304 * _M, 123 * _M, 427 * _M, (30, 60), (4.0, 6.0), "ViT"),
        ModelMeta("RN50", 102 * _M, 63 * _M, 165 * _M, (120, 160), (2.0, 3.0), "ResNet"),
        ModelMeta("RN101", 152 * _M, 63 * _M, 215 * _M, (70, 100), (3.0, 4.0), "ResNet"),
    )
}


def model_registry_lookup(name: str) -> ModelMeta:
    """Look up model metadata; a leading "CLIP " prefix is tolerated."""
    key = name.removeprefix("CLIP ").strip()
    try:
        return MODEL_REGISTRY[key]
    except KeyError:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise UnknownModel(f"unknown model {name!r}; known models: {known}") from None
