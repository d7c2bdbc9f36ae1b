"""Backend selection for the retrieval kernels.

The compiled Cython core is preferred; the pure-numpy module is the
fallback. SCENE_RECALL_BACKEND=python or =compiled forces a choice
(forcing "compiled" when the extension is missing raises at first use).
Both backends satisfy the same contracts; per-backend output is
deterministic, and the test suite checks cross-backend agreement.
"""

from __future__ import annotations

import os

from scene_recall import _kernels_py
from scene_recall.errors import InvalidParams

try:
    from scene_recall import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_backend(name: str = "auto"):
    """Return the kernel module for `name` ("auto", "compiled", "python")."""
    if name == "auto":
        name = os.environ.get("SCENE_RECALL_BACKEND", "auto")
    if name == "auto":
        return _compiled if _compiled is not None else _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise InvalidParams("compiled kernels are not available in this install")
        return _compiled
    if name == "python":
        return _kernels_py
    raise InvalidParams(f"unknown backend {name!r}; use auto, compiled or python")


def default_backend_name() -> str:
    return get_backend("auto").BACKEND_NAME
