"""Pure-numpy retrieval kernels; fallback when the compiled core is absent.

Both backends implement the same two entry points with identical
semantics:

    flat_topk(mat, q, k)                 exhaustive top-k scan
    beam_search(mat, q, adj, deg,
                entries, ef, visited, stamp)   bounded graph search

Similarities are float64 dot products of float32 rows against a float64
query. Ordering is always (similarity descending, ordinal ascending);
ordinals are assigned in ascending frame-id order by the index, so ties
resolve to the smallest frame id.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND_NAME = "python"


def flat_topk(mat: np.ndarray, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k ordinals and similarities over all rows of mat.

    mat may be float32 or float64; q must be float64. Returns arrays of
    length min(k, n) sorted by (similarity desc, ordinal asc).
    """
    sims = mat.astype(np.float64, copy=False) @ q
    n = sims.shape[0]
    m = min(k, n)
    # Stable sort on -sims keeps ascending ordinals among equals.
    order = np.argsort(-sims, kind="stable")[:m]
    return order.astype(np.int64), sims[order]


def beam_search(
    mat: np.ndarray,
    q: np.ndarray,
    adj: np.ndarray,
    deg: np.ndarray,
    entries: np.ndarray,
    ef: int,
    visited: np.ndarray,
    stamp: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Best-first graph search keeping at most ef candidates.

    adj is an (n, cap) int32 adjacency table, deg the per-row neighbor
    count. `visited` is an int32 scratch array reused across calls: a cell
    counts as visited when it equals `stamp`. Returns (ordinals, sims)
    sorted by (similarity desc, ordinal asc).
    """
    mat64 = mat.astype(np.float64, copy=False)
    # Exploration frontier: max-heap by similarity via negation.
    cand: list[tuple[float, int]] = []
    # Result pool, capacity ef: min-heap so the root is the weakest kept
    # entry; -ordinal makes the larger ordinal evict first on equal sims.
    best: list[tuple[float, int]] = []

    for o in entries:
        o = int(o)
        if visited[o] == stamp:
            continue
        visited[o] = stamp
        s = float(mat64[o] @ q)
        if len(best) < ef:
            heapq.heappush(cand, (-s, o))
            heapq.heappush(best, (s, -o))
        elif s > best[0][0]:
            heapq.heappush(cand, (-s, o))
            heapq.heapreplace(best, (s, -o))

    while cand:
        neg_s, o = heapq.heappop(cand)
        if len(best) >= ef and -neg_s < best[0][0]:
            break
        for j in range(int(deg[o])):
            nb = int(adj[o, j])
            if visited[nb] == stamp:
                continue
            visited[nb] = stamp
            s = float(mat64[nb] @ q)
            if len(best) < ef:
                heapq.heappush(cand, (-s, nb))
                heapq.heappush(best, (s, -nb))
            elif s > best[0][0]:
                heapq.heappush(cand, (-s, nb))
                heapq.heapreplace(best, (s, -nb))

    pairs = sorted(((s, -no) for s, no in best), key=lambda t: (-t[0], t[1]))
    ords = np.fromiter((o for _, o in pairs), dtype=np.int64, count=len(pairs))
    sims = np.fromiter((s for s, _ in pairs), dtype=np.float64, count=len(pairs))
    return ords, sims
