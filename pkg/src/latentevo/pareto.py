"""Non-dominated sorting, crowding distance, and the crowded-comparison order.

Every objective is minimized. Callers negate any objective that should be
maximized before building objective vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INF = float("inf")

# Row-block size for pairwise dominance passes; bounds memory on large pools.
_BLOCK = 1024


def as_objective_matrix(pop) -> np.ndarray:
    """Validate and return a population as an (N, K) float matrix."""
    try:
        arr = np.asarray(pop, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"objective vectors must share one length: {exc}") from None
    if arr.ndim == 1 and arr.size == 0:
        raise ValueError("population must be non-empty")
    if arr.ndim != 2:
        raise ValueError("objective vectors must share one length")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("population must be non-empty with K >= 1 objectives")
    if not np.isfinite(arr).all():
        raise ValueError("objective vectors must be finite")
    return arr


def dominates(a, b) -> bool:
    """True iff `a` is <= `b` in every objective and < in at least one."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape or av.ndim != 1 or av.size == 0:
        raise ValueError("objective vectors must be non-empty and of equal length")
    if not (np.isfinite(av).all() and np.isfinite(bv).all()):
        raise ValueError("objective vectors must be finite")
    return bool((av <= bv).all() and (av < bv).any())


@dataclass(frozen=True)
class FrontAssignment:
    """Non-domination ranks (1-based), crowding distances, and the front partition."""

    rank: np.ndarray
    crowding: np.ndarray
    fronts: list[np.ndarray]

    def pairs(self) -> list[tuple[int, float]]:
        """Per-candidate (rank, crowding) tuples, e.g. for tournament selection."""
        return [(int(r), float(c)) for r, c in zip(self.rank, self.crowding)]


def _domination_counts(arr: np.ndarray) -> np.ndarray:
    """For each row, the number of rows that dominate it."""
    n = arr.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for start in range(0, n, _BLOCK):
        block = arr[start : start + _BLOCK]  # (b, K)
        le = (block[:, None, :] <= arr[None, :, :]).all(axis=2)
        lt = (block[:, None, :] < arr[None, :, :]).any(axis=2)
        counts += (le & lt).sum(axis=0)
    return counts


def _dominated_by_set(arr: np.ndarray, front_rows: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Per row of `rows`, how many members of `front_rows` dominate it."""
    counts = np.zeros(rows.shape[0], dtype=np.int64)
    sub = arr[rows]
    for start in range(0, front_rows.shape[0], _BLOCK):
        block = arr[front_rows[start : start + _BLOCK]]
        le = (block[:, None, :] <= sub[None, :, :]).all(axis=2)
        lt = (block[:, None, :] < sub[None, :, :]).any(axis=2)
        counts += (le & lt).sum(axis=0)
    return counts


def nondominated_sort(pop) -> FrontAssignment:
    """Partition a population of objective vectors into Pareto fronts.

    Deb's domination-count scheme: front 1 holds the rows dominated by
    nothing; each later front is peeled off after discounting the fronts
    before it. Crowding distances are filled per front. Ranks are 1-based.
    """
    arr = as_objective_matrix(pop)
    n = arr.shape[0]
    counts = _domination_counts(arr)
    rank = np.zeros(n, dtype=np.int64)
    crowding = np.zeros(n, dtype=float)
    fronts: list[np.ndarray] = []
    remaining = np.arange(n)
    level = 1
    while remaining.size:
        in_front = counts[remaining] == 0
        front = remaining[in_front]
        if front.size == 0:  # pragma: no cover - cannot happen for finite inputs
            raise RuntimeError("non-dominated sort failed to make progress")
        rank[front] = level
        fronts.append(front)
        remaining = remaining[~in_front]
        if remaining.size:
            counts[remaining] -= _dominated_by_set(arr, front, remaining)
        crowding[front] = crowding_distance(arr[front])
        level += 1
    return FrontAssignment(rank=rank, crowding=crowding, fronts=fronts)


def crowding_distance(front) -> np.ndarray:
    """Crowding distance of each member of a single non-dominated front.

    Per objective axis, the stably-first holder of the minimum and of the
    maximum value is a boundary point (+inf). Other holders of a boundary
    value are clones of it and contribute zero on that axis. Strict interior
    members add the normalized gap between their sorted neighbours. An axis
    with zero spread is skipped entirely. Fronts of one or two members are
    all boundary.
    """
    arr = as_objective_matrix(front)
    n, k = arr.shape
    if n <= 2:
        return np.full(n, INF)
    dist = np.zeros(n)
    is_boundary = np.zeros(n, dtype=bool)
    for axis in range(k):
        col = arr[:, axis]
        vmin = col.min()
        vmax = col.max()
        if vmax == vmin:
            continue
        is_boundary[int(np.flatnonzero(col == vmin)[0])] = True
        is_boundary[int(np.flatnonzero(col == vmax)[0])] = True
        order = np.lexsort((np.arange(n), col))
        span = vmax - vmin
        for pos in range(1, n - 1):
            idx = order[pos]
            if col[idx] == vmin or col[idx] == vmax:
                continue
            dist[idx] += (col[order[pos + 1]] - col[order[pos - 1]]) / span
    dist[is_boundary] = INF
    return dist


def crowded_less(a: tuple[int, float], b: tuple[int, float]) -> bool:
    """Crowded-comparison order: lower rank wins; within a rank, larger crowding wins."""
    rank_a, crowd_a = a
    rank_b, crowd_b = b
    if rank_a != rank_b:
        return rank_a < rank_b
    return crowd_a > crowd_b
