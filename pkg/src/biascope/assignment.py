"""Optimal one-to-one assignment (Hungarian algorithm, O(n^3) potentials form)."""

from __future__ import annotations

import numpy as np


def min_cost_assignment(cost: np.ndarray) -> list[int]:
    """Column assigned to each row of a square cost matrix (minimization).

    Shortest-augmenting-path implementation with row/column potentials;
    deterministic for ties.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=int)  # match[j] = row assigned to column j (1-based)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        if match[j]:
            row_to_col[match[j] - 1] = j - 1
    return row_to_col


def max_similarity_assignment(sim: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Best one-to-one matching of a (possibly rectangular) similarity matrix.

    Returns the total similarity of the optimal matching and the matched
    (row, column) pairs; pads to square internally, padded pairs are dropped.
    """
    sim = np.asarray(sim, dtype=np.float64)
    if sim.size == 0:
        return 0.0, []
    n_rows, n_cols = sim.shape
    n = max(n_rows, n_cols)
    padded = np.zeros((n, n))
    padded[:n_rows, :n_cols] = sim
    cost = padded.max() - padded
    row_to_col = min_cost_assignment(cost)
    pairs = [
        (r, c)
        for r, c in enumerate(row_to_col)
        if r < n_rows and c < n_cols
    ]
    total = float(sum(sim[r, c] for r, c in pairs))
    return total, pairs
