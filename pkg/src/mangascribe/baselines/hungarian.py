"""Minimum-cost bipartite matching with deterministic tie-breaking."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def _optimum(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum())


def _lex_min_wide(cost: np.ndarray) -> list[int]:
    """Column per row (rows <= cols), lexicographically smallest optimum."""
    n_rows, n_cols = cost.shape
    best = _optimum(cost)
    tol = 1e-9 * max(1.0, abs(best))
    rows = list(range(n_rows))
    cols = list(range(n_cols))
    fixed = 0.0
    out = []
    for r in range(n_rows):
        rest_rows = rows[r + 1:]
        for c in cols:
            rest_cols = [x for x in cols if x != c]
            sub = cost[np.ix_(rest_rows, rest_cols)]
            if fixed + cost[r, c] + _optimum(sub) <= best + tol:
                out.append(c)
                fixed += cost[r, c]
                cols = rest_cols
                break
        else:  # pragma: no cover - an optimum always extends
            raise RuntimeError("failed to extend optimal matching")
    return out


def hungarian(cost: np.ndarray) -> dict[int, int]:
    """Minimum-cost maximal matching as a ``row -> column`` map.

    Among optimal matchings the lexicographically smallest is returned: the
    column vector in row order when rows <= cols, else the row vector in
    column order. Unmatched rows of a tall matrix are absent from the map.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise ValueError("cost matrix must be non-empty and 2-D")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if cost.shape[0] <= cost.shape[1]:
        return dict(enumerate(_lex_min_wide(cost)))
    col_to_row = _lex_min_wide(cost.T)
    return {r: c for c, r in sorted(enumerate(col_to_row), key=lambda t: t[1])}


def matching_cost(cost: np.ndarray, matching: dict[int, int]) -> float:
    cost = np.asarray(cost)
    return float(sum(cost[r, c] for r, c in matching.items()))
