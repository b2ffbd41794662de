"""Optimal bipartite matching on IoU with a documented tie-break.

The matching maximizes total IoU (Hungarian); among equally good
assignments the lexicographic rule wins: the lowest row index is paired
with the lowest column index that still admits an optimal completion.
Rows are tracks sorted by id and columns are detections in input order,
so ties break by lowest track id, then lowest detection index.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

_TIE_TOL = 1e-9


def _best_total(scores: np.ndarray) -> float:
    if scores.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(scores, maximize=True)
    return float(scores[rows, cols].sum())


def match(scores: np.ndarray, min_score: float = 0.0, strict: bool = True
          ) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Match rows to columns maximizing the total score.

    Pairs whose score fails the acceptance test (> min_score, or >= when
    strict is False) are rejected after the assignment, their endpoints
    reported unmatched. Returns (pairs, unmatched_rows, unmatched_cols).
    """
    scores = np.asarray(scores, dtype=np.float64)
    n_rows, n_cols = scores.shape
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))

    target = _best_total(scores)
    pairs: list[tuple[int, int]] = []
    fixed = 0.0
    free_cols = list(range(n_cols))
    for i in range(n_rows):
        rest_rows = [r for r in range(i + 1, n_rows)]
        chosen = None
        for c in free_cols:
            rest_cols = [x for x in free_cols if x != c]
            total = fixed + scores[i, c] + _best_total(scores[np.ix_(rest_rows, rest_cols)])
            if total >= target - _TIE_TOL:
                chosen = c
                break
        if chosen is None:
            continue  # row stays unmatched in every optimal assignment
        pairs.append((i, chosen))
        fixed += scores[i, chosen]
        free_cols.remove(chosen)

    accepted = []
    un_rows = set(range(n_rows))
    un_cols = set(range(n_cols))
    for i, c in pairs:
        ok = scores[i, c] > min_score if strict else scores[i, c] >= min_score
        if ok:
            accepted.append((i, c))
            un_rows.discard(i)
            un_cols.discard(c)
    return accepted, sorted(un_rows), sorted(un_cols)
