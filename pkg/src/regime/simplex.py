"""Small dense phase-1 simplex for linear feasibility questions.

The certificate searches in this package only ever ask "is there an x >= 0
with A x <= b", at sizes of a few dozen variables, so a plain tableau with
Bland's rule is plenty and keeps the answer self-contained.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import SolverFailure

_TOL = 1e-9


def feasible_point(a_ub, b_ub, max_iter: int = 20000) -> Optional[np.ndarray]:
    """Return some x >= 0 with ``a_ub @ x <= b_ub``, or None if infeasible.

    Raises SolverFailure if the pivoting breaks down (iteration cap or a
    structurally impossible unbounded phase-1), which is distinct from a
    clean infeasibility verdict.
    """
    a = np.atleast_2d(np.asarray(a_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float).ravel()
    m, n = a.shape
    if b.shape != (m,):
        raise ValueError("b_ub length must match the number of rows of a_ub")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("feasibility data must be finite")
    if (b >= 0).all():
        return np.zeros(n)  # the slack basis is already feasible

    # row-equilibrate, flip rows to rhs >= 0, add slacks and artificials
    norms = np.maximum(np.abs(a).max(axis=1), np.abs(b))
    norms = np.where(norms > 0, norms, 1.0)
    a = a / norms[:, None]
    b = b / norms

    art_rows = np.flatnonzero(b < 0)
    n_art = art_rows.size
    width = n + m + n_art + 1
    t = np.zeros((m, width))
    basis = np.empty(m, dtype=int)
    art_col = {}
    k = 0
    for i in range(m):
        if b[i] < 0:
            t[i, :n] = -a[i]
            t[i, n + i] = -1.0
            col = n + m + k
            t[i, col] = 1.0
            t[i, -1] = -b[i]
            basis[i] = col
            art_col[i] = col
            k += 1
        else:
            t[i, :n] = a[i]
            t[i, n + i] = 1.0
            t[i, -1] = b[i]
            basis[i] = n + i

    # phase-1 objective row: minimise the artificial total
    cost = np.zeros(width)
    for col in art_col.values():
        cost[col] = 1.0
    red = cost.copy()
    for i in range(m):
        if basis[i] in art_col.values():
            red -= t[i]

    first_art = n + m
    blocked: set = set()
    for _ in range(max_iter):
        entering = -1
        for j in range(width - 1):  # Bland: smallest eligible index
            if j not in blocked and red[j] < -_TOL:
                entering = j
                break
        if entering < 0:
            break
        col = t[:, entering]
        cand = [i for i in range(m) if col[i] > _TOL]
        if not cand:
            # phase-1 is bounded below by 0, so a seemingly unbounded column is
            # round-off at a degenerate vertex; retire it and move on
            blocked.add(entering)
            continue
        best = min(t[i, -1] / col[i] for i in cand)
        leave = min((i for i in cand if t[i, -1] / col[i] <= best + _TOL),
                    key=lambda i: basis[i])
        piv = t[leave, entering]
        t[leave] /= piv
        for i in range(m):
            if i != leave and t[i, entering] != 0.0:
                t[i] -= t[i, entering] * t[leave]
        red -= red[entering] * t[leave]
        basis[leave] = entering
        blocked.clear()
    else:
        raise SolverFailure("phase-1 simplex hit the iteration cap")

    infeas = sum(t[i, -1] for i in range(m) if basis[i] >= first_art)
    if infeas > 1e-7:
        return None
    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = max(t[i, -1], 0.0)
    return x
