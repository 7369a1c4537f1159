"""Dense tableau simplex for the master relaxation.

Solves max_x min_k (c0[k] + C[k] . x) over the unit box x in [0,1]^F via the
epigraph form: maximize t subject to t - C[k] . x <= c0[k] and 0 <= x <= 1.
The level variable is shifted by a lower bound so the all-slack basis is
feasible and no phase-1 is needed. Bland's rule keeps the pivoting finite on
degenerate systems.
"""

import numpy as np

from .errors import UsageError

_PIVOT_TOL = 1e-10
_COST_TOL = 1e-10


def box_epigraph_max(c0, C):
    """Return (value, x) maximizing the pointwise minimum of affine forms.

    c0: (K,) constants. C: (K, F) coefficients. F may be zero, in which case
    the optimum is simply min(c0) with an empty x.
    """
    c0 = np.asarray(c0, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if c0.ndim != 1 or c0.size == 0:
        raise UsageError("need at least one affine form")
    K = c0.size
    C = C.reshape(K, -1)
    F = C.shape[1]
    if F == 0:
        return float(np.min(c0)), np.zeros(0)

    # Shift the level variable: t >= LB holds at every box point, so the
    # substitution t = LB + t' keeps the optimum and makes every rhs >= 0.
    LB = float(np.min(c0 + np.minimum(C, 0.0).sum(axis=1)))
    n = 1 + F  # structural variables: t', x
    m = K + F  # cut rows plus upper-bound rows for x

    T = np.zeros((m + 1, n + m + 1))
    T[:K, 0] = 1.0
    T[:K, 1 : 1 + F] = -C
    T[:K, -1] = c0 - LB
    for i in range(F):
        T[K + i, 1 + i] = 1.0
        T[K + i, -1] = 1.0
    T[:m, n : n + m] = np.eye(m)
    T[-1, 0] = -1.0  # maximize t'

    basis = np.arange(n, n + m)
    max_pivots = 50 * (m + n) + 200
    bland_after = 5 * (m + n) + 50  # Dantzig first, Bland once cycling is plausible
    for pivots in range(max_pivots):
        costs = T[-1, : n + m]
        if pivots < bland_after:
            col = int(np.argmin(costs))
            if costs[col] >= -_COST_TOL:
                break
        else:
            negative = np.flatnonzero(costs < -_COST_TOL)
            if negative.size == 0:
                break
            col = int(negative[0])  # Bland: smallest eligible index
        column = T[:m, col]
        rows = np.flatnonzero(column > _PIVOT_TOL)
        if rows.size == 0:
            raise UsageError("relaxation is unbounded; malformed cut system")
        ratios = T[rows, -1] / column[rows]
        best = np.min(ratios)
        ties = rows[ratios <= best + 1e-12]
        row = int(ties[np.argmin(basis[ties])])  # Bland on the leaving variable
        pivot = T[row, col]
        T[row, :] /= pivot
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row, :])
        basis[row] = col
    else:
        raise UsageError("simplex failed to terminate")

    x_full = np.zeros(n + m)
    x_full[basis] = T[:m, -1]
    value = LB + float(T[-1, -1])
    return value, x_full[1 : 1 + F].copy()
