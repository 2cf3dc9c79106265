"""Bounded-variable primal simplex on a dense tableau (numpy implementation).

The caller hands over a tableau already in canonical form for ``basis``;
everything is updated in place.  Column states: 0 basic, 1 nonbasic at its
lower bound (0), 2 nonbasic at its upper bound.

Return codes: 0 optimal, 1 unbounded, 2 iteration limit.
"""

import numpy as np

OPTIMAL, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2
# consecutive degenerate pivots before switching to Bland's rule
DEGENERATE_SWITCH = 50


def run_simplex(tab, beta, d, basis, state, upper, max_iter, tol=1e-9):
    m, n = tab.shape
    bland = False
    degenerate = 0
    it = 0
    cols = np.arange(n)
    while it < max_iter:
        movable = upper > tol
        can_up = (state == 1) & (d > tol) & movable
        can_down = (state == 2) & (d < -tol)
        cand = can_up | can_down
        if not cand.any():
            return OPTIMAL, it
        if bland:
            j = int(cols[cand][0])
        else:
            score = np.where(cand, np.abs(d), -1.0)
            j = int(np.argmax(score))
        direction = 1.0 if state[j] == 1 else -1.0

        # basic values move at rate -direction * tab[:, j]
        rate = -direction * tab[:, j] if m else np.zeros(0)
        theta = np.inf
        leave = -1
        leave_to_upper = False
        if m:
            ub = upper[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = rate < -tol
                inc = (rate > tol) & np.isfinite(ub)
                lim = np.full(m, np.inf)
                lim[dec] = np.maximum(beta[dec], 0.0) / -rate[dec]
                lim[inc] = np.maximum(ub[inc] - beta[inc], 0.0) / rate[inc]
            best = lim.min()
            if np.isfinite(best):
                ties = np.flatnonzero(lim <= best + tol)
                if bland:
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(rate[ties]))])
                theta = lim[r]
                leave = r
                leave_to_upper = bool(rate[r] > 0)

        if upper[j] <= theta:
            if not np.isfinite(upper[j]):
                return UNBOUNDED, it
            # bound flip, no basis change
            theta = upper[j]
            beta += rate * theta
            state[j] = 2 if state[j] == 1 else 1
        else:
            if leave < 0:
                return UNBOUNDED, it
            beta += rate * theta
            entering_value = theta if direction > 0 else upper[j] - theta
            piv = tab[leave, j]
            tab[leave, :] /= piv
            col = tab[:, j].copy()
            col[leave] = 0.0
            tab -= np.outer(col, tab[leave, :])
            d -= d[j] * tab[leave, :]
            d[j] = 0.0
            old = basis[leave]
            state[old] = 2 if leave_to_upper else 1
            basis[leave] = j
            state[j] = 0
            beta[leave] = entering_value

        if theta <= tol:
            degenerate += 1
            if degenerate >= DEGENERATE_SWITCH:
                bland = True
        else:
            degenerate = 0
        it += 1
    return ITERATION_LIMIT, it
