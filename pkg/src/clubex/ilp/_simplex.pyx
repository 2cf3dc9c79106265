# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Bounded-variable primal simplex on a dense tableau (compiled kernel).

Same contract as ``_simplex_py.run_simplex``: tableau in canonical form for
``basis``, updated in place; column states 0 basic, 1 at lower, 2 at upper.
"""

from libc.math cimport fabs, INFINITY, isfinite

cdef int OPTIMAL = 0
cdef int UNBOUNDED = 1
cdef int ITERATION_LIMIT = 2
cdef int DEGENERATE_SWITCH = 50


cdef inline double _limit(double[:, ::1] tab, double[::1] beta, long[::1] basis,
                          double[::1] upper, Py_ssize_t i, Py_ssize_t j,
                          double direction, double tol):
    cdef double rate = -direction * tab[i, j]
    cdef double lim, ub
    if rate < -tol:
        lim = beta[i] if beta[i] > 0.0 else 0.0
        return lim / -rate
    if rate > tol:
        ub = upper[basis[i]]
        if not isfinite(ub):
            return INFINITY
        lim = ub - beta[i]
        if lim < 0.0:
            lim = 0.0
        return lim / rate
    return INFINITY


def run_simplex(double[:, ::1] tab, double[::1] beta, double[::1] d,
                long[::1] basis, signed char[::1] state, double[::1] upper,
                long max_iter, double tol=1e-9):
    cdef Py_ssize_t m = tab.shape[0]
    cdef Py_ssize_t n = tab.shape[1]
    cdef Py_ssize_t i, k, j, r
    cdef long it = 0
    cdef int bland = 0
    cdef int degenerate = 0
    cdef double best_score, direction, theta, lim, rate_i, piv, f, dj, ub
    cdef double best_rate
    cdef long best_basis
    cdef int leave_to_upper

    while it < max_iter:
        # pricing
        j = -1
        best_score = -1.0
        for k in range(n):
            if state[k] == 1:
                if d[k] > tol and upper[k] > tol:
                    if bland:
                        j = k
                        break
                    if d[k] > best_score:
                        best_score = d[k]
                        j = k
            elif state[k] == 2:
                if d[k] < -tol:
                    if bland:
                        j = k
                        break
                    if -d[k] > best_score:
                        best_score = -d[k]
                        j = k
        if j < 0:
            return OPTIMAL, it
        direction = 1.0 if state[j] == 1 else -1.0

        # ratio test: smallest step, ties by largest |rate| (Bland: lowest basic index)
        theta = INFINITY
        for i in range(m):
            lim = _limit(tab, beta, basis, upper, i, j, direction, tol)
            if lim < theta:
                theta = lim
        r = -1
        best_rate = 0.0
        best_basis = 0
        if isfinite(theta):
            for i in range(m):
                lim = _limit(tab, beta, basis, upper, i, j, direction, tol)
                if lim <= theta + tol:
                    rate_i = fabs(tab[i, j])
                    if r < 0:
                        r = i
                        best_rate = rate_i
                        best_basis = basis[i]
                    elif bland:
                        if basis[i] < best_basis:
                            r = i
                            best_rate = rate_i
                            best_basis = basis[i]
                    elif rate_i > best_rate:
                        r = i
                        best_rate = rate_i
                        best_basis = basis[i]
            theta = _limit(tab, beta, basis, upper, r, j, direction, tol)

        if upper[j] <= theta:
            if not isfinite(upper[j]):
                return UNBOUNDED, it
            theta = upper[j]
            for i in range(m):
                beta[i] += -direction * tab[i, j] * theta
            state[j] = 2 if state[j] == 1 else 1
        else:
            if r < 0:
                return UNBOUNDED, it
            rate_i = -direction * tab[r, j]
            leave_to_upper = 1 if rate_i > 0 else 0
            for i in range(m):
                beta[i] += -direction * tab[i, j] * theta
            piv = tab[r, j]
            for k in range(n):
                tab[r, k] /= piv
            for i in range(m):
                if i == r:
                    continue
                f = tab[i, j]
                if f != 0.0:
                    for k in range(n):
                        tab[i, k] -= f * tab[r, k]
                    tab[i, j] = 0.0
            dj = d[j]
            if dj != 0.0:
                for k in range(n):
                    d[k] -= dj * tab[r, k]
            d[j] = 0.0
            state[basis[r]] = 2 if leave_to_upper else 1
            basis[r] = j
            state[j] = 0
            beta[r] = theta if direction > 0 else upper[j] - theta

        if theta <= tol:
            degenerate += 1
            if degenerate >= DEGENERATE_SWITCH:
                bland = 1
        else:
            degenerate = 0
        it += 1
    return ITERATION_LIMIT, it
