"""LP relaxation of a binary program with some variables fixed.

The simplex result is only used to pick a dual vector.  The bound handed to
branch-and-bound is the Lagrangian value of that (sign-clamped) dual, which
is a valid upper bound for *any* dual vector, so an inaccurate or truncated
simplex run can weaken pruning but never make it unsound.  The same holds for
infeasibility: a node is only declared infeasible from an exact activity
check or from a verified Farkas-type certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IlpModel, Relation, _INT64_SAFE
from . import kernel

LE, GE, EQ = 0, 1, 2
_SENSE = {Relation.LE: LE, Relation.GE: GE, Relation.EQ: EQ}
FEAS_TOL = 1e-9
CERT_TOL = 1e-7


@dataclass
class NodeLP:
    status: str  # "ok", "infeasible", "unknown"
    x: np.ndarray | None
    bound: float
    iterations: int = 0


class Relaxation:
    """Dense copy of an :class:`IlpModel` prepared for repeated node solves."""

    def __init__(self, model: IlpModel, run_simplex=None):
        self.run_simplex = run_simplex or kernel.run_simplex
        n, m = model.num_vars, model.num_constraints
        self.n, self.m = n, m
        self.A = np.zeros((m, n))
        self.b = np.zeros(m)
        self.sense = np.zeros(m, dtype=np.int8)
        ints, rhs = [], []
        for i, con in enumerate(model.constraints):
            for j, v in con.coeffs.items():
                self.A[i, j] = float(v)
            self.b[i] = float(con.rhs)
            self.sense[i] = _SENSE[con.relation]
            coeffs, r = con.scaled()
            ints.append(coeffs)
            rhs.append(r)
        mag = max((sum(abs(v) for v in r.values()) + abs(b) for r, b in zip(ints, rhs)), default=0)
        dtype = np.int64 if mag < _INT64_SAFE else object
        self.Ai = np.zeros((m, n), dtype=dtype)
        for i, r in enumerate(ints):
            for j, v in r.items():
                self.Ai[i, j] = v
        self.bi = np.array(rhs, dtype=dtype)
        self.c = np.zeros(n)
        for j, v in model.objective.items():
            self.c[j] = float(v)

    def solve(self, fixed: np.ndarray, max_iter: int | None = None) -> NodeLP:
        """``fixed[j]`` is -1 for free variables, else the fixed 0/1 value."""
        free = np.flatnonzero(fixed < 0)
        ones = np.flatnonzero(fixed == 1)
        base_obj = float(self.c[ones].sum())

        # exact activity presolve on the integer-scaled rows
        resid = self.bi - self.Ai[:, ones].sum(axis=1) if self.m else self.bi
        Af = self.Ai[:, free]
        lo = np.where(Af < 0, Af, 0).sum(axis=1) if self.m else resid
        hi = np.where(Af > 0, Af, 0).sum(axis=1) if self.m else resid
        s = self.sense
        infeasible = ((s == LE) & (lo > resid)) | ((s == GE) & (hi < resid))
        infeasible |= (s == EQ) & ((lo > resid) | (hi < resid))
        if infeasible.any():
            return NodeLP("infeasible", None, -np.inf)
        redundant = ((s == LE) & (hi <= resid)) | ((s == GE) & (lo >= resid))
        redundant |= (s == EQ) & (lo == resid) & (hi == resid)
        rows = np.flatnonzero(~redundant)

        x = fixed.astype(float)
        if free.size == 0:
            return NodeLP("ok", x, base_obj)
        c = self.c[free]
        if rows.size == 0:
            xf = (c > 0).astype(float)
            x[free] = xf
            return NodeLP("ok", x, base_obj + float(c[c > 0].sum()))

        A = self.A[np.ix_(rows, free)]
        b = self.b[rows] - self.A[np.ix_(rows, ones)].sum(axis=1)
        sense = s[rows]
        return self._simplex(A, b, sense, c, free, x, base_obj, max_iter)

    def _simplex(self, A, b, sense, c, free, x, base_obj, max_iter):
        m, nf = A.shape
        slack_sign = np.where(sense == LE, 1.0, np.where(sense == GE, -1.0, 0.0))
        flip = b < 0
        A = np.where(flip[:, None], -A, A)
        b = np.where(flip, -b, b)
        slack_sign = np.where(flip, -slack_sign, slack_sign)

        slack_rows = np.flatnonzero(slack_sign != 0)
        art_rows = np.flatnonzero(slack_sign != 1)
        ns, na = slack_rows.size, art_rows.size
        N = nf + ns + na
        tab = np.zeros((m, N))
        tab[:, :nf] = A
        slack_col = np.full(m, -1)
        art_col = np.full(m, -1)
        for k, i in enumerate(slack_rows):
            tab[i, nf + k] = slack_sign[i]
            slack_col[i] = nf + k
        for k, i in enumerate(art_rows):
            tab[i, nf + ns + k] = 1.0
            art_col[i] = nf + ns + k
        upper = np.concatenate([np.ones(nf), np.full(ns + na, np.inf)])
        basis = np.where(art_col >= 0, art_col, slack_col).astype(np.int64)
        state = np.ones(N, dtype=np.int8)
        state[basis] = 0
        beta = b.astype(float).copy()
        A_n = tab.copy()
        if max_iter is None:
            max_iter = 50 * (m + N) + 1000
        iterations = 0

        if na:
            cost = np.zeros(N)
            cost[nf + ns:] = -1.0
            d = cost - cost[basis] @ tab
            code, it = self.run_simplex(tab, beta, d, basis, state, upper, max_iter)
            iterations += it
            phase1 = -float(beta[np.isin(basis, art_col[art_rows])].sum())
            if code != 0 or phase1 < -FEAS_TOL:
                y = np.zeros(m)
                has_art = art_col >= 0
                y[has_art] = -1.0 - d[art_col[has_art]]
                only_slack = ~has_art
                y[only_slack] = -d[slack_col[only_slack]] / slack_sign[only_slack]
                y[has_art] = np.maximum(y[has_art], -1.0)
                y = np.where(slack_sign * y < 0, 0.0, y)
                yA = y @ A
                cert = float(y @ b + np.maximum(0.0, -yA).sum())
                if cert < -CERT_TOL:
                    return NodeLP("infeasible", None, -np.inf, iterations)
                return NodeLP("unknown", None, base_obj + float(c[c > 0].sum()), iterations)
            upper[nf + ns:] = 0.0

        cost = np.zeros(N)
        cost[:nf] = c
        d = cost - cost[basis] @ tab
        code, it = self.run_simplex(tab, beta, d, basis, state, upper, max_iter)
        iterations += it

        vals = np.where(state == 2, upper, 0.0)
        vals[basis] = beta
        xf = np.clip(vals[:nf], 0.0, 1.0)

        y = np.zeros(m)
        has_art = art_col >= 0
        y[has_art] = -d[art_col[has_art]]
        only_slack = ~has_art
        y[only_slack] = -d[slack_col[only_slack]] / slack_sign[only_slack]
        y = np.where(slack_sign * y < 0, 0.0, y)
        bound = float(y @ b + np.maximum(0.0, c - y @ A_n[:, :nf]).sum())
        x[free] = xf
        return NodeLP("ok", x, base_obj + bound, iterations)
