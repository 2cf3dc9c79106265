"""Large-model backend: scipy's HiGHS MILP solver, with exact re-checking."""

from __future__ import annotations

import time

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import IlpModel, IlpSolution, Relation, Status


def highs_solve(model: IlpModel, time_limit: float | None = None) -> IlpSolution:
    start = time.monotonic()
    n, m = model.num_vars, model.num_constraints
    if n == 0:
        feasible = model.is_feasible(())
        status = Status.OPTIMAL if feasible else Status.INFEASIBLE
        val = 0 if feasible else None
        return IlpSolution(status, () if feasible else None, val, val, 0.0, 0, "highs")

    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = -float(v)
    rows, cols, vals = [], [], []
    lb = np.full(m, -np.inf)
    ub = np.full(m, np.inf)
    for i, con in enumerate(model.constraints):
        for j, v in con.coeffs.items():
            rows.append(i)
            cols.append(j)
            vals.append(float(v))
        r = float(con.rhs)
        if con.relation is not Relation.GE:
            ub[i] = r
        if con.relation is not Relation.LE:
            lb[i] = r
    constraints = []
    if m:
        A = sparse.csr_array((vals, (rows, cols)), shape=(m, n))
        constraints.append(LinearConstraint(A, lb, ub))
    options = {"disp": False, "mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(
        c,
        constraints=constraints,
        integrality=np.ones(n),
        bounds=Bounds(0, 1),
        options=options,
    )
    info = {"time": time.monotonic() - start, "message": res.message}
    dual = getattr(res, "mip_dual_bound", None)
    bound = None if dual is None or not np.isfinite(dual) else -float(dual)

    if res.status == 2:
        return IlpSolution(Status.INFEASIBLE, backend="highs", info=info)
    assignment = None
    value = None
    if res.x is not None:
        cand = tuple(int(v) for v in np.round(res.x))
        if model.is_feasible(cand):
            assignment, value = cand, model.objective_value(cand)
        else:
            info["rejected"] = "rounded HiGHS point violates a constraint exactly"
    if res.status == 0 and assignment is not None:
        return IlpSolution(Status.OPTIMAL, assignment, value, value, None, 0, "highs", info)
    return IlpSolution(Status.TIMED_OUT, assignment, value, bound, None, 0, "highs", info)
