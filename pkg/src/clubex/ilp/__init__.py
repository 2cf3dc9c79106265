"""Exact 0/1 integer linear programming.

``solve`` runs the in-house branch-and-bound for small and medium models and
hands large ones to HiGHS; either way the returned assignment has been
checked against every constraint in exact rational arithmetic.
"""

from __future__ import annotations

from .bnb import branch_and_bound
from .kernel import KERNEL
from .model import (
    BRUTE_FORCE_MAX_VARS,
    Constraint,
    IlpModel,
    IlpSolution,
    Relation,
    Status,
    add_binary,
    add_constraint,
    brute_force_solve,
    new_model,
    set_objective,
)

# "auto" keeps models this small on the in-house branch-and-bound
AUTO_BNB_MAX_VARS = 64
AUTO_DENSE_LIMIT = 400_000


def choose_backend(model: IlpModel) -> str:
    size = model.num_vars * max(1, model.num_constraints)
    if model.num_vars <= AUTO_BNB_MAX_VARS and size <= AUTO_DENSE_LIMIT:
        return "bnb"
    return "highs"


def solve(model: IlpModel, time_limit: float | None = None, backend: str = "auto") -> IlpSolution:
    if backend == "auto":
        backend = choose_backend(model)
    if backend == "bnb":
        return branch_and_bound(model, time_limit)
    if backend == "highs":
        from .highs import highs_solve

        sol = highs_solve(model, time_limit)
        if sol.status is Status.TIMED_OUT and "rejected" in sol.info:
            return branch_and_bound(model, time_limit)
        return sol
    if backend == "brute_force":
        return brute_force_solve(model)
    raise ValueError(f"unknown backend {backend!r}")


__all__ = [
    "AUTO_BNB_MAX_VARS",
    "AUTO_DENSE_LIMIT",
    "BRUTE_FORCE_MAX_VARS",
    "Constraint",
    "IlpModel",
    "IlpSolution",
    "KERNEL",
    "Relation",
    "Status",
    "add_binary",
    "add_constraint",
    "branch_and_bound",
    "brute_force_solve",
    "choose_backend",
    "new_model",
    "set_objective",
    "solve",
]
