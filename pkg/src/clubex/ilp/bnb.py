"""Best-bound branch-and-bound over the LP relaxation."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from fractions import Fraction

import numpy as np

from .lp import Relaxation
from .model import IlpModel, IlpSolution, Status

BOUND_MARGIN = 1e-9
INT_TOL = 1e-9


def _branch_var(x: np.ndarray, fixed: np.ndarray) -> int:
    """Most fractional free variable, ties to the lowest index; -1 if integral."""
    free = np.flatnonzero(fixed < 0)
    if free.size == 0:
        return -1
    frac = np.abs(x[free] - np.round(x[free]))
    k = int(np.argmax(frac))
    if frac[k] <= INT_TOL:
        return -1
    return int(free[k])


def branch_and_bound(model: IlpModel, time_limit: float | None = None, run_simplex=None) -> IlpSolution:
    start = time.monotonic()
    deadline = None if time_limit is None else start + time_limit
    n = model.num_vars
    relax = Relaxation(model, run_simplex)
    step = model.objective_step()

    best: tuple[int, ...] | None = None
    best_val: Fraction | None = None

    def offer(assignment) -> bool:
        nonlocal best, best_val
        assignment = tuple(int(v) for v in assignment)
        if not model.is_feasible(assignment):
            return False
        val = model.objective_value(assignment)
        if best_val is None or val > best_val:
            best, best_val = assignment, val
        return True

    offer([0] * n)

    def prunable(bound: float) -> bool:
        if best_val is None:
            return False
        # any strictly better solution is worth at least best_val + step
        target = float(best_val + step) if step else float(best_val)
        if step:
            return bound + BOUND_MARGIN * max(1.0, abs(bound)) < target
        return bound + BOUND_MARGIN * max(1.0, abs(bound)) <= target

    counter = itertools.count()
    root_fixed = np.full(n, -1, dtype=np.int8)
    heap: list = []
    nodes = 0
    root_bound = None
    timed_out = False

    def process(fixed: np.ndarray):
        nonlocal nodes, root_bound
        nodes += 1
        res = relax.solve(fixed)
        if root_bound is None:
            root_bound = res.bound
        if res.status == "infeasible":
            return
        if prunable(res.bound):
            return
        if res.status == "unknown":
            j = int(np.flatnonzero(fixed < 0)[0])
        else:
            j = _branch_var(res.x, fixed)
            if j < 0:
                xi = np.round(res.x).astype(int)
                ok = offer(xi)
                if ok and prunable(res.bound):
                    return
                free = np.flatnonzero(fixed < 0)
                if free.size == 0:
                    return
                # integral but bound not closed (or rounding broke feasibility)
                j = int(free[0])
        heapq.heappush(heap, (-res.bound, next(counter), j, fixed))

    process(root_fixed)
    while heap:
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        neg_bound, _, j, fixed = heapq.heappop(heap)
        if prunable(-neg_bound):
            continue
        for val in (1, 0):
            child = fixed.copy()
            child[j] = val
            process(child)

    elapsed = time.monotonic() - start
    info = {"time": elapsed}
    if timed_out:
        open_bound = max([-h[0] for h in heap], default=-math.inf)
        bound = max(open_bound, float(best_val) if best_val is not None else -math.inf)
        return IlpSolution(Status.TIMED_OUT, best, best_val, bound, root_bound, nodes, "bnb", info)
    if best is None:
        return IlpSolution(Status.INFEASIBLE, None, None, None, root_bound, nodes, "bnb", info)
    return IlpSolution(Status.OPTIMAL, best, best_val, best_val, root_bound, nodes, "bnb", info)
