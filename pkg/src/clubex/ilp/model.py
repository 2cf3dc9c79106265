"""Binary integer linear programs with exact rational data."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..model import as_fraction

BRUTE_FORCE_MAX_VARS = 25
_INT64_SAFE = 2**62


class Relation(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMED_OUT = "timed_out"


@dataclass
class Constraint:
    coeffs: dict[int, Fraction]
    relation: Relation
    rhs: Fraction

    def scaled(self) -> tuple[dict[int, int], int]:
        """Integer coefficients and rhs, multiplied through by the common denominator."""
        den = 1
        for v in self.coeffs.values():
            den = math.lcm(den, v.denominator)
        den = math.lcm(den, self.rhs.denominator)
        return {j: int(v * den) for j, v in self.coeffs.items()}, int(self.rhs * den)


class IlpModel:
    """Maximise ``objective . x`` over ``x in {0,1}^num_vars`` subject to linear rows."""

    def __init__(self):
        self.num_vars = 0
        self.names: list[object] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, Fraction] = {}

    def add_binary(self, name=None) -> int:
        self.names.append(name)
        self.num_vars += 1
        return self.num_vars - 1

    def _coeff_dict(self, coeffs) -> dict[int, Fraction]:
        if isinstance(coeffs, Mapping):
            out = {}
            for j, v in coeffs.items():
                j = int(j)
                if not 0 <= j < self.num_vars:
                    raise IndexError(f"variable index {j} out of range")
                v = as_fraction(v)
                if v:
                    out[j] = out.get(j, Fraction(0)) + v
            return {j: v for j, v in out.items() if v}
        coeffs = list(coeffs)
        if len(coeffs) != self.num_vars:
            raise ValueError(
                f"coefficient vector has length {len(coeffs)}, model has {self.num_vars} vars"
            )
        out = {}
        for j, v in enumerate(coeffs):
            v = as_fraction(v)
            if v:
                out[j] = v
        return out

    def add_constraint(self, coeffs, relation, rhs) -> int:
        self.constraints.append(
            Constraint(self._coeff_dict(coeffs), Relation(relation), as_fraction(rhs))
        )
        return len(self.constraints) - 1

    def set_objective(self, coeffs) -> None:
        self.objective = self._coeff_dict(coeffs)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def objective_value(self, assignment: Sequence[int]) -> Fraction:
        return sum((v for j, v in self.objective.items() if assignment[j]), Fraction(0))

    def violated(self, assignment: Sequence[int]) -> list[int]:
        """Indices of constraints the 0/1 assignment violates (exact arithmetic)."""
        bad = []
        for i, con in enumerate(self.constraints):
            lhs = sum((v for j, v in con.coeffs.items() if assignment[j]), Fraction(0))
            if con.relation is Relation.LE:
                ok = lhs <= con.rhs
            elif con.relation is Relation.GE:
                ok = lhs >= con.rhs
            else:
                ok = lhs == con.rhs
            if not ok:
                bad.append(i)
        return bad

    def is_feasible(self, assignment: Sequence[int]) -> bool:
        return not self.violated(assignment)

    def objective_step(self) -> Fraction:
        """Largest g with every attainable objective value in g*Z (0 if no objective)."""
        num = 0
        den = 1
        for v in self.objective.values():
            num = math.gcd(num, v.numerator)
            den = math.lcm(den, v.denominator)
        return Fraction(num, den)


def new_model() -> IlpModel:
    return IlpModel()


def add_binary(model: IlpModel, name=None) -> int:
    return model.add_binary(name)


def add_constraint(model: IlpModel, coeffs, relation, rhs) -> int:
    return model.add_constraint(coeffs, relation, rhs)


def set_objective(model: IlpModel, coeffs) -> None:
    model.set_objective(coeffs)


@dataclass
class IlpSolution:
    status: Status
    assignment: tuple[int, ...] | None = None
    objective: Fraction | None = None
    # upper bound on the optimum; equals objective when optimal
    bound: Fraction | float | None = None
    root_bound: float | None = None
    nodes: int = 0
    backend: str = ""
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _scaled_matrix(model: IlpModel):
    rows, rhs, rel = [], [], []
    for con in model.constraints:
        coeffs, b = con.scaled()
        rows.append(coeffs)
        rhs.append(b)
        rel.append(con.relation)
    return rows, rhs, rel


def brute_force_solve(model: IlpModel) -> IlpSolution:
    """Exhaustive search over all 2^n assignments (n <= 25), in exact integers.

    Ties are broken towards the assignment with the smallest binary value
    (variable 0 is the least significant bit).
    """
    n = model.num_vars
    if n > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_VARS} vars, model has {n}")
    rows, rhs, rel = _scaled_matrix(model)
    den = 1
    for v in model.objective.values():
        den = math.lcm(den, v.denominator)
    obj = [0] * n
    for j, v in model.objective.items():
        obj[j] = int(v * den)

    mags = [sum(abs(c) for c in r.values()) + abs(b) for r, b in zip(rows, rhs)]
    mags.append(sum(abs(c) for c in obj))
    dtype = np.int64 if max(mags, default=0) < _INT64_SAFE else object

    A = np.zeros((len(rows), n), dtype=dtype)
    for i, r in enumerate(rows):
        for j, c in r.items():
            A[i, j] = c
    b = np.array(rhs, dtype=dtype)
    c = np.array(obj, dtype=dtype)
    shifts = np.arange(n, dtype=np.int64)

    best_val = None
    best_idx = None
    total = 1 << n
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(dtype)
        ok = np.ones(len(idx), dtype=bool)
        if len(rows):
            act = bits @ A.T
            for i, r in enumerate(rel):
                if r is Relation.LE:
                    ok &= act[:, i] <= b[i]
                elif r is Relation.GE:
                    ok &= act[:, i] >= b[i]
                else:
                    ok &= act[:, i] == b[i]
        if not ok.any():
            continue
        vals = bits[ok] @ c if n else np.zeros(int(ok.sum()), dtype=dtype)
        k = int(np.argmax(vals))
        v = int(vals[k])
        if best_val is None or v > best_val:
            best_val = v
            best_idx = int(idx[ok][k])

    if best_val is None:
        return IlpSolution(Status.INFEASIBLE, backend="brute_force")
    assignment = tuple((best_idx >> j) & 1 for j in range(n))
    value = Fraction(best_val, den)
    return IlpSolution(
        Status.OPTIMAL, assignment, value, value, nodes=total, backend="brute_force"
    )
