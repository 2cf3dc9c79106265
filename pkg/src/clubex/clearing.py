"""Clearing models for exchange clubs: uncapped, frame-capped, and the
limited-horizon loop that repeatedly solves a short frame window."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import ilp
from .frames import Frame, FrameDag, Schedule, build_dag, total_order
from .model import Edge, Instance, as_fraction, restrict, validate_instance, with_gammas


@dataclass
class VarMap:
    """Bijection between ILP variable indices and edge (or (edge, frame)) keys."""

    keys: list = field(default_factory=list)
    index: dict = field(default_factory=dict)

    def add(self, key) -> int:
        self.index[key] = len(self.keys)
        self.keys.append(key)
        return self.index[key]

    def __len__(self):
        return len(self.keys)


@dataclass
class Matching:
    edges: frozenset[Edge]
    objective: Fraction
    optimal: bool = True

    @property
    def keys(self) -> set[tuple[int, int]]:
        return {e.key for e in self.edges}


def _check(instance: Instance):
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems[:5]))


def build_uncapped(instance: Instance) -> tuple[ilp.IlpModel, VarMap]:
    _check(instance)
    model = ilp.new_model()
    vm = VarMap()
    for e in instance.edges:
        model.add_binary(e.key)
        vm.add(e.key)

    by_donor: dict[int, list[int]] = {}
    by_patient: dict[int, list[int]] = {}
    for e in instance.edges:
        by_donor.setdefault(e.donor, []).append(vm.index[e.key])
        by_patient.setdefault(e.patient, []).append(vm.index[e.key])
    for d in sorted(by_donor):
        if len(by_donor[d]) > 1:
            model.add_constraint({j: 1 for j in by_donor[d]}, "<=", 1)
    for p in sorted(by_patient):
        if len(by_patient[p]) > 1:
            model.add_constraint({j: 1 for j in by_patient[p]}, "<=", 1)

    for club in instance.clubs:
        outs, ins = instance.external_edges[club.id]
        if not outs:
            continue
        coeffs = {vm.index[k]: Fraction(1) for k in outs}
        for k in ins:
            coeffs[vm.index[k]] = -club.alpha
        model.add_constraint(coeffs, "<=", club.gamma)

    model.set_objective({vm.index[e.key]: as_fraction(e.weight) for e in instance.edges})
    return model, vm


def solve_uncapped(instance: Instance, time_limit: float | None = None, backend: str = "auto") -> Matching:
    model, vm = build_uncapped(instance)
    sol = ilp.solve(model, time_limit, backend)
    if sol.status is ilp.Status.INFEASIBLE:
        # the empty matching is always feasible
        raise RuntimeError("clearing model reported infeasible")
    chosen = []
    if sol.assignment is not None:
        chosen = [instance.edge_by_key[vm.keys[j]] for j, v in enumerate(sol.assignment) if v]
    objective = sol.objective if sol.objective is not None else Fraction(0)
    return Matching(frozenset(chosen), objective, sol.optimal)


def single_frame(instance: Instance) -> FrameDag:
    """One frame large enough to hold every edge: the uncapped semantics."""
    return build_dag([Frame(1, max(1, len(instance.edges)))])


def build_capped(instance: Instance, dag: FrameDag) -> tuple[ilp.IlpModel, VarMap]:
    _check(instance)
    model = ilp.new_model()
    vm = VarMap()
    frames = sorted(dag.frames, key=lambda f: f.id)
    for e in instance.edges:
        for f in frames:
            model.add_binary((e.key, f.id))
            vm.add((e.key, f.id))

    by_donor: dict[int, list[int]] = {}
    by_patient: dict[int, list[int]] = {}
    for e in instance.edges:
        idx = [vm.index[(e.key, f.id)] for f in frames]
        by_donor.setdefault(e.donor, []).extend(idx)
        by_patient.setdefault(e.patient, []).extend(idx)
    # each donor donates at most once, each patient receives at most once
    for d in sorted(by_donor):
        if len(by_donor[d]) > 1:
            model.add_constraint({j: 1 for j in by_donor[d]}, "<=", 1)
    for p in sorted(by_patient):
        if len(by_patient[p]) > 1:
            model.add_constraint({j: 1 for j in by_patient[p]}, "<=", 1)

    # club safety, counting every frame up to and including t
    ext = instance.external_edges
    for club in instance.clubs:
        outs, ins = ext[club.id]
        if not outs:
            continue
        for f in frames:
            window = sorted(dag.predecessors(f.id) | {f.id})
            coeffs = {}
            for k in outs:
                for s in window:
                    coeffs[vm.index[(k, s)]] = Fraction(1)
            for k in ins:
                for s in window:
                    coeffs[vm.index[(k, s)]] = -club.alpha
            model.add_constraint(coeffs, "<=", club.gamma)

    # frame capacity
    for f in frames:
        idx = [vm.index[(e.key, f.id)] for e in instance.edges]
        if len(idx) > f.cap:
            model.add_constraint({j: 1 for j in idx}, "<=", f.cap)

    objective = {}
    for e in instance.edges:
        w = as_fraction(e.weight)
        for f in frames:
            objective[vm.index[(e.key, f.id)]] = as_fraction(f.discount) * w
    model.set_objective(objective)
    return model, vm


def solve_capped(
    instance: Instance, dag: FrameDag, time_limit: float | None = None, backend: str = "auto"
) -> Schedule:
    model, vm = build_capped(instance, dag)
    return _decode_schedule(ilp.solve(model, time_limit, backend), vm)


def _decode_schedule(sol: ilp.IlpSolution, vm: VarMap) -> Schedule:
    if sol.status is ilp.Status.INFEASIBLE:
        # the empty schedule is always feasible
        raise RuntimeError("clearing model reported infeasible")
    assignments = {}
    if sol.assignment is not None:
        for j, v in enumerate(sol.assignment):
            if v:
                key, t = vm.keys[j]
                assignments[key] = t
    objective = sol.objective if sol.objective is not None else Fraction(0)
    return Schedule(assignments, objective, sol.optimal)


def _uncapped_bound_applies(instance: Instance, dag: FrameDag) -> bool:
    """True when every capped schedule is also an uncapped-feasible matching
    worth at most h times its weight: some frame is preceded by all others,
    every frame has the same discount h, and no edge weight is negative."""
    ids = set(dag.ids)
    if not ids or len({as_fraction(f.discount) for f in dag.frames}) != 1:
        return False
    if any(as_fraction(e.weight) < 0 for e in instance.edges):
        return False
    return any(dag.predecessors(t) | {t} == ids for t in ids)


def solve_capped_bounded(
    instance: Instance, dag: FrameDag, time_limit: float | None = None, backend: str = "auto"
) -> Schedule:
    """Same optimum as :func:`solve_capped`, usually found much faster.

    When :func:`_uncapped_bound_applies`, ``h * uncapped optimum`` bounds the
    capped optimum.  The edges of one uncapped optimum are scheduled on their
    own first (a much smaller model); reaching the bound proves optimality.
    Otherwise the full model is solved.  ``time_limit`` applies to each solve
    separately.
    """
    if not _uncapped_bound_applies(instance, dag):
        return solve_capped(instance, dag, time_limit, backend)
    h = as_fraction(dag.frames[0].discount)
    uncapped = solve_uncapped(instance, time_limit, backend)
    if not uncapped.optimal:
        return solve_capped(instance, dag, time_limit, backend)
    restricted = Instance(instance.clubs, tuple(e for e in instance.edges if e in uncapped.edges))
    first = solve_capped(restricted, dag, time_limit, backend)
    if first.objective == h * uncapped.objective:
        return Schedule(first.assignments, first.objective, True)
    full = solve_capped(instance, dag, time_limit, backend)
    if full.objective < first.objective:
        return Schedule(first.assignments, first.objective, False)
    return full


def update_debts(instance: Instance, schedule: Schedule) -> Instance:
    """Carry each club's balance forward: gamma + alpha * received - donated
    (external transplants only)."""
    donors, patients = set(), set()
    for key in schedule.assignments:
        if key not in instance.edge_by_key:
            raise ValueError(f"schedule uses unknown edge d{key[0]}->p{key[1]}")
        d, p = key
        if d in donors or p in patients:
            raise ValueError(f"schedule reuses donor d{d} or patient p{p}")
        donors.add(d)
        patients.add(p)
    gammas = {}
    balance = {c.id: [0, 0] for c in instance.clubs}
    for d, p in schedule.assignments:
        src, dst = instance.donor_club[d], instance.patient_club[p]
        if src != dst:
            balance[src][0] += 1
            balance[dst][1] += 1
    for club in instance.clubs:
        given, got = balance[club.id]
        g = club.gamma + club.alpha * got - given
        if g < 0:
            raise ValueError(f"club {club.id} would end with negative debt {g}")
        gammas[club.id] = g
    return with_gammas(instance, gammas)


def limited_horizon(
    instance: Instance,
    frame_template: Frame,
    horizon: int,
    max_rounds: int | None = None,
    time_limit: float | None = None,
    backend: str = "auto",
) -> tuple[Schedule, Instance]:
    """Solve ``horizon`` frames at a time, retire what was matched, update debts, repeat.

    Round ``r`` (0-based) uses global frame ids ``r*horizon + 1 .. (r+1)*horizon``,
    so the combined schedule lives on ``total_order(rounds * horizon, cap)``.
    Stops after the first round that matches nothing, or after ``max_rounds``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    current = instance
    assignments: dict[tuple[int, int], int] = {}
    objective = Fraction(0)
    optimal = True
    rounds = 0
    discounts = [frame_template.discount] * horizon
    while max_rounds is None or rounds < max_rounds:
        dag = total_order(horizon, frame_template.cap, discounts)
        sched = solve_capped(current, dag, time_limit, backend)
        offset = rounds * horizon
        rounds += 1
        optimal = optimal and sched.optimal
        if not sched.assignments:
            break
        for key, t in sched.assignments.items():
            assignments[key] = t + offset
        objective += sched.objective
        current = update_debts(current, sched)
        current = restrict(
            current,
            {d for d, _ in sched.assignments},
            {p for _, p in sched.assignments},
        )
    return Schedule(assignments, objective, optimal), current


def horizon_dag(schedule: Schedule, frame_template: Frame, horizon: int) -> FrameDag:
    """The global total order a :func:`limited_horizon` schedule lives on."""
    last = max(schedule.assignments.values(), default=0)
    n = -(-last // horizon) * horizon
    return total_order(n, frame_template.cap, [frame_template.discount] * n)


def max_matched_edges(instance: Instance, time_limit: float | None = None) -> int:
    """Largest number of edges in any uncapped-feasible matching."""
    unit = Instance(instance.clubs, tuple(Edge(e.donor, e.patient, 1.0) for e in instance.edges))
    return int(solve_uncapped(unit, time_limit).objective)


def sufficient_frames(max_edges: int, cap: int) -> int:
    """Frame count that cannot truncate an optimum on a uniform total order.

    On a total order with equal caps and equal discounts, two adjacent frames
    whose loads sum to at most ``cap`` can be merged into the later one
    without breaking any constraint or changing the objective.  After all such
    merges, every adjacent pair carries more than ``cap`` edges, so a schedule
    with ``m`` edges needs at most ``2 * (m // (cap + 1)) + 1`` frames.
    """
    if max_edges <= 0:
        return 1
    return 2 * (max_edges // (cap + 1)) + 1
