"""Set packing as club clearing.

Element clubs each hold one donor with a unit credit.  Every set gets a
"collector" club whose donor may give only after all of its patients (one per
element of the set) are served, and a "sink" club whose patient is worth
``M = |U| + 1``.  Optimal clearings therefore pick a maximum family of
pairwise disjoint sets first and maximise covered elements second.

Id scheme, with ``n = |U|`` and sets numbered ``j = 1..m``:

* element ``i`` (1-based rank in the sorted universe): club ``i``, donor ``i``;
* set ``j`` collector: club ``n + 2j``, donor ``n + 2j``;
* set ``j`` sink: club ``n + 2j + 1``, patient ``n + 2j + 1``;
* collector patients get consecutive ids from ``n + 2m + 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping

from .clearing import Matching, solve_uncapped
from .model import Club, Edge, Instance

BRUTE_FORCE_MAX_SETS = 20


@dataclass(frozen=True)
class SetPackingInstance:
    universe: tuple[int, ...]
    family: tuple[frozenset[int], ...]
    target: int = 0

    def __post_init__(self):
        universe = tuple(sorted(set(self.universe)))
        family = tuple(frozenset(s) for s in self.family)
        known = set(universe)
        for j, s in enumerate(family, 1):
            if not s:
                raise ValueError(f"set {j} is empty")
            if not s <= known:
                raise ValueError(f"set {j} has elements outside the universe: {sorted(s - known)}")
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "family", family)


@dataclass
class Reduction:
    instance: Instance
    big_m: int
    collector_donor: dict[int, int]  # set index (1-based) -> donor id
    sink_patient: dict[int, int]


@dataclass
class ReductionCheck:
    objective: Fraction
    big_m: int
    k: int
    brute_k: int
    brute_covered: int
    packing: list[int]
    ok: bool


def build_reduction(sp: SetPackingInstance) -> Reduction:
    n, m = len(sp.universe), len(sp.family)
    rank = {u: i for i, u in enumerate(sp.universe, 1)}
    big_m = n + 1
    clubs = [Club(i, {i}, set(), Fraction(1), Fraction(1)) for i in range(1, n + 1)]
    edges = []
    collector_donor, sink_patient = {}, {}
    next_patient = n + 2 * m + 2
    for j, s in enumerate(sp.family, 1):
        donor, sink = n + 2 * j, n + 2 * j + 1
        patients = []
        for u in sorted(s):
            patients.append(next_patient)
            edges.append(Edge(rank[u], next_patient, 1.0))
            next_patient += 1
        clubs.append(Club(donor, {donor}, patients, Fraction(1, len(s)), Fraction(0)))
        clubs.append(Club(sink, set(), {sink}, Fraction(1), Fraction(0)))
        edges.append(Edge(donor, sink, float(big_m)))
        collector_donor[j] = donor
        sink_patient[j] = sink
    edges.sort(key=lambda e: e.key)
    return Reduction(Instance(tuple(clubs), tuple(edges)), big_m, collector_donor, sink_patient)


def reduce_set_packing(sp: SetPackingInstance) -> Instance:
    return build_reduction(sp).instance


def decode_packing(reduction: Reduction, matching: Matching) -> list[int]:
    """1-based indices of the sets whose collector donated to its sink."""
    used = matching.keys
    return [j for j, d in reduction.collector_donor.items() if (d, reduction.sink_patient[j]) in used]


def is_packing(sp: SetPackingInstance, chosen: Iterable[int]) -> bool:
    seen: set[int] = set()
    for j in chosen:
        s = sp.family[j - 1]
        if seen & s:
            return False
        seen |= s
    return True


def brute_force_set_packing(sp: SetPackingInstance) -> tuple[int, int, list[int]]:
    """(max number of disjoint sets, max elements covered by such a packing, witness)."""
    m = len(sp.family)
    if m > BRUTE_FORCE_MAX_SETS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_SETS} sets, got {m}")
    for k in range(m, -1, -1):
        best = None
        for combo in combinations(range(1, m + 1), k):
            if is_packing(sp, combo):
                covered = sum(len(sp.family[j - 1]) for j in combo)
                if best is None or covered > best[0]:
                    best = (covered, list(combo))
        if best is not None:
            return k, best[0], best[1]
    return 0, 0, []


def check_reduction(sp: SetPackingInstance, time_limit: float | None = None) -> ReductionCheck:
    red = build_reduction(sp)
    matching = solve_uncapped(red.instance, time_limit)
    packing = decode_packing(red, matching)
    k = int(matching.objective // red.big_m)
    brute_k, brute_cov, _ = brute_force_set_packing(sp)
    ok = (
        matching.optimal
        and is_packing(sp, packing)
        and len(packing) == k == brute_k
        and matching.objective == brute_k * red.big_m + brute_cov
    )
    return ReductionCheck(matching.objective, red.big_m, k, brute_k, brute_cov, packing, ok)


def verify_reduction(sp: SetPackingInstance, time_limit: float | None = None) -> bool:
    """True iff the clearing optimum, divided by M and floored, equals the
    brute-force maximum packing size."""
    red = build_reduction(sp)
    matching = solve_uncapped(red.instance, time_limit)
    if not matching.optimal:
        raise TimeoutError("clearing solve did not prove optimality")
    return int(matching.objective // red.big_m) == brute_force_set_packing(sp)[0]


def decide(sp: SetPackingInstance, time_limit: float | None = None) -> bool:
    """Whether at least ``sp.target`` pairwise disjoint sets exist, via clearing."""
    red = build_reduction(sp)
    return solve_uncapped(red.instance, time_limit).objective >= sp.target * red.big_m


def set_packing_from_dict(data: Mapping) -> SetPackingInstance:
    try:
        universe = [int(u) for u in data["universe"]]
        family = [[int(u) for u in s] for s in data["family"]]
        target = int(data.get("target", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed set-packing JSON: {exc}") from exc
    return SetPackingInstance(tuple(universe), tuple(frozenset(s) for s in family), target)


def set_packing_to_dict(sp: SetPackingInstance) -> dict:
    return {
        "universe": list(sp.universe),
        "family": [sorted(s) for s in sp.family],
        "target": sp.target,
    }
