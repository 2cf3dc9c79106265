"""Clubs, instances and the standard-model embedding.

A club owns a set of donors and a set of patients.  It will donate
externally only while ``donated <= alpha * received + gamma`` holds, where
both counts only include kidneys crossing the club boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping


def as_fraction(value) -> Fraction:
    """Coerce ints, floats, Fractions and ``"p/q"`` strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        # floats are binary rationals, so this is exact
        return Fraction(value)
    return Fraction(value)


def fraction_str(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Club:
    id: int
    donors: frozenset[int]
    patients: frozenset[int]
    alpha: Fraction = Fraction(1)
    gamma: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "donors", frozenset(self.donors))
        object.__setattr__(self, "patients", frozenset(self.patients))
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        object.__setattr__(self, "gamma", as_fraction(self.gamma))


@dataclass(frozen=True)
class Edge:
    donor: int
    patient: int
    weight: float = 1.0

    @property
    def key(self) -> tuple[int, int]:
        return (self.donor, self.patient)


@dataclass(frozen=True)
class Instance:
    """Clubs plus weighted donor -> patient compatibility edges.

    Construction never raises on semantic problems; call
    :func:`validate_instance` to get a list of violations.
    """

    clubs: tuple[Club, ...] = ()
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "clubs", tuple(self.clubs))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def donor_club(self) -> dict[int, int]:
        owner: dict[int, int] = {}
        for club in self.clubs:
            for d in club.donors:
                owner.setdefault(d, club.id)
        return owner

    @cached_property
    def patient_club(self) -> dict[int, int]:
        owner: dict[int, int] = {}
        for club in self.clubs:
            for p in club.patients:
                owner.setdefault(p, club.id)
        return owner

    @cached_property
    def club_by_id(self) -> dict[int, Club]:
        return {club.id: club for club in self.clubs}

    @cached_property
    def edge_by_key(self) -> dict[tuple[int, int], Edge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def external_edges(self) -> dict[int, tuple[list, list]]:
        """club id -> (keys of external out-edges, keys of external in-edges)."""
        out: dict[int, tuple[list, list]] = {c.id: ([], []) for c in self.clubs}
        for e in self.edges:
            src = self.donor_club[e.donor]
            dst = self.patient_club[e.patient]
            if src != dst:
                out[src][0].append(e.key)
                out[dst][1].append(e.key)
        return out

    @property
    def donors(self) -> list[int]:
        return sorted(self.donor_club)

    @property
    def patients(self) -> list[int]:
        return sorted(self.patient_club)


@dataclass(frozen=True)
class StandardPool:
    """Classic pool of donor-patient pairs and non-directed donors (NDDs)."""

    pairs: tuple[tuple[int, int], ...] = ()
    ndds: tuple[int, ...] = ()
    compat: frozenset[tuple[int, int]] = frozenset()
    weights: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(d), int(p)) for d, p in self.pairs))
        object.__setattr__(self, "ndds", tuple(int(n) for n in self.ndds))
        object.__setattr__(self, "compat", frozenset(self.compat))

    def weight(self, donor: int, patient: int) -> float:
        return self.weights.get((donor, patient), 1.0)


def validate_instance(instance: Instance) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems: list[str] = []
    seen_ids: set[int] = set()
    donor_owner: dict[int, int] = {}
    patient_owner: dict[int, int] = {}
    for club in instance.clubs:
        if club.id < 0:
            problems.append(f"club id {club.id} negative")
        if club.id in seen_ids:
            problems.append(f"duplicate club id {club.id}")
        seen_ids.add(club.id)
        if club.alpha <= 0:
            problems.append(f"club {club.id}: alpha not positive")
        if club.gamma < 0:
            problems.append(f"club {club.id}: gamma negative")
        if not club.donors and not club.patients:
            problems.append(f"club {club.id}: no donors and no patients")
        for d in sorted(club.donors):
            if d < 0:
                problems.append(f"donor id {d} negative")
            if d in donor_owner:
                problems.append(f"shared donor d{d} (clubs {donor_owner[d]} and {club.id})")
            else:
                donor_owner[d] = club.id
        for p in sorted(club.patients):
            if p < 0:
                problems.append(f"patient id {p} negative")
            if p in patient_owner:
                problems.append(f"shared patient p{p} (clubs {patient_owner[p]} and {club.id})")
            else:
                patient_owner[p] = club.id

    seen_edges: set[tuple[int, int]] = set()
    for e in instance.edges:
        if e.key in seen_edges:
            problems.append(f"duplicate edge d{e.donor}->p{e.patient}")
        seen_edges.add(e.key)
        if e.donor not in donor_owner:
            problems.append(f"edge d{e.donor}->p{e.patient}: unknown donor d{e.donor}")
        if e.patient not in patient_owner:
            problems.append(f"edge d{e.donor}->p{e.patient}: unknown patient p{e.patient}")
        w = float(e.weight)
        if w != w or w in (float("inf"), float("-inf")):
            problems.append(f"edge d{e.donor}->p{e.patient}: weight not finite")
    return problems


def from_standard(pool: StandardPool) -> Instance:
    """Embed a standard pool: one club per pair (alpha=1, gamma=0) and one
    patient-less club per NDD (alpha=1, gamma=1)."""
    donors = [n for n in pool.ndds] + [d for d, _ in pool.pairs]
    patients = [p for _, p in pool.pairs]
    if len(set(donors)) != len(donors):
        dup = sorted({d for d in donors if donors.count(d) > 1})
        raise ValueError(f"duplicate donors in pool: {dup}")
    if len(set(patients)) != len(patients):
        dup = sorted({p for p in patients if patients.count(p) > 1})
        raise ValueError(f"duplicate patients in pool: {dup}")

    clubs = []
    for n in pool.ndds:
        clubs.append(Club(len(clubs), {n}, set(), Fraction(1), Fraction(1)))
    for d, p in pool.pairs:
        clubs.append(Club(len(clubs), {d}, {p}, Fraction(1), Fraction(0)))
    edges = [Edge(d, p, float(pool.weight(d, p))) for d, p in sorted(pool.compat)]
    return Instance(tuple(clubs), tuple(edges))


def is_external(instance: Instance, edge: Edge | tuple[int, int]) -> bool:
    key = edge.key if isinstance(edge, Edge) else tuple(edge)
    if key not in instance.edge_by_key:
        raise KeyError(f"unknown edge d{key[0]}->p{key[1]}")
    return instance.donor_club[key[0]] != instance.patient_club[key[1]]


def external_degrees(instance: Instance) -> dict[int, tuple[int, int]]:
    """Per club id: (external out-edges, external in-edges)."""
    counts = {c.id: [0, 0] for c in instance.clubs}
    for e in instance.edges:
        src, dst = instance.donor_club[e.donor], instance.patient_club[e.patient]
        if src != dst:
            counts[src][0] += 1
            counts[dst][1] += 1
    return {cid: (o, i) for cid, (o, i) in counts.items()}


# --- JSON ------------------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    return {
        "clubs": [
            {
                "id": c.id,
                "donors": sorted(c.donors),
                "patients": sorted(c.patients),
                "alpha": fraction_str(c.alpha),
                "gamma": fraction_str(c.gamma),
            }
            for c in instance.clubs
        ],
        "edges": [
            {"donor": e.donor, "patient": e.patient, "weight": float(e.weight)}
            for e in instance.edges
        ],
    }


def instance_from_dict(data: Mapping) -> Instance:
    try:
        clubs = [
            Club(
                int(c["id"]),
                [int(d) for d in c.get("donors", [])],
                [int(p) for p in c.get("patients", [])],
                as_fraction(c.get("alpha", "1/1")),
                as_fraction(c.get("gamma", "0/1")),
            )
            for c in data["clubs"]
        ]
        edges = [
            Edge(int(e["donor"]), int(e["patient"]), float(e.get("weight", 1.0)))
            for e in data.get("edges", [])
        ]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed instance JSON: {exc}") from exc
    return Instance(tuple(clubs), tuple(edges))


def pool_to_dict(pool: StandardPool) -> dict:
    return {
        "pairs": [{"donor": d, "patient": p} for d, p in pool.pairs],
        "ndds": list(pool.ndds),
        "edges": [
            {"from": d, "to": p, "weight": float(pool.weight(d, p))}
            for d, p in sorted(pool.compat)
        ],
    }


def pool_from_dict(data: Mapping) -> StandardPool:
    try:
        pairs = [(int(x["donor"]), int(x["patient"])) for x in data.get("pairs", [])]
        ndds = [int(n) for n in data.get("ndds", [])]
        compat = set()
        weights = {}
        for e in data.get("edges", []):
            key = (int(e["from"]), int(e["to"]))
            compat.add(key)
            weights[key] = float(e.get("weight", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed pool JSON: {exc}") from exc
    return StandardPool(tuple(pairs), tuple(ndds), frozenset(compat), weights)


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_instance(path) -> Instance:
    return instance_from_dict(load_json(path))


def load_pool(path) -> StandardPool:
    return pool_from_dict(load_json(path))


def with_gammas(instance: Instance, gammas: Mapping[int, Fraction]) -> Instance:
    clubs = tuple(replace(c, gamma=gammas.get(c.id, c.gamma)) for c in instance.clubs)
    return Instance(clubs, instance.edges)


def restrict(instance: Instance, donors: Iterable[int], patients: Iterable[int]) -> Instance:
    """Drop the given donors and patients plus their incident edges.

    Clubs keep their remaining members; clubs left with neither donors nor
    patients are removed.
    """
    donors, patients = set(donors), set(patients)
    clubs = []
    for c in instance.clubs:
        kept = replace(c, donors=c.donors - donors, patients=c.patients - patients)
        if kept.donors or kept.patients:
            clubs.append(kept)
    edges = tuple(e for e in instance.edges if e.donor not in donors and e.patient not in patients)
    return Instance(tuple(clubs), edges)
