"""Operation frames, the happens-strictly-before order, and schedule checking."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence

from .model import Instance, as_fraction


@dataclass(frozen=True)
class Frame:
    id: int
    cap: int
    discount: float = 1.0


@dataclass(frozen=True)
class FrameDag:
    frames: tuple[Frame, ...]
    precedence: frozenset[tuple[int, int]]
    # reach[u] = frames v with u ~> v
    reach: Mapping[int, frozenset[int]]

    @property
    def ids(self) -> list[int]:
        return [f.id for f in self.frames]

    def frame(self, frame_id: int) -> Frame:
        for f in self.frames:
            if f.id == frame_id:
                return f
        raise KeyError(f"unknown frame {frame_id}")

    @cached_property
    def _before(self) -> dict[int, frozenset[int]]:
        before: dict[int, set[int]] = {f.id: set() for f in self.frames}
        for u, vs in self.reach.items():
            for v in vs:
                before[v].add(u)
        return {v: frozenset(us) for v, us in before.items()}

    def predecessors(self, frame_id: int) -> frozenset[int]:
        """Frames that happen strictly before ``frame_id``."""
        return self._before[frame_id]


class Mode(enum.Enum):
    PER_FRAME = "per-frame"
    ALL_LINEARIZATIONS = "all-linearizations"


@dataclass
class Schedule:
    """Assignment of (donor, patient) edges to frame ids; unassigned edges are unmatched."""

    assignments: dict[tuple[int, int], int] = field(default_factory=dict)
    objective: Fraction = Fraction(0)
    optimal: bool = True


def build_dag(frames: Sequence[Frame], precedence: Sequence[tuple[int, int]] = ()) -> FrameDag:
    ids = [f.id for f in frames]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate frame id")
    for f in frames:
        if f.cap < 1:
            raise ValueError(f"frame {f.id}: cap must be >= 1")
        if not f.discount > 0:
            raise ValueError(f"frame {f.id}: discount must be > 0")
    known = set(ids)
    succ: dict[int, set[int]] = {i: set() for i in ids}
    for u, v in precedence:
        if u not in known or v not in known:
            raise ValueError(f"dangling frame id in precedence ({u}, {v})")
        succ[u].add(v)

    # Kahn's algorithm doubles as the cycle check.
    indeg = {i: 0 for i in ids}
    for u in ids:
        for v in succ[u]:
            indeg[v] += 1
    order = []
    ready = sorted(i for i in ids if indeg[i] == 0)
    while ready:
        u = ready.pop(0)
        order.append(u)
        for v in sorted(succ[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
        ready.sort()
    if len(order) != len(ids):
        raise ValueError("cycle in frame precedence")

    reach: dict[int, set[int]] = {}
    for u in reversed(order):
        r: set[int] = set()
        for v in succ[u]:
            r.add(v)
            r |= reach[v]
        reach[u] = r
    return FrameDag(
        tuple(frames),
        frozenset((int(u), int(v)) for u, v in precedence),
        {u: frozenset(r) for u, r in reach.items()},
    )


def total_order(n: int, cap: int, discounts: Sequence[float] | None = None) -> FrameDag:
    """Frames 1..n chained 1 -> 2 -> ... -> n, all with the same cap."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if discounts is not None and len(discounts) != n:
        raise ValueError("need one discount per frame")
    frames = [
        Frame(i + 1, cap, 1.0 if discounts is None else float(discounts[i])) for i in range(n)
    ]
    return build_dag(frames, [(i, i + 1) for i in range(1, n)])


def strictly_before(dag: FrameDag, u: int, v: int) -> bool:
    if u not in dag.reach or v not in dag.reach:
        raise KeyError(f"unknown frame id in ({u}, {v})")
    return v in dag.reach[u]


def linearizations(dag: FrameDag, limit: int | None = None) -> Iterator[list[int]]:
    """Yield every topological order of the frames exactly once."""
    ids = sorted(dag.ids)
    preds = {v: {u for u, _ in dag.precedence if _ == v} for v in ids}
    placed: list[int] = []
    used: set[int] = set()
    count = 0

    def rec():
        nonlocal count
        if limit is not None and count >= limit:
            return
        if len(placed) == len(ids):
            count += 1
            yield list(placed)
            return
        for v in ids:
            if v not in used and preds[v] <= used:
                used.add(v)
                placed.append(v)
                yield from rec()
                placed.pop()
                used.discard(v)
                if limit is not None and count >= limit:
                    return

    yield from rec()


def _club_flows(instance: Instance, schedule: Schedule):
    """Per club: frame -> (external donations, external receipts)."""
    flows: dict[int, dict[int, list[int]]] = {c.id: {} for c in instance.clubs}
    for (d, p), t in schedule.assignments.items():
        src = instance.donor_club.get(d)
        dst = instance.patient_club.get(p)
        if src is None or dst is None or src == dst:
            continue
        flows[src].setdefault(t, [0, 0])[0] += 1
        flows[dst].setdefault(t, [0, 0])[1] += 1
    return flows


def validate_schedule(
    instance: Instance,
    dag: FrameDag,
    schedule: Schedule,
    mode: Mode | str = Mode.PER_FRAME,
) -> list[str]:
    """Check matching, frame caps and club safety; return violations (empty if valid).

    Within a frame all transplants are simultaneous, so a frame's own
    receipts count towards the donations made in that same frame.
    """
    mode = Mode(mode)
    problems: list[str] = []
    frame_ids = set(dag.ids)

    donor_use: dict[int, int] = {}
    patient_use: dict[int, int] = {}
    load: dict[int, int] = {}
    for (d, p), t in sorted(schedule.assignments.items()):
        if (d, p) not in instance.edge_by_key:
            problems.append(f"unknown edge d{d}->p{p}")
            continue
        if t not in frame_ids:
            problems.append(f"edge d{d}->p{p}: unknown frame {t}")
            continue
        donor_use[d] = donor_use.get(d, 0) + 1
        patient_use[p] = patient_use.get(p, 0) + 1
        load[t] = load.get(t, 0) + 1
    for d, n in sorted(donor_use.items()):
        if n > 1:
            problems.append(f"donor d{d} donates {n} times")
    for p, n in sorted(patient_use.items()):
        if n > 1:
            problems.append(f"patient p{p} receives {n} times")
    for f in dag.frames:
        if load.get(f.id, 0) > f.cap:
            problems.append(f"frame {f.id} holds {load[f.id]} edges > cap {f.cap}")
    if problems:
        return problems

    flows = _club_flows(instance, schedule)
    clubs = instance.club_by_id
    if mode is Mode.PER_FRAME:
        for cid, per_frame in flows.items():
            if not per_frame:
                continue
            club = clubs[cid]
            for t in sorted(frame_ids):
                window = dag.predecessors(t) | {t}
                given = sum(per_frame.get(s, (0, 0))[0] for s in window)
                got = sum(per_frame.get(s, (0, 0))[1] for s in window)
                if given > club.gamma + club.alpha * got:
                    problems.append(
                        f"club {cid} unsafe at frame {t}: donated {given} > "
                        f"{club.gamma} + {club.alpha}*{got}"
                    )
    else:
        active = {cid: pf for cid, pf in flows.items() if pf}
        for order in linearizations(dag):
            for cid, per_frame in active.items():
                club = clubs[cid]
                given = got = 0
                for t in order:
                    g, r = per_frame.get(t, (0, 0))
                    given += g
                    got += r
                    if given > club.gamma + club.alpha * got:
                        problems.append(
                            f"club {cid} unsafe after frame {t} in order {order}: "
                            f"donated {given} > {club.gamma} + {club.alpha}*{got}"
                        )
                        break
            if problems:
                break
    return problems


def schedule_objective(instance: Instance, dag: FrameDag, schedule: Schedule) -> Fraction:
    discount = {f.id: as_fraction(f.discount) for f in dag.frames}
    total = Fraction(0)
    for key, t in schedule.assignments.items():
        total += discount[t] * as_fraction(instance.edge_by_key[key].weight)
    return total


# --- JSON ------------------------------------------------------------------

def dag_to_dict(dag: FrameDag) -> dict:
    return {
        "frames": [{"id": f.id, "cap": f.cap, "discount": float(f.discount)} for f in dag.frames],
        "precedence": [list(p) for p in sorted(dag.precedence)],
    }


def dag_from_dict(data: Mapping) -> FrameDag:
    try:
        frames = [
            Frame(int(f["id"]), int(f["cap"]), float(f.get("discount", 1.0)))
            for f in data["frames"]
        ]
        precedence = [(int(u), int(v)) for u, v in data.get("precedence", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed frames JSON: {exc}") from exc
    return build_dag(frames, precedence)


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "assignments": [
            {"donor": d, "patient": p, "frame": t}
            for (d, p), t in sorted(schedule.assignments.items(), key=lambda kv: (kv[1], kv[0]))
        ],
        "objective": float(schedule.objective),
        "optimal": bool(schedule.optimal),
    }


def schedule_from_dict(data: Mapping) -> Schedule:
    try:
        assignments = {}
        for a in data.get("assignments", []):
            key = (int(a["donor"]), int(a["patient"]))
            if key in assignments:
                raise ValueError(f"edge d{key[0]}->p{key[1]} assigned twice")
            assignments[key] = int(a["frame"])
        objective = as_fraction(data.get("objective", 0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed schedule JSON: {exc}") from exc
    return Schedule(assignments, objective, bool(data.get("optimal", True)))
