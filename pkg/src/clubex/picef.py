"""Standard-model baseline: cycle variables plus position-indexed chain edges.

Cycles among pair vertices get one binary each (up to length ``L``); chain
edges get one binary per position they can occupy (up to ``K`` edges), so the
model never enumerates chains explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import ilp
from .clearing import VarMap
from .model import Instance, StandardPool, as_fraction, from_standard


@dataclass
class CompatGraph:
    pairs: tuple[int, ...]
    ndds: tuple[int, ...]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        self.pairs = tuple(sorted(self.pairs))
        self.ndds = tuple(sorted(self.ndds))
        pairs, ndds = set(self.pairs), set(self.ndds)
        if pairs & ndds:
            raise ValueError("vertex is both a pair and an NDD")
        for u, v in self.edges:
            if v in ndds:
                raise ValueError(f"edge {u}->{v} enters an NDD")
            if u not in pairs and u not in ndds:
                raise ValueError(f"edge {u}->{v} leaves an unknown vertex")
            if v not in pairs:
                raise ValueError(f"edge {u}->{v} enters an unknown vertex")

    @property
    def is_ndd(self):
        return set(self.ndds).__contains__

    def out_edges(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {v: [] for v in self.pairs + self.ndds}
        for u, v in sorted(self.edges):
            out[u].append(v)
        return out


@dataclass
class PicefSolution:
    cycles: list[tuple[int, ...]]
    chains: list[tuple[int, ...]]
    objective: Fraction
    optimal: bool = True


def graph_from_instance(instance: Instance) -> CompatGraph:
    """Vertex graph of a standard-shaped instance (one donor per club, at most
    one patient); vertex ids are club ids.  Intra-club edges are dropped."""
    pairs, ndds = [], []
    for c in instance.clubs:
        if len(c.donors) != 1 or len(c.patients) > 1:
            raise ValueError(f"club {c.id} is not a standard pair or NDD")
        (ndds if not c.patients else pairs).append(c.id)
    edges = {}
    for e in instance.edges:
        u = instance.donor_club[e.donor]
        v = instance.patient_club[e.patient]
        if u != v:
            edges[(u, v)] = float(e.weight)
    return CompatGraph(tuple(pairs), tuple(ndds), edges)


def graph_from_pool(pool: StandardPool) -> CompatGraph:
    return graph_from_instance(from_standard(pool))


def enumerate_cycles(graph: CompatGraph, max_length: int) -> list[tuple[int, ...]]:
    """Simple cycles over pair vertices with at most ``max_length`` vertices,
    each listed once, rotated so the smallest vertex comes first."""
    pairs = set(graph.pairs)
    adj = {v: [w for w in graph.out_edges()[v] if w in pairs] for v in graph.pairs}
    cycles = []
    for start in graph.pairs:
        path = [start]
        on_path = {start}

        def extend(v):
            for w in adj[v]:
                if w == start and len(path) >= 2:
                    cycles.append(tuple(path))
                elif w > start and w not in on_path and len(path) < max_length:
                    path.append(w)
                    on_path.add(w)
                    extend(w)
                    path.pop()
                    on_path.discard(w)

        extend(start)
    return cycles


def position_index_set(graph: CompatGraph, edge: tuple[int, int], max_chain: int) -> set[int]:
    if edge not in graph.edges:
        raise KeyError(f"unknown edge {edge}")
    if edge[0] in set(graph.ndds):
        return {1} if max_chain >= 1 else set()
    return set(range(2, max_chain + 1))


def cycle_weight(graph: CompatGraph, cycle: tuple[int, ...]) -> Fraction:
    return sum(
        (as_fraction(graph.edges[(cycle[i], cycle[(i + 1) % len(cycle)])]) for i in range(len(cycle))),
        Fraction(0),
    )


def build_picef(graph: CompatGraph, max_cycle: int, max_chain: int) -> tuple[ilp.IlpModel, VarMap]:
    if max_cycle < 2:
        raise ValueError("cycle cap must be >= 2")
    if max_chain < 0:
        raise ValueError("chain cap must be >= 0")
    model = ilp.new_model()
    vm = VarMap()
    objective = {}
    ndds = set(graph.ndds)

    for (i, j), w in sorted(graph.edges.items()):
        for k in sorted(position_index_set(graph, (i, j), max_chain)):
            idx = vm.add(("y", (i, j), k))
            model.add_binary(("y", (i, j), k))
            objective[idx] = as_fraction(w)
    cycles = enumerate_cycles(graph, max_cycle)
    for cyc in cycles:
        idx = vm.add(("z", cyc))
        model.add_binary(("z", cyc))
        objective[idx] = cycle_weight(graph, cyc)

    incoming: dict[int, list[int]] = {v: [] for v in graph.pairs}
    in_at: dict[tuple[int, int], list[int]] = {}
    out_at: dict[tuple[int, int], list[int]] = {}
    ndd_out: dict[int, list[int]] = {v: [] for v in graph.ndds}
    for idx, key in enumerate(vm.keys):
        if key[0] != "y":
            for v in key[1]:
                incoming[v].append(idx)
            continue
        (i, j), k = key[1], key[2]
        incoming[j].append(idx)
        in_at.setdefault((j, k), []).append(idx)
        if i in ndds:
            ndd_out[i].append(idx)
        else:
            out_at.setdefault((i, k), []).append(idx)

    # patient capacity: one incoming chain edge or one cycle
    for v in graph.pairs:
        if len(incoming[v]) > 1:
            model.add_constraint({j: 1 for j in incoming[v]}, "<=", 1)
    # each altruist starts at most one chain
    for v in graph.ndds:
        if len(ndd_out[v]) > 1:
            model.add_constraint({j: 1 for j in ndd_out[v]}, "<=", 1)
    # flow: a pair gives at position k+1 only if it received at position k
    for v in graph.pairs:
        for k in range(1, max_chain):
            outs = out_at.get((v, k + 1), [])
            if not outs:
                continue
            coeffs = {j: 1 for j in in_at.get((v, k), [])}
            for j in outs:
                coeffs[j] = -1
            model.add_constraint(coeffs, ">=", 0)

    model.set_objective(objective)
    return model, vm


def solve_picef(
    graph: CompatGraph,
    max_cycle: int,
    max_chain: int,
    time_limit: float | None = None,
    backend: str = "auto",
) -> PicefSolution:
    model, vm = build_picef(graph, max_cycle, max_chain)
    sol = ilp.solve(model, time_limit, backend)
    if sol.status is ilp.Status.INFEASIBLE:
        raise RuntimeError("PICEF model reported infeasible")
    if sol.assignment is None:
        return PicefSolution([], [], Fraction(0), False)

    cycles = []
    chain_edges: dict[tuple[int, int], int] = {}  # (vertex, position) -> next vertex
    used_y = 0
    for idx, v in enumerate(sol.assignment):
        if not v:
            continue
        key = vm.keys[idx]
        if key[0] == "z":
            cycles.append(key[1])
        else:
            (i, j), k = key[1], key[2]
            if (i, k) in chain_edges:
                raise RuntimeError(f"vertex {i} leaves twice at position {k}")
            chain_edges[(i, k)] = j
            used_y += 1

    chains = []
    consumed = 0
    for n in graph.ndds:
        if (n, 1) not in chain_edges:
            continue
        chain = [n]
        v, k = n, 1
        while (v, k) in chain_edges:
            v = chain_edges[(v, k)]
            chain.append(v)
            consumed += 1
            k += 1
        chains.append(tuple(chain))
    if consumed != used_y:
        raise RuntimeError("chain edges do not form NDD-rooted paths")

    objective = sum((cycle_weight(graph, c) for c in cycles), Fraction(0))
    for chain in chains:
        for a, b in zip(chain, chain[1:]):
            objective += as_fraction(graph.edges[(a, b)])
    if objective != sol.objective:
        raise RuntimeError("decoded objective differs from the ILP objective")
    return PicefSolution(cycles, chains, objective, sol.optimal)


def standard_batch_value(
    graph: CompatGraph, structure_cap: int, time_limit: float | None = None, backend: str = "auto"
) -> Fraction:
    """Batch optimum with cycles and chains both capped at ``structure_cap``."""
    if structure_cap < 2:
        raise ValueError("structure cap must be >= 2")
    return solve_picef(graph, structure_cap, structure_cap, time_limit, backend).objective


def solution_edges(solution: PicefSolution) -> list[tuple[int, int]]:
    """Vertex-level edges used by a PICEF solution."""
    out = []
    for c in solution.cycles:
        out.extend((c[i], c[(i + 1) % len(c)]) for i in range(len(c)))
    for ch in solution.chains:
        out.extend(zip(ch, ch[1:]))
    return out
