import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clubex.clearing import solve_capped
from clubex.data import path
from clubex.frames import total_order
from clubex.model import load_instance, load_pool
from clubex.picef import (
    CompatGraph,
    build_picef,
    enumerate_cycles,
    graph_from_instance,
    graph_from_pool,
    position_index_set,
    solve_picef,
    standard_batch_value,
)

from oracles import best_packing, random_pool, standard_structures


def graph(pairs, ndds, edges):
    return CompatGraph(tuple(pairs), tuple(ndds), {e: 1.0 for e in edges})


TRIANGLE = graph([1, 2, 3], [], [(1, 2), (2, 3), (3, 1)])


def test_triangle_cycles():
    assert enumerate_cycles(TRIANGLE, 3) == [(1, 2, 3)]
    assert enumerate_cycles(TRIANGLE, 2) == []


def test_complete_bidirectional_three():
    g = graph([1, 2, 3], [], [(u, v) for u in (1, 2, 3) for v in (1, 2, 3) if u != v])
    cycles = enumerate_cycles(g, 3)
    assert sorted(c for c in cycles if len(c) == 2) == [(1, 2), (1, 3), (2, 3)]
    assert sorted(c for c in cycles if len(c) == 3) == [(1, 2, 3), (1, 3, 2)]


def test_no_edge_into_ndd():
    with pytest.raises(ValueError):
        graph([1], [0], [(1, 0)])


def test_position_index_sets():
    g = graph([1, 2], [0], [(0, 1), (1, 2)])
    assert position_index_set(g, (0, 1), 4) == {1}
    assert position_index_set(g, (1, 2), 4) == {2, 3, 4}
    assert position_index_set(g, (1, 2), 1) == set()
    with pytest.raises(KeyError):
        position_index_set(g, (2, 1), 4)


def test_two_cycle_model():
    g = graph([1, 2], [], [(1, 2), (2, 1)])
    model, vm = build_picef(g, 2, 0)
    assert vm.keys == [("z", (1, 2))]
    assert solve_picef(g, 2, 0).objective == 2


def test_path_chain_caps():
    g = graph([1, 2], [0], [(0, 1), (1, 2)])
    assert solve_picef(g, 2, 2).objective == 2
    assert solve_picef(g, 2, 1).objective == 1
    sol = solve_picef(g, 2, 2)
    assert sol.chains == [(0, 1, 2)]


def test_empty_graph():
    sol = solve_picef(CompatGraph((), (), {}), 3, 3)
    assert (sol.cycles, sol.chains, sol.objective) == ([], [], 0)
    assert standard_batch_value(CompatGraph((), (), {}), 4) == 0


def test_triangle_without_chains():
    sol = solve_picef(TRIANGLE, 3, 0)
    assert sol.cycles == [(1, 2, 3)] and sol.objective == 3


def test_invalid_caps():
    with pytest.raises(ValueError):
        build_picef(TRIANGLE, 1, 2)
    with pytest.raises(ValueError):
        build_picef(TRIANGLE, 2, -1)
    with pytest.raises(ValueError):
        standard_batch_value(TRIANGLE, 1)


def test_myopia_batch_picks_short_chain():
    inst = load_instance(path("m_star.json"))
    g = graph_from_instance(inst)
    sol = solve_picef(g, 2, 2)
    assert sol.objective == 2
    # the batch solver spends the altruist on a 2-chain and cannot extend it later,
    # while two frames reach the third patient
    assert len(sol.chains) == 1 and len(sol.chains[0]) == 3
    assert solve_capped(inst, total_order(2, 2)).objective == 3


def test_myopia_pool_fixture():
    g = graph_from_pool(load_pool(path("m_star_pool.json")))
    assert standard_batch_value(g, 2) == 2


def test_two_cycle_plus_three_cycle():
    g = graph([1, 2, 3, 4, 5], [], [(1, 2), (2, 1), (3, 4), (4, 5), (5, 3)])
    assert standard_batch_value(g, 3) == 5


def test_non_standard_instance_rejected():
    from clubex.model import Club, Instance

    with pytest.raises(ValueError):
        graph_from_instance(Instance((Club(0, {1, 2}, {1}),), ()))


def _check_solution(g, sol, L, K):
    used = []
    for c in sol.cycles:
        assert 2 <= len(c) <= L
        used += list(c)
    for ch in sol.chains:
        assert ch[0] in g.ndds and 1 <= len(ch) - 1 <= K
        for a, b in zip(ch, ch[1:]):
            assert (a, b) in g.edges
        used += list(ch)
    assert len(used) == len(set(used))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_picef_matches_brute_force(seed):
    pool = random_pool(random.Random(seed))
    g = graph_from_pool(pool)
    sol = solve_picef(g, 3, 4)
    assert sol.objective == best_packing(standard_structures(pool, 3, 4))
    _check_solution(g, sol, 3, 4)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_variable_count(seed):
    rng = random.Random(seed)
    pool = random_pool(rng)
    g = graph_from_pool(pool)
    L, K = rng.randint(2, 4), rng.randint(0, 5)
    model, vm = build_picef(g, L, K)
    expected = sum(len(position_index_set(g, e, K)) for e in g.edges) + len(enumerate_cycles(g, L))
    assert model.num_vars == len(vm) == expected
    cycles = enumerate_cycles(g, L)
    assert len(cycles) == len(set(cycles))
    assert all(c[0] == min(c) for c in cycles)
