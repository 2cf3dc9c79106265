import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clubex.clearing import solve_uncapped
from clubex.data import path
from clubex.gadgets import (
    SetPackingInstance,
    brute_force_set_packing,
    build_reduction,
    check_reduction,
    decide,
    decode_packing,
    reduce_set_packing,
    set_packing_from_dict,
    verify_reduction,
)
from clubex.model import load_json, validate_instance

SP_EXAMPLE = set_packing_from_dict(load_json(path("sp_example.json")))


def sp(universe, family, target=0):
    return SetPackingInstance(tuple(universe), tuple(frozenset(s) for s in family), target)


def random_sp(rng):
    universe = list(range(1, rng.randint(1, 5) + 1))
    family = [rng.sample(universe, rng.randint(1, len(universe))) for _ in range(rng.randint(0, 4))]
    return sp(universe, family)


def test_invalid_sets():
    with pytest.raises(ValueError):
        sp([1], [[]])
    with pytest.raises(ValueError):
        sp([1], [[2]])


def test_empty_reduction():
    inst = reduce_set_packing(sp([], []))
    assert inst.clubs == () and inst.edges == ()
    assert verify_reduction(sp([], []))


def test_singleton_reduction():
    red = build_reduction(sp([1], [[1]]))
    assert len(red.instance.clubs) == 3 and red.big_m == 2
    assert sorted(e.weight for e in red.instance.edges) == [1.0, 2.0]
    assert solve_uncapped(red.instance).objective == 3
    assert verify_reduction(sp([1], [[1]]))


def test_sp_example_shape():
    red = build_reduction(SP_EXAMPLE)
    inst = red.instance
    assert validate_instance(inst) == []
    a = [c for c in inst.clubs if not c.patients]
    c_clubs = [c for c in inst.clubs if not c.donors]
    b = [c for c in inst.clubs if c.donors and c.patients]
    assert (len(a), len(b), len(c_clubs)) == (7, 3, 3)
    assert red.big_m == 8
    weights = sorted(e.weight for e in inst.edges)
    assert weights.count(8.0) == 3 and weights.count(1.0) == 9
    assert sorted(c.alpha for c in b) == [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2)]


def test_sp_example_values():
    assert brute_force_set_packing(SP_EXAMPLE)[0] == 2
    check = check_reduction(SP_EXAMPLE)
    assert (check.objective, check.big_m, check.k, check.ok) == (22, 8, 2, True)
    assert check.packing == [2, 3]
    assert verify_reduction(SP_EXAMPLE)


def test_brute_force_examples():
    assert brute_force_set_packing(sp([1, 2, 3], [[1], [2], [3]]))[0] == 3
    assert brute_force_set_packing(sp([1, 2], [[1, 2]] * 3))[0] == 1
    with pytest.raises(ValueError):
        brute_force_set_packing(sp([1], [[1]] * 21))


def test_decide():
    assert decide(sp([1, 2, 3], [[1, 2], [2, 3], [3]], target=2))
    assert not decide(sp([1, 2, 3], [[1, 2], [2, 3]], target=2))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_reduction_window(seed):
    inst = random_sp(random.Random(seed))
    red = build_reduction(inst)
    m = solve_uncapped(red.instance)
    k = brute_force_set_packing(inst)[0]
    assert k * red.big_m <= m.objective < (k + 1) * red.big_m
    # a collector donates to its sink iff every one of its patients is served
    served = {p for _, p in m.keys}
    chosen = decode_packing(red, m)
    for j, donor in red.collector_donor.items():
        club = red.instance.club_by_id[donor]
        assert (j in chosen) == club.patients.issubset(served)


def test_brute_force_is_exhaustive():
    rng = random.Random(4)
    for _ in range(30):
        inst = random_sp(rng)
        best = 0
        m = len(inst.family)
        for r in range(m + 1):
            for combo in combinations(inst.family, r):
                if sum(len(s) for s in combo) == len(frozenset().union(*combo)):
                    best = max(best, r)
        assert brute_force_set_packing(inst)[0] == best
