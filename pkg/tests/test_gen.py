import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from clubex.gen import (
    CSV_HEADER,
    ExperimentRow,
    GenConfig,
    abo_compatible,
    config_from_dict,
    config_to_dict,
    gen_master_graph,
    rows_to_csv,
    run_experiment,
    sample_pool,
    second_donor_edges,
    single_donor_view,
    thin_edges,
)
from clubex.model import StandardPool, validate_instance

SMALL = GenConfig(master_size=300)


@pytest.fixture(scope="module")
def master():
    return gen_master_graph(SMALL)


def test_abo_rule():
    o, a, b, ab = range(4)
    assert abo_compatible(o, ab) and abo_compatible(o, a) and abo_compatible(a, ab)
    assert abo_compatible(a, a) and not abo_compatible(a, b) and not abo_compatible(ab, o)


def test_empty_master():
    m = gen_master_graph(GenConfig(master_size=0))
    assert m.pairs == () and m.ndds == () and m.compat == frozenset()


def test_master_determinism(master):
    again = gen_master_graph(SMALL)
    assert again.compat == master.compat and again.donor_blood == master.donor_blood
    other = gen_master_graph(replace(SMALL, seed=1))
    assert other.compat != master.compat


def test_master_pairs_incompatible(master):
    for _, v in master.pairs:
        if abo_compatible(master.donor_blood[v], master.patient_blood[v]):
            assert master.patient_pra[v] > 0
    assert all((v, v) not in master.compat for _, v in master.pairs)
    assert len(master.ndds) == math.ceil(0.05 * 300)


def test_master_density_within_three_sigma():
    cfg = GenConfig()
    m = gen_master_graph(cfg)
    # given the drawn blood types and PRA levels, each edge is an independent coin
    db = np.array(m.donor_blood)
    pair_vs = np.array([v for _, v in m.pairs])
    pb = np.array(m.patient_blood)[pair_vs]
    pp = np.array(m.patient_pra)[pair_vs]
    abo = np.array([[abo_compatible(d, p) for p in range(4)] for d in range(4)])
    prob = abo[db[:, None], pb[None, :]] * (1 - pp[None, :])
    prob[pair_vs, np.arange(len(pair_vs))] = 0
    mean, var = prob.sum(), (prob * (1 - prob)).sum()
    assert abs(len(m.compat) - mean) <= 3 * math.sqrt(var)


def test_master_blood_types_follow_frequencies():
    cfg = GenConfig()
    m = gen_master_graph(cfg)
    ndd_types = np.bincount([m.donor_blood[v] for v in m.ndds], minlength=4)
    n = len(m.ndds)
    for k, f in enumerate(cfg.blood_type_frequencies):
        assert abs(ndd_types[k] - n * f) <= 3 * math.sqrt(n * f * (1 - f)) + 1


def _chain_pool(n_edges):
    pairs = tuple((v, v) for v in range(1, n_edges + 1))
    compat = frozenset((v - 1, v) for v in range(1, n_edges + 1))
    return StandardPool(pairs, (0,), compat, {})


def test_thin_edges_extremes():
    pool = _chain_pool(20)
    assert thin_edges(pool, 0, 1) == pool
    assert thin_edges(pool, 1, 1).compat == frozenset()
    with pytest.raises(ValueError):
        thin_edges(pool, 1.5, 1)


def test_thin_edges_binomial_window():
    pool = _chain_pool(1000)
    for seed in range(5):
        kept = len(thin_edges(pool, 0.7, seed).compat)
        assert 255 <= kept <= 345
    assert thin_edges(pool, 0.7, 3) == thin_edges(pool, 0.7, 3)


def test_sample_pool_ndds_and_clubs():
    m = gen_master_graph(GenConfig(master_size=400))
    inst = sample_pool(m, 100, m.config, 7)
    assert validate_instance(inst) == []
    assert len(inst.clubs) == 100
    assert sum(1 for c in inst.clubs if not c.patients) == 5
    assert [c.id for c in inst.clubs] == list(range(100))
    multi = [c for c in inst.clubs if len(c.donors) == 2]
    assert len(multi) == round(0.057 * 95)
    assert all(c.alpha == 2 and c.gamma == 0 for c in multi)
    assert all(e.weight == 1.0 for e in inst.edges)


def test_sample_pool_no_multi_donor():
    cfg = GenConfig(master_size=400, multi_donor_fraction=0)
    inst = sample_pool(gen_master_graph(cfg), 100, cfg, 1)
    assert all(len(c.donors) == 1 and c.alpha == 1 for c in inst.clubs)


def test_sample_pool_ten_percent_multi_donor():
    cfg = GenConfig(master_size=400, multi_donor_fraction=0.10)
    inst = sample_pool(gen_master_graph(cfg), 100, cfg, 1)
    assert sum(1 for c in inst.clubs if len(c.donors) == 2) in (9, 10)


def test_sample_pool_insufficient(master):
    with pytest.raises(ValueError, match="insufficient"):
        sample_pool(master, 301, SMALL, 0)


def test_sample_pool_determinism(master):
    assert sample_pool(master, 60, SMALL, [0, 60, 3]) == sample_pool(master, 60, SMALL, [0, 60, 3])


def test_sample_pool_edges_come_from_master(master):
    inst = sample_pool(master, 80, SMALL, 2)
    for e in inst.edges:
        if e.donor < SMALL.master_size:
            assert (e.donor, e.patient) in master.compat
        else:
            assert (e.donor, e.patient) in second_donor_edges(master, e.donor - SMALL.master_size)


def test_second_donor_stream_is_stable(master):
    v = master.pairs[3][0]
    assert second_donor_edges(master, v) == second_donor_edges(master, v)
    assert all(d == SMALL.master_size + v and p != v for d, p in second_donor_edges(master, v))


def test_single_donor_view(master):
    cfg = replace(SMALL, multi_donor_fraction=0.3)
    inst = sample_pool(master, 60, cfg, 5)
    one = single_donor_view(inst)
    assert all(len(c.donors) == 1 for c in one.clubs if c.donors)
    assert all(c.alpha == 1 for c in one.clubs if c.patients)
    assert all(e.donor < SMALL.master_size for e in one.edges)
    assert set(one.edges) <= set(inst.edges)


def test_config_round_trip_and_validation():
    cfg = GenConfig(master_size=50, pool_sizes=(10,), seeds_per_size=2)
    assert config_from_dict(config_to_dict(cfg)) == cfg
    with pytest.raises(ValueError):
        config_from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        GenConfig(edge_failure_rate=1.5)
    with pytest.raises(ValueError):
        GenConfig(blood_type_frequencies=(0.5, 0.5, 0.5, 0.5))


def test_improvement_pct():
    row = ExperimentRow(50, 0, Fraction(10), Fraction(12), Fraction(15))
    assert row.improvement_1don_pct == 20 and row.improvement_2don_pct == 50
    assert ExperimentRow(50, 0, Fraction(0), Fraction(1), Fraction(1)).improvement_1don_pct is None


def test_run_experiment_small():
    cfg = GenConfig(master_size=200)
    rows = run_experiment(cfg, [10], 1)
    assert len(rows) == 1 and (rows[0].pool_size, rows[0].seed) == (10, 0)
    rows = run_experiment(cfg, [20], 3)
    for r in rows:
        assert r.frames_value_1don >= r.standard_value
        assert r.frames_value_2don >= r.frames_value_1don
    assert rows_to_csv(rows) == rows_to_csv(run_experiment(cfg, [20], 3, jobs=2))


def test_csv_format():
    text = rows_to_csv([ExperimentRow(50, 1, Fraction(3), Fraction(4), Fraction(4)),
                        ExperimentRow(50, 2, Fraction(0), Fraction(0), Fraction(1))])
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "pool_size,seed,standard_value,frames_value_1don,frames_value_2don,improvement_1don_pct,improvement_2don_pct"
    assert lines[1] == "50,1,3,4,4,33.333333,33.333333"
    assert lines[2] == "50,2,0,0,1,,"
