"""Synthetic pools and the frames-versus-batch experiment harness.

The master graph follows the usual blood-type plus sensitization recipe:
each pair draws a patient blood type, a PRA level and a donor blood type,
and is redrawn until the pair is internally incompatible.  A donor is
compatible with a patient when the blood types allow it and a crossmatch
coin with failure probability PRA comes up negative.

Vertex ``v`` of the master is an NDD for ``v < num_ndds`` and a pair
otherwise.  Donor ``v`` and patient ``v`` belong to vertex ``v``; the optional
second donor of pair ``v`` has id ``master_size + v``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .clearing import max_matched_edges, solve_capped_bounded, sufficient_frames
from .frames import total_order
from .model import Club, Edge, Instance, StandardPool
from .picef import graph_from_instance, standard_batch_value

BLOOD_TYPES = ("O", "A", "B", "AB")
CSV_HEADER = (
    "pool_size",
    "seed",
    "standard_value",
    "frames_value_1don",
    "frames_value_2don",
    "improvement_1don_pct",
    "improvement_2don_pct",
)


def abo_compatible(donor: int, patient: int) -> bool:
    """Blood types as indices into ``BLOOD_TYPES``."""
    if donor == 0 or patient == 3:
        return True
    return donor == patient


ABO = np.array([[abo_compatible(d, p) for p in range(4)] for d in range(4)])


@dataclass(frozen=True)
class GenConfig:
    master_size: int = 1000
    blood_type_frequencies: tuple[float, ...] = (0.4814, 0.3373, 0.1428, 0.0385)
    # (probability, PRA) per sensitization class
    pra_distribution: tuple[tuple[float, float], ...] = ((0.7019, 0.05), (0.2, 0.45), (0.0981, 0.90))
    edge_failure_rate: float = 0.7
    altruist_fraction: float = 0.05
    multi_donor_fraction: float = 0.057
    multi_donor_alpha: float = 2.0
    seed: int = 0
    frame_cap: int = 4
    structure_cap: int = 4
    num_frames: int | None = None
    time_limit: float | None = None
    pool_sizes: tuple[int, ...] = (50, 100)
    seeds_per_size: int = 20

    def __post_init__(self):
        object.__setattr__(self, "blood_type_frequencies", tuple(float(x) for x in self.blood_type_frequencies))
        object.__setattr__(
            self, "pra_distribution", tuple((float(p), float(v)) for p, v in self.pra_distribution)
        )
        object.__setattr__(self, "pool_sizes", tuple(int(x) for x in self.pool_sizes))
        self.validate()

    def validate(self):
        if self.master_size < 0:
            raise ValueError("master_size must be >= 0")
        if len(self.blood_type_frequencies) != 4:
            raise ValueError("blood_type_frequencies needs four entries (O, A, B, AB)")
        probs = list(self.blood_type_frequencies) + [p for p, _ in self.pra_distribution]
        probs += [v for _, v in self.pra_distribution]
        probs += [self.edge_failure_rate, self.altruist_fraction, self.multi_donor_fraction]
        if any(not 0 <= p <= 1 for p in probs):
            raise ValueError("probabilities and fractions must lie in [0, 1]")
        if not math.isclose(sum(self.blood_type_frequencies), 1.0, abs_tol=1e-9):
            raise ValueError("blood_type_frequencies must sum to 1")
        if not self.pra_distribution or not math.isclose(
            sum(p for p, _ in self.pra_distribution), 1.0, abs_tol=1e-9
        ):
            raise ValueError("pra_distribution probabilities must sum to 1")
        if self.multi_donor_alpha <= 0:
            raise ValueError("multi_donor_alpha must be positive")
        if self.frame_cap < 1 or self.structure_cap < 2:
            raise ValueError("frame_cap must be >= 1 and structure_cap >= 2")
        if self.num_frames is not None and self.num_frames < 1:
            raise ValueError("num_frames must be >= 1")
        if self.seeds_per_size < 0 or any(s < 0 for s in self.pool_sizes):
            raise ValueError("pool sizes and seed counts must be non-negative")

    @property
    def num_ndds(self) -> int:
        return math.ceil(self.altruist_fraction * self.master_size)


def config_from_dict(data: Mapping) -> GenConfig:
    known = {f.name for f in fields(GenConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    try:
        return GenConfig(**data)
    except TypeError as exc:
        raise ValueError(f"malformed config: {exc}") from exc


def config_to_dict(config: GenConfig) -> dict:
    out = asdict(config)
    out["blood_type_frequencies"] = list(config.blood_type_frequencies)
    out["pra_distribution"] = [list(x) for x in config.pra_distribution]
    out["pool_sizes"] = list(config.pool_sizes)
    return out


@dataclass(frozen=True)
class MasterPool(StandardPool):
    """Master pool plus the attributes needed to draw second donors later."""

    donor_blood: tuple[int, ...] = ()
    patient_blood: tuple[int, ...] = ()  # -1 for NDDs
    patient_pra: tuple[float, ...] = ()
    seed: int = 0
    config: GenConfig = field(default_factory=GenConfig)


def _draw_pair(rng: np.random.Generator, config: GenConfig) -> tuple[int, float, int]:
    bt = config.blood_type_frequencies
    pra_p = [p for p, _ in config.pra_distribution]
    pra_v = [v for _, v in config.pra_distribution]
    for _ in range(100_000):
        patient = int(rng.choice(4, p=bt))
        pra = pra_v[int(rng.choice(len(pra_v), p=pra_p))]
        donor = int(rng.choice(4, p=bt))
        positive_crossmatch = rng.random() < pra
        if not abo_compatible(donor, patient) or positive_crossmatch:
            return patient, pra, donor
    raise ValueError("configuration practically never produces incompatible pairs")


def gen_master_graph(config: GenConfig) -> MasterPool:
    n = config.master_size
    rng = np.random.default_rng([config.seed, 0])
    n_ndd = min(n, config.num_ndds)
    donor_blood, patient_blood, patient_pra = [], [], []
    for v in range(n):
        if v < n_ndd:
            donor_blood.append(int(rng.choice(4, p=config.blood_type_frequencies)))
            patient_blood.append(-1)
            patient_pra.append(0.0)
        else:
            pt, pra, dt = _draw_pair(rng, config)
            donor_blood.append(dt)
            patient_blood.append(pt)
            patient_pra.append(pra)

    compat = set()
    if n > n_ndd:
        pairs = np.arange(n_ndd, n)
        pb = np.array(patient_blood)[pairs]
        pp = np.array(patient_pra)[pairs]
        coins = rng.random((n, len(pairs)))
        db = np.array(donor_blood)
        ok = ABO[db[:, None], pb[None, :]] & (coins >= pp[None, :])
        ok[pairs, np.arange(len(pairs))] = False
        for d, j in zip(*np.nonzero(ok)):
            compat.add((int(d), int(pairs[j])))
    return MasterPool(
        pairs=tuple((v, v) for v in range(n_ndd, n)),
        ndds=tuple(range(n_ndd)),
        compat=frozenset(compat),
        weights={},
        donor_blood=tuple(donor_blood),
        patient_blood=tuple(patient_blood),
        patient_pra=tuple(patient_pra),
        seed=config.seed,
        config=config,
    )


def thin_edges(pool: StandardPool, rate: float, seed) -> StandardPool:
    """Keep each edge independently with probability ``1 - rate``."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    edges = sorted(pool.compat)
    keep = rng.random(len(edges)) >= rate
    kept = frozenset(e for e, k in zip(edges, keep) if k)
    weights = {e: w for e, w in pool.weights.items() if e in kept}
    return replace(pool, compat=kept, weights=weights)


def second_donor_edges(master: MasterPool, vertex: int) -> set[tuple[int, int]]:
    """Compatibility of pair ``vertex``'s second donor with every master patient.

    Drawn from a stream keyed only by (master seed, vertex), so it does not
    depend on which vertices a particular pool samples.
    """
    rng = np.random.default_rng([master.seed, 1, vertex])
    cfg = master.config
    own = master.patient_blood[vertex]
    own_pra = master.patient_pra[vertex]
    while True:
        blood = int(rng.choice(4, p=cfg.blood_type_frequencies))
        if not abo_compatible(blood, own) or rng.random() < own_pra:
            break
    donor = master.config.master_size + vertex
    out = set()
    for _, p in master.pairs:
        coin = rng.random()
        if p != vertex and abo_compatible(blood, master.patient_blood[p]) and coin >= master.patient_pra[p]:
            out.add((donor, p))
    return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample_pool(master: MasterPool, pool_size: int, config: GenConfig, seed) -> Instance:
    """Subsample ``pool_size`` vertices, thin edges, and build clubs.

    Club ids: sampled NDDs first, then sampled pairs, each in vertex order.
    """
    n_ndd = math.ceil(config.altruist_fraction * pool_size)
    n_pair = pool_size - n_ndd
    if n_ndd > len(master.ndds) or n_pair > len(master.pairs):
        raise ValueError(
            f"insufficient master vertices: need {n_ndd} NDDs and {n_pair} pairs, "
            f"have {len(master.ndds)} and {len(master.pairs)}"
        )
    rng = np.random.default_rng(seed)
    ndds = sorted(int(x) for x in rng.choice(list(master.ndds), n_ndd, replace=False)) if n_ndd else []
    pair_vs = [d for d, _ in master.pairs]
    pairs = sorted(int(x) for x in rng.choice(pair_vs, n_pair, replace=False)) if n_pair else []
    n_multi = _round_half_up(config.multi_donor_fraction * n_pair)
    multi = set(int(x) for x in rng.choice(pairs, n_multi, replace=False)) if n_multi else set()

    donors = set(ndds) | set(pairs)
    patients = set(pairs)
    induced = sorted((d, p) for d, p in master.compat if d in donors and p in patients)
    for v in sorted(multi):
        induced.extend(sorted((d, p) for d, p in second_donor_edges(master, v) if p in patients))
    keep = rng.random(len(induced)) >= config.edge_failure_rate
    edges = tuple(Edge(d, p, 1.0) for (d, p), k in sorted(zip(induced, keep)) if k)

    clubs = []
    for v in ndds:
        clubs.append(Club(len(clubs), {v}, set(), Fraction(1), Fraction(1)))
    for v in pairs:
        if v in multi:
            alpha = Fraction(config.multi_donor_alpha).limit_denominator(10**6)
            clubs.append(Club(len(clubs), {v, master.config.master_size + v}, {v}, alpha, Fraction(0)))
        else:
            clubs.append(Club(len(clubs), {v}, {v}, Fraction(1), Fraction(0)))
    return Instance(tuple(clubs), edges)


def single_donor_view(instance: Instance) -> Instance:
    """Keep only each club's lowest-id donor, with alpha reset to 1."""
    clubs, dropped = [], set()
    for c in instance.clubs:
        if len(c.donors) > 1:
            keep = min(c.donors)
            dropped |= c.donors - {keep}
            clubs.append(replace(c, donors=frozenset({keep}), alpha=Fraction(1)))
        else:
            clubs.append(c)
    edges = tuple(e for e in instance.edges if e.donor not in dropped)
    return Instance(tuple(clubs), edges)


@dataclass
class ExperimentRow:
    pool_size: int
    seed: int
    standard_value: Fraction
    frames_value_1don: Fraction
    frames_value_2don: Fraction
    num_frames_1don: int = 0
    num_frames_2don: int = 0
    optimal: bool = True

    @staticmethod
    def _pct(value, base) -> float | None:
        if base <= 0:
            return None
        return float(100 * (Fraction(value) - base) / base)

    @property
    def improvement_1don_pct(self) -> float | None:
        return self._pct(self.frames_value_1don, self.standard_value)

    @property
    def improvement_2don_pct(self) -> float | None:
        return self._pct(self.frames_value_2don, self.standard_value)


def _frames_value(instance: Instance, config: GenConfig) -> tuple[Fraction, int, bool]:
    if config.num_frames is not None:
        n = config.num_frames
    else:
        pool_size = len(instance.clubs)
        n = min(pool_size, sufficient_frames(max_matched_edges(instance, config.time_limit), config.frame_cap))
    sched = solve_capped_bounded(instance, total_order(max(1, n), config.frame_cap), config.time_limit)
    return sched.objective, max(1, n), sched.optimal


def run_cell(master: MasterPool, config: GenConfig, pool_size: int, seed: int) -> ExperimentRow:
    two = sample_pool(master, pool_size, config, [config.seed, pool_size, seed])
    one = single_donor_view(two)
    standard = standard_batch_value(graph_from_instance(one), config.structure_cap, config.time_limit)
    v1, n1, ok1 = _frames_value(one, config)
    v2, n2, ok2 = _frames_value(two, config)
    return ExperimentRow(pool_size, seed, standard, v1, v2, n1, n2, ok1 and ok2)


_WORKER: dict = {}


def _worker_init(config: GenConfig):
    _WORKER["config"] = config
    _WORKER["master"] = gen_master_graph(config)


def _worker_cell(cell):
    return run_cell(_WORKER["master"], _WORKER["config"], *cell)


def run_experiment(
    config: GenConfig,
    pool_sizes: Sequence[int] | None = None,
    seeds_per_size: int | None = None,
    jobs: int = 1,
) -> list[ExperimentRow]:
    sizes = list(config.pool_sizes if pool_sizes is None else pool_sizes)
    seeds = config.seeds_per_size if seeds_per_size is None else seeds_per_size
    cells = [(size, s) for size in sizes for s in range(seeds)]
    if jobs <= 1 or len(cells) <= 1:
        master = gen_master_graph(config)
        return [run_cell(master, config, size, s) for size, s in cells]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init, initargs=(config,)) as ex:
        return list(ex.map(_worker_cell, cells))


def _fmt_value(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else repr(float(v))


def _fmt_pct(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def rows_to_csv(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [
                r.pool_size,
                r.seed,
                _fmt_value(r.standard_value),
                _fmt_value(r.frames_value_1don),
                _fmt_value(r.frames_value_2don),
                _fmt_pct(r.improvement_1don_pct),
                _fmt_pct(r.improvement_2don_pct),
            ]
        )
    return buf.getvalue()
