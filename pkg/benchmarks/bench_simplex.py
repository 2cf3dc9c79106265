"""Compiled versus numpy simplex kernel inside the branch-and-bound solver.

    python benchmarks/bench_simplex.py [--models 200] [--repeat 3]

Both kernels solve the same models; the script checks that they return the
same status and objective and reports wall time per kernel.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from clubex.clearing import build_capped  # noqa: E402
from clubex.frames import total_order  # noqa: E402
from clubex.ilp.bnb import branch_and_bound  # noqa: E402
from clubex.ilp.kernel import compiled_run_simplex, python_run_simplex  # noqa: E402
from oracles import random_binary_model, random_club_instance  # noqa: E402


def workload(n_models: int, seed: int):
    rng = random.Random(seed)
    models = [random_binary_model(rng, max_vars=24, max_constraints=16) for _ in range(n_models // 2)]
    while len(models) < n_models:
        inst = random_club_instance(rng, max_clubs=5, max_edges=10)
        models.append(build_capped(inst, total_order(3, 2))[0])
    return models


def run(models, kernel):
    start = time.perf_counter()
    results = [branch_and_bound(m, run_simplex=kernel) for m in models]
    return time.perf_counter() - start, [(r.status, r.objective) for r in results]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if compiled_run_simplex is None:
        print("compiled kernel not built; nothing to compare")
        return 1
    models = workload(args.models, args.seed)
    best = {}
    for name, kernel in (("numpy", python_run_simplex), ("cython", compiled_run_simplex)):
        times = []
        for _ in range(args.repeat):
            t, res = run(models, kernel)
            times.append(t)
        best[name] = (min(times), res)
    if best["numpy"][1] != best["cython"][1]:
        print("kernels disagree")
        return 2
    n_vars = sum(m.num_vars for m in models) / len(models)
    print(f"models={len(models)} mean_vars={n_vars:.1f} repeat={args.repeat}")
    for name, (t, _) in best.items():
        print(f"{name:7s} {t:8.3f}s  {1000 * t / len(models):7.2f} ms/model")
    print(f"speedup {best['numpy'][0] / best['cython'][0]:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
