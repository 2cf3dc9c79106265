"""``clubex`` command line.

Exit codes: 0 success, 1 check failed (verify-sp, validate), 2 usage error, 3 invalid input, 4 solver stopped
without proving optimality (the incumbent is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .clearing import horizon_dag, limited_horizon, single_frame, solve_capped, solve_uncapped
from .frames import Frame, Mode, Schedule, dag_from_dict, dag_to_dict, schedule_from_dict
from .frames import schedule_to_dict, total_order, validate_schedule
from .gadgets import build_reduction, check_reduction, set_packing_from_dict
from .gen import GenConfig, config_from_dict, gen_master_graph, rows_to_csv, run_experiment, sample_pool
from .gen import single_donor_view
from .model import from_standard, instance_from_dict, instance_to_dict, load_json, pool_from_dict
from .model import validate_instance
from .picef import graph_from_instance, solve_picef

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_TIMEOUT = 0, 2, 3, 4


class InputError(Exception):
    pass


def _read(path: str, parse):
    try:
        data = load_json(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return parse(data)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_instance(args):
    if getattr(args, "instance", None):
        inst = _read(args.instance, instance_from_dict)
    elif getattr(args, "pool", None):
        inst = from_standard(_read(args.pool, pool_from_dict))
    else:
        raise InputError("one of --instance or --pool is required")
    problems = validate_instance(inst)
    if problems:
        raise InputError("invalid instance: " + "; ".join(problems[:5]))
    return inst


def _load_dag(args):
    if args.frames:
        return _read(args.frames, dag_from_dict)
    if args.num_frames is None:
        raise InputError("one of --frames or --num-frames is required")
    try:
        return total_order(args.num_frames, args.cap)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _fraction(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _write_json(path: str | None, payload: dict):
    payload = {"version": __version__, **payload}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _schedule_payload(command: str, schedule: Schedule, dag) -> dict:
    out = schedule_to_dict(schedule)
    out["objective_exact"] = _fraction(schedule.objective)
    out["frames"] = dag_to_dict(dag)
    out["command"] = command
    return out


def _summary(objective, optimal: bool, start: float) -> int:
    status = "optimal" if optimal else "timed_out"
    print(f"objective={float(objective):g} status={status} time={time.monotonic() - start:.3f}s")
    return EXIT_OK if optimal else EXIT_TIMEOUT


def cmd_solve_uncapped(args, start):
    inst = _load_instance(args)
    m = solve_uncapped(inst, args.time_limit, args.backend)
    dag = single_frame(inst)
    sched = Schedule({e.key: 1 for e in m.edges}, m.objective, m.optimal)
    _write_json(args.output, _schedule_payload("solve-uncapped", sched, dag))
    return _summary(m.objective, m.optimal, start)


def cmd_solve_capped(args, start):
    inst = _load_instance(args)
    dag = _load_dag(args)
    sched = solve_capped(inst, dag, args.time_limit, args.backend)
    _write_json(args.output, _schedule_payload("solve-capped", sched, dag))
    return _summary(sched.objective, sched.optimal, start)


def cmd_solve_standard(args, start):
    inst = _load_instance(args)
    try:
        graph = graph_from_instance(inst)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    sol = solve_picef(graph, args.cycle_cap, args.chain_cap, args.time_limit, args.backend)
    # vertex ids are club ids; map structures back to donor -> patient edges
    clubs = inst.club_by_id
    assignments = {}
    for c in sol.cycles:
        for i in range(len(c)):
            u, v = c[i], c[(i + 1) % len(c)]
            assignments[(min(clubs[u].donors), min(clubs[v].patients))] = 1
    for ch in sol.chains:
        for u, v in zip(ch, ch[1:]):
            assignments[(min(clubs[u].donors), min(clubs[v].patients))] = 1
    sched = Schedule(assignments, sol.objective, sol.optimal)
    payload = _schedule_payload("solve-standard", sched, single_frame(inst))
    payload["cycles"] = [list(c) for c in sol.cycles]
    payload["chains"] = [list(c) for c in sol.chains]
    _write_json(args.output, payload)
    return _summary(sol.objective, sol.optimal, start)


def cmd_horizon(args, start):
    inst = _load_instance(args)
    template = Frame(1, args.cap)
    sched, final = limited_horizon(inst, template, args.horizon, args.max_rounds, args.time_limit, args.backend)
    payload = _schedule_payload("horizon", sched, horizon_dag(sched, template, args.horizon))
    payload["final_instance"] = instance_to_dict(final)
    _write_json(args.output, payload)
    return _summary(sched.objective, sched.optimal, start)


def _config(args) -> GenConfig:
    data = _read(args.config, lambda d: d) if args.config else {}
    if not isinstance(data, dict):
        raise InputError(f"{args.config}: config must be a JSON object")
    data = dict(data)
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "time_limit", None) is not None:
        data["time_limit"] = args.time_limit
    try:
        return config_from_dict(data)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_gen(args, start):
    config = _config(args)
    master = gen_master_graph(config)
    try:
        inst = sample_pool(master, args.size, config, [config.seed, args.size, 0])
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.single_donor:
        inst = single_donor_view(inst)
    _write_json(args.output, instance_to_dict(inst))
    print(f"clubs={len(inst.clubs)} edges={len(inst.edges)} time={time.monotonic() - start:.3f}s")
    return EXIT_OK


def cmd_reduce_sp(args, start):
    sp = _read(args.sp, set_packing_from_dict)
    red = build_reduction(sp)
    _write_json(args.output, instance_to_dict(red.instance))
    print(f"clubs={len(red.instance.clubs)} edges={len(red.instance.edges)} M={red.big_m}")
    return EXIT_OK


def cmd_verify_sp(args, start):
    sp = _read(args.sp, set_packing_from_dict)
    check = check_reduction(sp, args.time_limit)
    verdict = "OK" if check.ok else "MISMATCH"
    print(f"objective={float(check.objective):g} M={check.big_m} k={check.k} {verdict}")
    if args.output:
        _write_json(
            args.output,
            {
                "objective": float(check.objective),
                "M": check.big_m,
                "k": check.k,
                "brute_force_k": check.brute_k,
                "packing": check.packing,
                "ok": check.ok,
            },
        )
    return EXIT_OK if check.ok else 1


def cmd_experiment(args, start):
    config = _config(args)
    rows = run_experiment(config, args.pool_sizes, args.seeds, args.jobs)
    text = rows_to_csv(rows)
    if args.output is None or args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    timed_out = [r for r in rows if not r.optimal]
    for r in timed_out:
        print(f"warning: pool_size={r.pool_size} seed={r.seed} not proven optimal", file=sys.stderr)
    status = "optimal" if not timed_out else "timed_out"
    print(f"rows={len(rows)} status={status} time={time.monotonic() - start:.3f}s", file=sys.stderr)
    return EXIT_OK if not timed_out else EXIT_TIMEOUT


def cmd_validate(args, start):
    inst = _load_instance(args)
    sched_data = _read(args.schedule, lambda d: d)
    try:
        sched = schedule_from_dict(sched_data)
    except ValueError as exc:
        raise InputError(f"{args.schedule}: {exc}") from exc
    if args.frames:
        dag = _read(args.frames, dag_from_dict)
    elif isinstance(sched_data, dict) and "frames" in sched_data:
        try:
            dag = dag_from_dict(sched_data["frames"])
        except ValueError as exc:
            raise InputError(f"{args.schedule}: {exc}") from exc
    else:
        dag = single_frame(inst)
    report = validate_schedule(inst, dag, sched, Mode(args.mode))
    for line in report:
        print(line)
    print("valid" if not report else f"invalid ({len(report)} problems)")
    return EXIT_OK if not report else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clubex", description="Exact clearing for exchange clubs.")
    parser.add_argument("--version", action="version", version=f"clubex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, source=True):
        if source:
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--instance", help="club instance JSON")
            g.add_argument("--pool", help="standard pool JSON")
        p.add_argument("--output", help="output file (default stdout)")
        p.add_argument("--time-limit", type=float, help="seconds per solve")
        p.add_argument("--backend", choices=["auto", "bnb", "highs"], default="auto")

    p = sub.add_parser("solve-uncapped", help="all transplants simultaneous")
    common(p)
    p.set_defaults(func=cmd_solve_uncapped)

    p = sub.add_parser("solve-capped", help="operation-frame scheduling")
    common(p)
    p.add_argument("--frames", help="frame DAG JSON")
    p.add_argument("--num-frames", type=int, help="total order length when --frames is absent")
    p.add_argument("--cap", type=int, default=4, help="per-frame cap with --num-frames")
    p.set_defaults(func=cmd_solve_capped)

    p = sub.add_parser("solve-standard", help="cycle and chain packing baseline")
    common(p)
    p.add_argument("--cycle-cap", type=int, default=4)
    p.add_argument("--chain-cap", type=int, default=4)
    p.set_defaults(func=cmd_solve_standard)

    p = sub.add_parser("horizon", help="repeated short-horizon clearing")
    common(p)
    p.add_argument("--horizon", type=int, required=True, help="frames per round")
    p.add_argument("--cap", type=int, default=4)
    p.add_argument("--max-rounds", type=int)
    p.set_defaults(func=cmd_horizon)

    p = sub.add_parser("gen", help="sample a synthetic instance")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int, required=True, help="pool size")
    p.add_argument("--single-donor", action="store_true", help="drop second donors")
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce-sp", help="set packing to club instance")
    p.add_argument("--sp", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_reduce_sp)

    p = sub.add_parser("verify-sp", help="check the set-packing reduction")
    p.add_argument("--sp", required=True)
    p.add_argument("--output")
    p.add_argument("--time-limit", type=float)
    p.set_defaults(func=cmd_verify_sp)

    p = sub.add_parser("experiment", help="frames versus batch sweep")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--pool-sizes", type=int, nargs="+")
    p.add_argument("--seeds", type=int, help="seeds per pool size")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("validate", help="check a schedule")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--instance")
    g.add_argument("--pool")
    p.add_argument("--schedule", required=True)
    p.add_argument("--frames", help="frame DAG JSON (default: the schedule's own, else one frame)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PER_FRAME.value)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("time_limit",):
        if getattr(args, name, None) is not None and getattr(args, name) <= 0:
            parser.print_usage(sys.stderr)
            print(f"clubex: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_USAGE
    for name in ("cap", "horizon", "num_frames", "jobs", "size", "cycle_cap", "chain_cap", "seeds"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name in ("chain_cap", "seeds") else 1):
            print(f"clubex: --{name.replace('_', '-')} out of range", file=sys.stderr)
            return EXIT_USAGE
    if getattr(args, "cycle_cap", None) is not None and args.cycle_cap < 2:
        print("clubex: --cycle-cap must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    start = time.monotonic()
    try:
        return args.func(args, start)
    except InputError as exc:
        print(f"clubex: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
