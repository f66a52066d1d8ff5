"""Command-line front end: ``relaylab {analyze,sweep,optimize,simulate,validate}``.

Exit codes: 0 ok, 2 config error, 3 infeasible or unstable, 4 validation failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from . import simulator
from .config import load_scenario, load_sweep, scenario_from_dict, scenario_to_dict
from .errors import ConfigError, ContractViolation, EnumerationTooLargeError, InstabilityError
from .optimizer import optimize
from .oracle import MAX_ENUM_USERS
from .queue import queue_metrics
from .sweep import run_sweep, to_csv
from .throughput import throughput

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_VALIDATION = 0, 2, 3, 4
LOW_POWER_SLOTS = 100_000

log = logging.getLogger("relaylab")


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    return obj


def _emit(payload, out):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _scenario(args):
    if args.config:
        return load_scenario(args.config)
    return scenario_from_dict({"defaults": "table_one"})


def _route(scenario) -> str:
    if scenario.n == 1:
        return "one-user formulas"
    if scenario.n == 2:
        return "two-user formulas"
    if scenario.is_symmetric():
        return "symmetric n-user formulas"
    if scenario.n <= MAX_ENUM_USERS:
        return "exact enumerator"
    return "simulation only"


def _stats_dict(st: simulator.SimStats) -> dict:
    est = lambda e: {"value": e.value, "se": e.se}
    return {
        "slots": st.slots, "warmup": st.warmup, "seed": st.seed, "batches": st.batches,
        "lambda": est(st.lam), "mu": est(st.mu), "mu_per_attempt": est(st.mu_attempt),
        "p_empty": est(st.p_empty), "q_bar": est(st.q_bar),
        "t_direct": [est(e) for e in st.t_direct], "t_relay": [est(e) for e in st.t_relay],
        "t_user": [est(e) for e in st.t_user], "t_net": est(st.t_net),
        "queue_growth_per_slot": est(st.growth),
        "enqueued": st.enqueued, "dequeued": st.dequeued, "final_queue": st.final_queue,
    }


def cmd_analyze(args) -> int:
    scenario = _scenario(args)
    if args.dump_config:
        _emit(scenario_to_dict(scenario), args.out)
        return EXIT_OK
    route = _route(scenario)
    log.info("analysis route: %s", route)
    if route == "simulation only":
        log.warning("no exact analytics for %d asymmetric users; reporting simulation", scenario.n)
        st = simulator.run(scenario, args.slots, args.seed)
        _emit({"route": route, "simulation": _stats_dict(st)}, args.out)
        return EXIT_OK
    q = queue_metrics(scenario)
    payload = {"route": route, "queue": dataclasses.asdict(q)}
    code = EXIT_OK
    if q.stable:
        tp = throughput(scenario, q)
        payload["throughput"] = dict(dataclasses.asdict(tp), t_mean_user=tp.mean_user)
    else:
        log.error("relay queue unstable: lambda1=%.6g >= mu=%.6g", q.lambda1, q.mu)
        code = EXIT_OK if args.allow_unstable else EXIT_UNSTABLE
    _emit(payload, args.out)
    return code


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config pointing at a sweep file")
    spec = load_sweep(args.config)
    if args.grid is not None:
        spec = dataclasses.replace(spec, grid=args.grid)
    if args.refine is not None:
        spec = dataclasses.replace(spec, refine=args.refine)
    text = to_csv(run_sweep(spec))
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario = _scenario(args)
    res = optimize(scenario, grid_resolution=args.grid or 41,
                   refine=True if args.refine is None else args.refine,
                   rx_bounds=(args.min_rx, args.max_rx), tx_bounds=(args.min_tx, args.max_tx))
    _emit(dataclasses.asdict(res), args.out)
    if not res.feasible:
        log.error("no stable activation point in the search box")
        return EXIT_UNSTABLE
    return EXIT_OK


def _check_stable(scenario, allow: bool):
    try:
        q = queue_metrics(scenario)
    except EnumerationTooLargeError:
        return None
    if not q.stable and not allow:
        raise InstabilityError(
            f"relay queue unstable: lambda1={q.lambda1:.6g} >= mu={q.mu:.6g} "
            f"(q0_min={q.q0_min:.6g})", gap=-q.margin)
    return q


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    q = _check_stable(scenario, args.allow_unstable)
    st = simulator.run(scenario, args.slots, args.seed)
    payload = _stats_dict(st)
    payload["diverging"] = q is not None and not q.stable
    _emit(payload, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _scenario(args)
    _check_stable(scenario, allow=False)
    if args.slots < LOW_POWER_SLOTS:
        log.warning("only %d slots: the comparison has low statistical power", args.slots)
    rep = simulator.validate(scenario, args.slots, args.seed)
    sys.stderr.write(rep.table() + "\n")
    rows = [dict(metric=r.metric, analytic=r.analytic, empirical=r.empirical, se=r.se,
                 z=r.z, flagged=r.flagged) for r in rep.rows]
    _emit({"rows": rows, "ok": rep.ok}, args.out)
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON scenario (or sweep) file")
    common.add_argument("--out", metavar="PATH", help="also write the result here")
    common.add_argument("-v", "--verbose", action="store_true")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--slots", type=int, default=1_000_000)
    sim.add_argument("--seed", type=int, default=0)

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--grid", type=int, default=None, help="grid points per axis")
    opt.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None,
                     help="golden-section polish of the best grid cell")

    p = argparse.ArgumentParser(prog="relaylab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common, sim], help="queue and throughput analytics")
    a.add_argument("--allow-unstable", action="store_true")
    a.add_argument("--dump-config", action="store_true",
                   help="print the fully resolved scenario and exit")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", parents=[common, opt], help="CSV series over one parameter")
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimize", parents=[common, opt], help="best (P_rx, P_tx)")
    for name, default in (("min-rx", 0.0), ("max-rx", 1.0), ("min-tx", 0.0), ("max-tx", 1.0)):
        o.add_argument(f"--{name}", type=float, default=default)
    o.set_defaults(func=cmd_optimize)

    m = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo run")
    m.add_argument("--allow-unstable", action="store_true")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", parents=[common, sim], help="analytics vs simulation")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="relaylab: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractViolation) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except InstabilityError as exc:
        log.error("%s", exc)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
