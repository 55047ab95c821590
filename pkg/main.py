"""Command line: gen | run | bench | converge | oracle | lp | adversary.

Exit codes: 0 success, 2 input error, 3 oracle limits refusal, 4 internal invariant breach.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from agents.worstcase_agent import adversarial_game, shipped_policies
from config import Config
from core.errors import FailoverError, InputError
from core.failover_model import DemandSequence, ProblemParams
from data_ingestion.instance_io import read_instance, write_instance
from data_ingestion.instances import parse_distribution, sample
from offline.config_lp import make_types, round_up, solve_config_lp
from offline.oracle import brute_max_prefix, brute_opt_mach
from orchestrator.main_orchestrator import MainOrchestrator, RunRequest, frame_to_csv

logger = logging.getLogger("failover")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load(args) -> tuple:
    """Instance from --instance, or sampled from --dist/--n/--seed; --B/--m override the file."""
    if args.instance:
        params, demands = read_instance(args.instance)
        B = args.B if args.B is not None else params.failover_capacity
        m = args.m if args.m is not None else params.machine_budget
        return ProblemParams(failover_capacity=B, machine_budget=m), demands
    if not args.dist or args.n is None:
        raise InputError("give --instance, or --dist with --n")
    params = ProblemParams(failover_capacity=args.B or 1.0, machine_budget=args.m)
    spec = parse_distribution(args.dist)
    spec.check_support(params.max_size)
    return params, sample(spec, args.n, args.seed)


def cmd_gen(args) -> int:
    params = ProblemParams(failover_capacity=args.B or 1.0, machine_budget=args.m)
    spec = parse_distribution(args.dist)
    spec.check_support(params.max_size)
    demands = sample(spec, args.n, args.seed)
    write_instance(args.out, params, demands, fmt=args.format)
    logger.info(f"Generated {len(demands)} demands into {args.out}")
    return Config.EXIT_OK


def cmd_run(args) -> int:
    params, demands = _load(args)
    request = RunRequest(alg=args.alg, B=params.failover_capacity, m=params.machine_budget, L=args.L,
                         epsilon=args.epsilon, cst1=args.cst1, seed=args.seed)
    report = MainOrchestrator(args.jobs).run(request, demands)
    _emit(report.model_dump_json(indent=2) + "\n", args.out)
    return Config.EXIT_OK if report.feasible else Config.EXIT_INTERNAL


def cmd_bench(args) -> int:
    frame = MainOrchestrator(args.jobs).bench(args.suite, args.dist or Config.BENCH_DISTRIBUTION,
                                              B=args.B or 1.0, seed=args.seed, trials=args.trials,
                                              machines=args.machines, cst1=args.cst1)
    _emit(frame_to_csv(frame), args.out)
    return Config.EXIT_OK


def cmd_converge(args) -> int:
    spec = parse_distribution(args.dist)
    series = MainOrchestrator(args.jobs).converge(spec, args.B or 1.0, args.T, args.method)
    _emit(frame_to_csv(series.frame()), args.out)
    return Config.EXIT_OK


def cmd_oracle(args) -> int:
    params, demands = _load(args)
    B = params.failover_capacity
    if args.mode == "optmach":
        body = {"opt_mach": brute_opt_mach(demands, B)}
    else:
        if params.machine_budget is None:
            raise InputError("--mode prefix needs --m")
        prefix = brute_max_prefix(demands, B, params.machine_budget)
        body = {"length": prefix.length, "utilization": prefix.utilization}
    _emit(json.dumps(body, indent=2) + "\n", args.out)
    return Config.EXIT_OK


def cmd_lp(args) -> int:
    if not args.tol > 0:
        raise InputError(f"--tol must be positive, got {args.tol}")
    params, demands = _load(args)
    partition = make_types(demands, args.types)
    result = solve_config_lp(partition, params.failover_capacity, tol=args.tol, pricing=args.pricing)
    body = result.summary()
    body["rounded_machines"] = len(round_up(result)) if partition.T else 0
    _emit(json.dumps(body, indent=2) + "\n", args.out)
    return Config.EXIT_OK


def cmd_adversary(args) -> int:
    rows = []
    for name, policy in shipped_policies().items():
        game = adversarial_game(policy, args.epsilon or 0.1, name)
        rows.append(game.model_dump() | {"bound": game.bound})
    _emit(json.dumps(rows, indent=2) + "\n", args.out)
    return Config.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="failover", description="Failover-aware demand placement toolkit")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--instance", help="instance file (JSON or text)")
        p.add_argument("--dist", help="uniform:lo:hi | point:v | discrete:v1,v2:w1,w2 | json:{...}")
        p.add_argument("--B", type=float, default=None, help="failover capacity (>= 1)")
        p.add_argument("--m", type=int, default=None, help="machine budget")
        p.add_argument("--n", type=int, default=None, help="number of demands to sample")
        p.add_argument("--seed", type=int, default=Config.SEED)
        p.add_argument("--jobs", type=int, default=Config.JOBS)
        p.add_argument("--out", default=None, help="output file (stdout when omitted)")
        return p

    gen = common(sub.add_parser("gen", help="sample an instance file"))
    gen.set_defaults(func=cmd_gen, out="instance.json")
    gen.add_argument("--format", choices=["json", "text"], default="json")

    run = common(sub.add_parser("run", help="run one algorithm and print a JSON report"))
    run.set_defaults(func=cmd_run)
    run.add_argument("--alg", required=True, choices=["worstcase", "small", "stochastic", "offline-min"])
    run.add_argument("--L", type=int, default=None, help="clique parameter of the small-demands agent")
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--cst1", type=float, default=Config.DEFAULT_CST1)
    run.add_argument("--format", choices=["json"], default="json")

    bench = common(sub.add_parser("bench", help="CSV columns: m, trial, alg, utilization, ratio"))
    bench.set_defaults(func=cmd_bench)
    bench.add_argument("--suite", choices=sorted(Config.BENCH_SUITES), default="worstcase")
    bench.add_argument("--trials", type=int, default=None)
    bench.add_argument("--machines", type=_int_list, default=None, help="comma-separated machine budgets")
    bench.add_argument("--cst1", type=float, default=Config.DEFAULT_CST1)
    bench.add_argument("--format", choices=["csv"], default="csv")

    converge = common(sub.add_parser("converge", help="CSV columns: T, machines, ratio, diff"))
    converge.set_defaults(func=cmd_converge)
    converge.add_argument("--T", type=_int_list, default=[64, 128, 256, 512, 1024, 2048, 4096])
    converge.add_argument("--method", choices=["brute", "offline-min"], default="offline-min")
    converge.add_argument("--format", choices=["csv"], default="csv")

    oracle = common(sub.add_parser("oracle", help="exact minimum machines or longest feasible prefix"))
    oracle.set_defaults(func=cmd_oracle)
    oracle.add_argument("--mode", choices=["optmach", "prefix"], default="optmach")

    lp = common(sub.add_parser("lp", help="solve the configuration LP and print JSON"))
    lp.set_defaults(func=cmd_lp)
    lp.add_argument("--types", choices=["by-size", "per-demand"], default="by-size")
    lp.add_argument("--pricing", choices=["exact", "fptas"], default="exact")
    lp.add_argument("--tol", type=float, default=Config.LP_TOLERANCE)

    adversary = common(sub.add_parser("adversary", help="play the 4-machine adversary against the shipped policies"))
    adversary.set_defaults(func=cmd_adversary)
    adversary.add_argument("--epsilon", type=float, default=0.1)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except FailoverError as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"invalid parameters: {e}")
        return Config.EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return Config.EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
