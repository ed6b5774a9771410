"""Command line entry point: ``gen``, ``solve`` and ``bench``.

Exit status is 0 on success, 2 when an input breaks a documented contract and
3 when a solver diverges.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ContractViolation, SolverDivergence
from .harness import (
    DESK, NOISE_STD, SUMMARY_SCHEMA, ExperimentSpec, RunSummary, _json_default,
    generate_instance, run_experiment, run_sweep, sparsity_metrics, trace_header,
)
from .problem import load_instance, save_instance
from .regularizers import RegularizerSpec
from .solvers import SOLVERS, SolveConfig, solve

EXIT_CONTRACT = 2
EXIT_DIVERGED = 3


def _instance_args(p):
    p.add_argument("--m", type=int, default=DESK[0])
    p.add_argument("--n", type=int, default=DESK[1])
    p.add_argument("--K", type=int, default=DESK[2])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reg", default="lpn", choices=["exp", "lpn", "log", "fra", "tan"])
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=NOISE_STD, help="noise standard deviation")


def build_parser():
    parser = argparse.ArgumentParser(prog="aairl1", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic instance to a directory")
    _instance_args(g)
    g.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("solve", help="solve one instance and print a JSON summary")
    _instance_args(s)
    s.add_argument("--instance", type=Path, help="load an instance directory instead of generating")
    s.add_argument("--solver", default="guard_aairl1", choices=sorted(SOLVERS))
    s.add_argument("--mu", type=float, default=0.9)
    s.add_argument("--depth", type=int, default=15)
    s.add_argument("--eta", type=float, default=0.85)
    s.add_argument("--beta", type=float, default=1e-11)
    s.add_argument("--opttol", type=float, default=1e-14)
    s.add_argument("--max-iters", type=int, default=50_000)
    s.add_argument("--debug-checks", action="store_true")
    s.add_argument("--trace-out", type=Path)

    b = sub.add_parser("bench", help="run an experiment battery from a JSON spec")
    b.add_argument("--spec", type=Path, help="ExperimentSpec JSON (defaults to the desk battery)")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", type=Path, required=True)
    b.add_argument("--sweep", choices=["m", "eta", "beta"])
    b.add_argument("--values", help="comma separated sweep values")
    return parser


def _cmd_gen(args):
    reg = RegularizerSpec.from_name(args.reg, args.p)
    inst, x_true = generate_instance(args.m, args.n, args.K, args.seed, lam=args.lam,
                                     reg=reg, noise_std=args.noise)
    save_instance(inst, args.out, x_true=x_true, extra={"K": args.K, "noise_std": args.noise})
    print(str(args.out))
    return 0


def _cmd_solve(args):
    if args.instance is not None:
        inst, x_true = load_instance(args.instance)
    else:
        reg = RegularizerSpec.from_name(args.reg, args.p)
        inst, x_true = generate_instance(args.m, args.n, args.K, args.seed, lam=args.lam,
                                         reg=reg, noise_std=args.noise)
    config = SolveConfig(mu=args.mu, depth_m=args.depth, eta=args.eta, beta=args.beta,
                         opttol_target=args.opttol, max_iters=args.max_iters,
                         debug_checks=args.debug_checks)
    report = solve(args.solver, inst, config)
    out = RunSummary(seed=inst.seed if inst.seed is not None else -1, solver=args.solver,
                     iterations=report.iterations, termination=report.termination.value,
                     accepted_aa_count=report.accepted_aa_count,
                     rejected_aa_count=report.rejected_aa_count)
    if report.trace:
        out.final_objective = report.trace[-1].F
        out.final_relaxed_objective = report.trace[-1].F_relaxed
        out.cpu_seconds = report.trace[-1].elapsed_s
    if x_true is not None:
        for k, v in sparsity_metrics(report.x_final, x_true).items():
            setattr(out, k, v)
    else:
        out.nonzeros_exact = int(np.count_nonzero(report.x_final))
    if args.trace_out is not None:
        spec = ExperimentSpec(m=inst.m, n=inst.n, K=args.K, seeds=[], solvers=[args.solver],
                              lam=inst.lam, p=inst.reg.p, reg=inst.reg.name, noise_std=args.noise)
        report.write_trace_csv(args.trace_out, header_comment=trace_header(spec, out.seed, args.solver))
    sys.stdout.write(out.to_json())
    return 0


def _cmd_bench(args):
    spec = ExperimentSpec.from_json(args.spec) if args.spec else ExperimentSpec()
    if args.sweep:
        if not args.values:
            raise ContractViolation("--sweep needs --values")
        values = [v for v in args.values.split(",") if v.strip()]
        results = run_sweep(spec, args.sweep, values, out_dir=args.out, jobs=args.jobs)
        payload = {"schema": SUMMARY_SCHEMA, "sweep": args.sweep,
                   "results": {str(v): b.aggregate for v, b in results.items()}}
    else:
        battery = run_experiment(spec, out_dir=args.out, jobs=args.jobs)
        payload = {"schema": SUMMARY_SCHEMA, "aggregate": battery.aggregate}
    sys.stdout.write(json.dumps(payload, indent=2, default=_json_default) + "\n")
    return 0


COMMANDS = {"gen": _cmd_gen, "solve": _cmd_solve, "bench": _cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SolverDivergence as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_DIVERGED
    except (ContractViolation, FileNotFoundError, json.JSONDecodeError, TypeError, KeyError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
