"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 200,2000,20000] [--repeat 7] [--json out.json]

Each raw kernel is warmed up once (so JIT compilation is excluded) and timed
with ``timeit``; the best of ``--repeat`` rounds is reported.  The crossover
in the weight and penalty rows is what sets ``TRANSCENDENTAL_CUTOFF``.  A full
desk-scale solve is timed under both backend settings as well.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from aairl1 import _kernels
from aairl1.harness import generate_instance
from aairl1.solvers import solve


def kernel_cases(n, rng):
    """``name -> (numba call, numpy call)`` on shared random inputs of length ``n``."""
    k = _kernels
    x = rng.standard_normal(n) * (rng.random(n) < 0.3)
    g = rng.standard_normal(n)
    eps = np.full(n, 1e-3)
    t = np.abs(x) + eps
    w = rng.uniform(0.1, 2.0, n)
    return {
        "weights": (lambda: k._nb_weights(k.LPN, 0.5, x, eps, k.WEIGHT_CLAMP),
                    lambda: k._np_weights(k.LPN, 0.5, x, eps, k.WEIGHT_CLAMP)),
        "phi_sum": (lambda: k._nb_phi_sum(k.LPN, 0.5, t), lambda: k._np_phi_sum(k.LPN, 0.5, t)),
        "prox": (lambda: k._nb_prox(x, g, w, 0.1, 1.0), lambda: k._np_prox(x, g, w, 0.1, 1.0)),
        "chi": (lambda: k._nb_chi(x, g, w), lambda: k._np_chi(x, g, w)),
    }


def best_of(fn, repeat):
    fn()
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,2000,20000")
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--solver", default="guard_aairl1")
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    if not _kernels.HAS_NUMBA:
        print("numba is not available; nothing to compare", file=sys.stderr)
        return 1

    rows = []
    rng = np.random.default_rng(0)
    for n in (int(s) for s in args.sizes.split(",")):
        cases = kernel_cases(n, rng)
        for name, (nb, npy) in cases.items():
            rows.append({"kernel": name, "n": n,
                         "numba": best_of(nb, args.repeat), "numpy": best_of(npy, args.repeat)})

    inst, _ = generate_instance(100, 200, 20, 0)
    for flag in (True, False):
        _kernels.use_numba(flag)
        solve(args.solver, inst)
    t = {}
    for flag in (True, False):
        _kernels.use_numba(flag)
        t["numba" if flag else "numpy"] = min(
            timeit.repeat(lambda: solve(args.solver, inst), repeat=3, number=1))
    rows.append({"kernel": "solve:" + args.solver, "n": inst.n, **t})
    _kernels.use_numba(True)

    print("%-22s %7s %12s %12s %8s" % ("kernel", "n", "numba [us]", "numpy [us]", "speedup"))
    for r in rows:
        print("%-22s %7d %12.2f %12.2f %7.2fx" % (
            r["kernel"], r["n"], r["numba"] * 1e6, r["numpy"] * 1e6, r["numpy"] / r["numba"]))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
