"""Synthetic compressed-sensing instances, experiment batteries and metrics.

Every random draw derives from one integer seed through the fixed streams in
:mod:`aairl1.rng`, so an instance and a solver start are reproducible from
``(m, n, K, seed)`` alone.
"""

import json
import math
import os
import statistics
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ContractViolation
from .problem import ProblemInstance
from .regularizers import RegularizerSpec
from .rng import STREAMS, stream
from .solvers import SOLVERS, SolveConfig, solve

NOISE_STD = 1e-2
THRESHOLD = 1e-6
SUMMARY_SCHEMA = 1
DESK = (100, 200, 20)

SWEEP_FIELDS = {"m": "depth_m", "eta": "eta", "beta": "beta"}


def generate_instance(m, n, K, seed, lam=0.1, reg=None, noise_std=NOISE_STD):
    """Row-orthonormal Gaussian design, K-sparse +-1 signal, Gaussian noise.

    Returns ``(instance, x_true)``.  With ``noise_std == 0`` the observations
    are exactly ``A @ x_true``.
    """
    m, n, K = int(m), int(n), int(K)
    if m < 1 or n < 1 or K < 0:
        raise ContractViolation("need m, n >= 1 and K >= 0")
    if K > n:
        raise ContractViolation("K=%d exceeds n=%d" % (K, n))
    if m > n:
        raise ContractViolation("rows cannot be orthonormalized when m=%d > n=%d" % (m, n))
    reg = RegularizerSpec.from_name("lpn", 0.5) if reg is None else reg
    G = stream(seed, "A").standard_normal((n, m))
    Q, _ = np.linalg.qr(G, mode="reduced")
    A = np.ascontiguousarray(Q.T)
    support = np.sort(stream(seed, "support").choice(n, size=K, replace=False))
    signs = np.where(stream(seed, "signs").random(K) < 0.5, -1.0, 1.0)
    x_true = np.zeros(n)
    x_true[support] = signs
    b = A @ x_true
    if noise_std > 0:
        b = b + noise_std * stream(seed, "noise").standard_normal(m)
    return ProblemInstance(A=A, b=b, lam=lam, reg=reg, seed=int(seed)), x_true


def sparsity_metrics(x, x_true, threshold=THRESHOLD):
    x = np.asarray(x, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    if x.shape != x_true.shape:
        raise ContractViolation("x and x_true must have equal shapes")
    est = x != 0
    truth = x_true != 0
    tp = int(np.count_nonzero(est & truth))
    n_est = int(np.count_nonzero(est))
    n_true = int(np.count_nonzero(truth))
    precision = tp / n_est if n_est else (1.0 if n_true == 0 else 0.0)
    recall = tp / n_true if n_true else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {
        "nonzeros_exact": n_est,
        "nonzeros_thresholded": int(np.count_nonzero(np.abs(x) > threshold)),
        "precision": precision,
        "recall": recall,
        "support_f1": f1,
    }


def sign_stable_tail(report, window=25):
    """True when ``sign(x^k)`` is constant over the last ``window`` iterates of a run."""
    tail = report.sign_tail[-window:]
    if len(tail) < window:
        return False
    return all(np.array_equal(tail[0], s) for s in tail[1:])


def tail_fit(resid_norms, window=30):
    """Least-squares line through ``log10`` residual norms of the last ``window`` iterations.

    Returns ``(slope, r_squared)``; zero residuals are dropped first.
    """
    r = np.asarray(resid_norms, dtype=np.float64)
    r = r[r > 0][-window:]
    if r.size < 3:
        return math.nan, math.nan
    y = np.log10(r)
    t = np.arange(y.size, dtype=np.float64)
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


@dataclass
class ExperimentSpec:
    m: int = DESK[0]
    n: int = DESK[1]
    K: int = DESK[2]
    seeds: list = field(default_factory=lambda: list(range(20)))
    solvers: list = field(default_factory=lambda: ["irl1", "irl2", "guard_aairl1", "nesirl1"])
    config: SolveConfig = field(default_factory=SolveConfig)
    lam: float = 0.1
    p: float = 0.5
    reg: str = "lpn"
    noise_std: float = NOISE_STD

    def __post_init__(self):
        if self.K > self.n:
            raise ContractViolation("K=%d exceeds n=%d" % (self.K, self.n))
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ContractViolation("unknown solvers: %s" % ", ".join(unknown))
        if isinstance(self.config, dict):
            self.config = SolveConfig(**self.config)
        self.seeds = [int(s) for s in self.seeds]

    def regularizer(self):
        return RegularizerSpec.from_name(self.reg, self.p)

    def to_dict(self):
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ContractViolation("unknown experiment fields: %s" % ", ".join(sorted(extra)))
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RunSummary:
    seed: int
    solver: str
    cpu_seconds: float = math.nan
    iterations: int = 0
    termination: str = None
    nonzeros_exact: int = 0
    nonzeros_thresholded: int = 0
    precision: float = math.nan
    recall: float = math.nan
    support_f1: float = math.nan
    final_objective: float = math.nan
    final_relaxed_objective: float = math.nan
    accepted_aa_count: int = 0
    rejected_aa_count: int = 0
    error: str = None

    def to_json(self):
        d = asdict(self)
        d["schema"] = SUMMARY_SCHEMA
        return json.dumps(d, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(".%s.tmp%d" % (path.name, os.getpid()))
    tmp.write_text(text)
    os.replace(tmp, path)


def trace_header(spec, seed, solver):
    return "\n".join([
        "solver=%s seed=%d m=%d n=%d K=%d lambda=%r reg=%s p=%r noise_std=%r"
        % (solver, seed, spec.m, spec.n, spec.K, spec.lam, spec.reg, spec.p, spec.noise_std),
        "rng=Philox SeedSequence(seed, spawn_key=(stream,)) streams=%s"
        % ",".join("%s:%d" % kv for kv in STREAMS.items()),
        "kernels=%s" % _kernels.backend.name,
    ])


def run_one(spec, seed, solver, out_dir=None):
    """Generate the instance for ``seed``, run ``solver`` and summarize.

    Solver failures are captured in ``RunSummary.error`` rather than raised.
    """
    summary = RunSummary(seed=int(seed), solver=solver)
    try:
        inst, x_true = generate_instance(spec.m, spec.n, spec.K, seed, lam=spec.lam,
                                         reg=spec.regularizer(), noise_std=spec.noise_std)
        t0 = time.process_time()
        report = solve(solver, inst, spec.config)
        summary.cpu_seconds = time.process_time() - t0
        summary.iterations = report.iterations
        summary.termination = report.termination.value
        for k, v in sparsity_metrics(report.x_final, x_true).items():
            setattr(summary, k, v)
        if report.trace:
            summary.final_objective = report.trace[-1].F
            summary.final_relaxed_objective = report.trace[-1].F_relaxed
        summary.accepted_aa_count = report.accepted_aa_count
        summary.rejected_aa_count = report.rejected_aa_count
        if out_dir is not None:
            out = Path(out_dir)
            tmp = out / (".trace_%s_seed%d.csv.tmp%d" % (solver, seed, os.getpid()))
            report.write_trace_csv(tmp, header_comment=trace_header(spec, seed, solver))
            os.replace(tmp, out / ("trace_%s_seed%d.csv" % (solver, seed)))
    except Exception as exc:  # recorded per run; the battery keeps going
        summary.error = "%s: %s" % (type(exc).__name__, exc)
        summary.termination = None
        if os.environ.get("AAIRL1_TRACEBACK"):
            traceback.print_exc()
    if out_dir is not None:
        _atomic_write(Path(out_dir) / ("summary_%s_seed%d.json" % (solver, seed)), summary.to_json())
    return summary


def _run_one_packed(args):
    return run_one(*args)


def _stats(values):
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return {"mean": math.nan, "median": math.nan, "std": math.nan, "count": 0}
    return {
        "mean": statistics.fmean(vals),
        "median": statistics.median(vals),
        "std": statistics.pstdev(vals) if len(vals) > 1 else 0.0,
        "count": len(vals),
    }


AGGREGATED = ("cpu_seconds", "iterations", "nonzeros_exact", "nonzeros_thresholded",
              "support_f1", "final_objective")


def aggregate(summaries):
    """Per-solver mean, median and standard deviation of the numeric summary fields.

    Runs that errored are counted under ``failures`` and excluded.  Input
    order does not matter.
    """
    by_solver = {}
    for s in sorted(summaries, key=lambda s: (s.solver, s.seed)):
        by_solver.setdefault(s.solver, []).append(s)
    out = {}
    for solver, rows in by_solver.items():
        ok = [r for r in rows if r.error is None]
        out[solver] = {name: _stats([getattr(r, name) for r in ok]) for name in AGGREGATED}
        out[solver]["failures"] = len(rows) - len(ok)
        out[solver]["runs"] = len(rows)
    return out


@dataclass
class Battery:
    spec: ExperimentSpec
    summaries: list
    aggregate: dict

    def by_solver(self, solver):
        return [s for s in self.summaries if s.solver == solver]

    def median(self, solver, name="iterations"):
        return self.aggregate[solver][name]["median"]


def run_experiment(spec, out_dir=None, jobs=1):
    """Run every ``seed x solver`` pair of ``spec``.

    With ``out_dir`` each run writes ``trace_<solver>_seed<k>.csv`` and
    ``summary_<solver>_seed<k>.json``; the battery writes ``aggregate.json``.
    Runs are independent and use up to ``jobs`` worker processes.
    """
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(spec, seed, solver, out_dir) for seed in spec.seeds for solver in spec.solvers]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            summaries = list(pool.map(_run_one_packed, tasks))
    else:
        summaries = [run_one(*t) for t in tasks]
    seed_rank = {s: i for i, s in enumerate(spec.seeds)}
    solver_rank = {s: i for i, s in enumerate(spec.solvers)}
    summaries.sort(key=lambda s: (seed_rank[s.seed], solver_rank[s.solver]))
    agg = aggregate(summaries)
    if out_dir is not None:
        payload = {"schema": SUMMARY_SCHEMA, "spec": spec.to_dict(), "aggregate": agg}
        _atomic_write(Path(out_dir) / "aggregate.json",
                      json.dumps(payload, indent=2, default=_json_default) + "\n")
    return Battery(spec=spec, summaries=summaries, aggregate=agg)


def run_sweep(spec, param, values, out_dir=None, jobs=1):
    """Repeat the battery for each value of one guard parameter (``m``, ``eta`` or ``beta``)."""
    if param not in SWEEP_FIELDS:
        raise ContractViolation("sweep parameter must be one of m, eta, beta")
    results = {}
    for v in values:
        v = int(v) if param == "m" else float(v)
        cfg = replace(spec.config, **{SWEEP_FIELDS[param]: v})
        sub = replace(spec, config=cfg)
        sub_dir = None if out_dir is None else Path(out_dir) / ("%s=%s" % (param, v))
        results[v] = run_experiment(sub, out_dir=sub_dir, jobs=jobs)
    if out_dir is not None:
        payload = {
            "schema": SUMMARY_SCHEMA, "sweep": param,
            "results": {str(v): b.aggregate for v, b in results.items()},
        }
        _atomic_write(Path(out_dir) / "sweep.json",
                      json.dumps(payload, indent=2, default=_json_default) + "\n")
    return results
