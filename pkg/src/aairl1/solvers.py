"""Solver drivers: IRL1, Anderson-accelerated IRL1, its guarded variant, and baselines.

All drivers share one loop (:func:`_drive`) that owns the perturbation
schedule, the stopping rule and the trace; each algorithm only supplies the
rule producing ``x^{k+1}`` from ``x^k``.

Trace rows are indexed by the iterate they produce: row ``k`` (1-based
``iter``) describes the step ``x^{k-1} -> x^k`` and stores objective values at
``(x^k, eps^k)``.  ``SolveReport.F0`` holds ``F(x^0, eps^0)``.
"""

import csv
import enum
import math
import time
from collections import deque
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import _kernels
from .anderson import AndersonWindow, mix, solve_alpha
from .errors import ContractViolation, ResidualsVanished, SolverDivergence
from .fixed_point import IterateState, apply_map
from .problem import estimate_lipschitz, objective_value, relaxed_objective, smooth_gradient
from .regularizers import Family, WEIGHT_CLAMP
from .rng import initial_point

# eps underflows to zero after roughly 7000 decays at mu = 0.9; keep it positive
EPS_FLOOR = np.finfo(np.float64).tiny

SIGN_TAIL = 25


class Termination(str, enum.Enum):
    OPT_TOL = "OptTol"
    MAX_ITERS = "MaxIters"
    STALLED = "StalledResidual"


@dataclass(frozen=True)
class SolveConfig:
    mu: float = 0.9
    depth_m: int = 15
    eta: float = 0.85
    beta: float = 1e-11
    opttol_target: float = 1e-14
    max_iters: int = 50_000
    eps0: float = 1.0
    debug_checks: bool = False
    chi_lambda_scaled: bool = False
    tikhonov_scale: float = 1e-10
    stall_window: int = 100
    stall_tol: float = 1e-16

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ContractViolation("mu must lie in (0, 1)")
        if int(self.depth_m) < 1:
            raise ContractViolation("depth_m must be >= 1")
        if not 0 <= self.eta <= 1:
            raise ContractViolation("eta must lie in [0, 1]")
        if not self.beta >= 0:
            raise ContractViolation("beta must be nonnegative")
        if not self.opttol_target > 0:
            raise ContractViolation("opttol_target must be positive")
        if int(self.max_iters) < 1:
            raise ContractViolation("max_iters must be >= 1")
        if not self.eps0 > 0:
            raise ContractViolation("eps0 must be positive")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class GuardAccumulator:
    """Nonmonotone reference value ``E`` and its weight ``J``.

    ``E`` is a running convex combination of past objective values, biased
    towards recent ones by ``eta``.
    """

    E: float
    J: float = 1.0
    eta: float = 0.85
    beta: float = 1e-11

    def update(self, f_new):
        J_old = self.J
        self.J = self.eta * J_old + 1.0
        self.E = (self.eta * J_old * self.E + f_new) / self.J
        return self

    def accept(self, f_aa, chi):
        return f_aa <= self.E - self.beta * chi


def guard_update(acc, f_new):
    return acc.update(f_new)


def guard_accept(acc, f_aa, chi):
    if chi < 0:
        raise ContractViolation("chi must be nonnegative")
    return acc.accept(f_aa, chi)


def chi_measure(x, grad, weights):
    """Max over coordinates of the distance from ``-grad_i`` to ``w_i * d|x_i|``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if not (x.shape == grad.shape == weights.shape):
        raise ContractViolation("x, grad and weights must have equal shapes")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(grad)) and np.all(np.isfinite(weights))):
        raise ContractViolation("chi_measure inputs must be finite")
    return _kernels.backend.chi(x, grad, weights)


def opttol(x_k, x_prev):
    """Relative change ``||x_k - x_prev|| / ||x_k||``; inf if only ``x_k`` vanishes."""
    d = float(np.linalg.norm(np.asarray(x_k) - np.asarray(x_prev)))
    nx = float(np.linalg.norm(x_k))
    if nx == 0.0:
        return 0.0 if d == 0.0 else math.inf
    return d / nx


@dataclass
class TraceRecord:
    iter: int
    kind: str
    F: float
    F_relaxed: float
    resid_norm: float
    opttol: float
    chi: float
    alpha_l1: float
    accepted: bool
    elapsed_s: float
    step_norm: float = 0.0
    E: float = math.nan
    n_clamped: int = 0


CSV_COLUMNS = ("iter", "kind", "F", "F_relaxed", "resid_norm", "opttol",
               "chi", "alpha_l1", "accepted", "elapsed_s")


@dataclass
class SolveReport:
    solver: str
    x_final: np.ndarray
    eps_final: np.ndarray
    iterations: int
    termination: Termination
    trace: list
    accepted_aa_count: int = 0
    rejected_aa_count: int = 0
    F0: float = math.nan
    info: object = None
    x0: np.ndarray = None
    clamp_events: int = 0
    sign_tail: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.trace])

    def support(self):
        return np.flatnonzero(self.x_final)

    def write_trace_csv(self, path, header_comment=None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                for line in header_comment.splitlines():
                    fh.write("# %s\n" % line)
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.trace:
                w.writerow([
                    r.iter, r.kind, repr(r.F), repr(r.F_relaxed), repr(r.resid_norm),
                    repr(r.opttol), repr(r.chi), repr(r.alpha_l1), int(r.accepted),
                    "%.6f" % r.elapsed_s,
                ])


def read_trace_csv(path):
    """Rows of a trace CSV as dicts with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        lines = (ln for ln in fh if not ln.startswith("#"))
        for row in csv.DictReader(lines):
            rec = {}
            for k, v in row.items():
                if k == "kind":
                    rec[k] = v
                elif k in ("iter", "accepted"):
                    rec[k] = int(v)
                else:
                    rec[k] = float(v)
            out.append(rec)
    return out


# shared driver ----------------------------------------------------------------

@dataclass
class _Step:
    x_next: np.ndarray
    kind: str
    resid_norm: float
    chi: float
    alpha_l1: float = math.nan
    accepted: bool = False
    E: float = math.nan
    n_clamped: int = 0
    F_relaxed_next: float = None
    converged: bool = False


def _start(inst, config, x0):
    if x0 is None:
        x0 = initial_point(inst.n, 0 if inst.seed is None else inst.seed)
    x0 = np.array(x0, dtype=np.float64)
    if x0.shape != (inst.n,):
        raise ContractViolation("x0 must have shape (%d,)" % inst.n)
    eps0 = np.full(inst.n, float(config.eps0))
    return x0, eps0


def _finite_or_raise(value, k, what="objective"):
    if not math.isfinite(value):
        raise SolverDivergence("%s became non-finite at iteration %d" % (what, k), iteration=k)


def _drive(name, inst, config, x0, step_fn, info=None):
    info = estimate_lipschitz(inst) if info is None else info
    x, eps = _start(inst, config, x0)
    x_start = x.copy()
    F0 = relaxed_objective(inst, x, eps)
    _finite_or_raise(F0, 0)
    trace = []
    recent = deque(maxlen=int(config.stall_window))
    signs = deque(maxlen=SIGN_TAIL)
    termination = Termination.MAX_ITERS
    t0 = time.perf_counter()
    clamps = 0
    accepted = rejected = 0
    for k in range(int(config.max_iters)):
        eps_next = np.maximum(config.mu * eps, EPS_FLOOR)
        step = step_fn(k, x, eps, eps_next, info)
        x_next = step.x_next
        F_rel = step.F_relaxed_next
        if F_rel is None:
            F_rel = relaxed_objective(inst, x_next, eps_next)
        _finite_or_raise(F_rel, k + 1)
        F_plain = objective_value(inst, x_next)
        tol = opttol(x_next, x)
        clamps += step.n_clamped
        if step.kind == "AA":
            accepted += 1 if step.accepted else 0
        elif step.kind == "UA" and not math.isnan(step.E):
            rejected += 1
        trace.append(TraceRecord(
            iter=k + 1, kind=step.kind, F=F_plain, F_relaxed=F_rel,
            resid_norm=step.resid_norm, opttol=tol, chi=step.chi,
            alpha_l1=step.alpha_l1, accepted=step.accepted,
            elapsed_s=time.perf_counter() - t0,
            step_norm=float(np.linalg.norm(x_next - x)), E=step.E,
            n_clamped=step.n_clamped,
        ))
        signs.append(np.sign(x_next).astype(np.int8))
        x, eps = x_next, eps_next
        if step.converged or tol <= config.opttol_target:
            termination = Termination.OPT_TOL
            break
        recent.append(tol)
        if len(recent) == recent.maxlen and max(recent) - min(recent) <= config.stall_tol:
            termination = Termination.STALLED
            break
    return SolveReport(
        solver=name, x_final=x, eps_final=eps, iterations=len(trace),
        termination=termination, trace=trace,
        accepted_aa_count=accepted, rejected_aa_count=rejected,
        F0=F0, info=info, x0=x_start, clamp_events=clamps, sign_tail=list(signs),
    )


def _chi_weights(inst, config, w):
    return inst.lam * w if config.chi_lambda_scaled else w


# algorithms -------------------------------------------------------------------

def run_irl1(inst, config=SolveConfig(), x0=None, info=None):
    """Plain iteratively reweighted l1: ``x^{k+1} = H_x(x^k, eps^k)``."""

    def step(k, x, eps, eps_next, info):
        out = apply_map(inst, info, IterateState(x, eps, k), config.mu, debug=config.debug_checks)
        return _Step(
            x_next=out.h_x, kind="UA",
            resid_norm=float(np.linalg.norm(out.residual)),
            chi=chi_measure(x, out.grad, _chi_weights(inst, config, out.weights)),
            n_clamped=out.n_clamped,
        )

    return _drive("irl1", inst, config, x0, step, info)


def run_aairl1(inst, config=SolveConfig(), x0=None, info=None):
    """Anderson mixing on the x block; eps follows its own geometric decay."""
    window = AndersonWindow(config.depth_m)

    def step(k, x, eps, eps_next, info):
        out = apply_map(inst, info, IterateState(x, eps, k), config.mu, debug=config.debug_checks)
        window.push(out.h_x, out.residual)
        chi = chi_measure(x, out.grad, _chi_weights(inst, config, out.weights))
        resid = float(np.linalg.norm(out.residual))
        try:
            mw = solve_alpha(window, config.tikhonov_scale)
        except ResidualsVanished:
            return _Step(x_next=x.copy(), kind="AA", resid_norm=resid, chi=chi,
                         alpha_l1=1.0, accepted=True, n_clamped=out.n_clamped, converged=True)
        return _Step(
            x_next=mix(window, mw), kind="AA", resid_norm=resid, chi=chi,
            alpha_l1=mw.alpha_l1, accepted=True, n_clamped=out.n_clamped,
        )

    return _drive("aairl1", inst, config, x0, step, info)


def run_guard_aairl1(inst, config=SolveConfig(), x0=None, info=None):
    """Anderson-accelerated IRL1 with a nonmonotone acceptance test.

    The mixed candidate is taken only if its relaxed objective lies
    ``beta * chi`` below the reference value ``E``; otherwise the plain step
    is used.
    """
    window = AndersonWindow(config.depth_m)
    acc = None

    def step(k, x, eps, eps_next, info):
        nonlocal acc
        if acc is None:
            acc = GuardAccumulator(E=relaxed_objective(inst, x, eps), J=1.0,
                                   eta=config.eta, beta=config.beta)
        out = apply_map(inst, info, IterateState(x, eps, k), config.mu, debug=config.debug_checks)
        window.push(out.h_x, out.residual)
        chi = chi_measure(x, out.grad, _chi_weights(inst, config, out.weights))
        resid = float(np.linalg.norm(out.residual))
        try:
            mw = solve_alpha(window, config.tikhonov_scale)
            x_aa = mix(window, mw)
            alpha_l1 = mw.alpha_l1
        except ResidualsVanished:
            # every stored residual is zero, so x is already a fixed point of H_x
            acc.update(relaxed_objective(inst, out.h_x, eps_next))
            return _Step(x_next=out.h_x, kind="UA", resid_norm=resid, chi=chi,
                         alpha_l1=1.0, E=acc.E, n_clamped=out.n_clamped, converged=True)
        F_aa = relaxed_objective(inst, x_aa, eps_next)
        if math.isfinite(F_aa) and acc.accept(F_aa, chi):
            x_next, F_next, kind, ok = x_aa, F_aa, "AA", True
        else:
            x_next, kind, ok = out.h_x, "UA", False
            F_next = relaxed_objective(inst, x_next, eps_next)
        acc.update(F_next)
        return _Step(
            x_next=x_next, kind=kind, resid_norm=resid, chi=chi, alpha_l1=alpha_l1,
            accepted=ok, E=acc.E, n_clamped=out.n_clamped, F_relaxed_next=F_next,
        )

    return _drive("guard_aairl1", inst, config, x0, step, info)


def irl2_weights(x, eps, p):
    """Smoothed l_p weights ``(p/2) (x^2 + eps^2)^(p/2 - 1)``, clamped like the l1 weights."""
    with np.errstate(divide="ignore", over="ignore"):
        w = 0.5 * p * (x * x + eps * eps) ** (0.5 * p - 1.0)
    over = ~(w <= WEIGHT_CLAMP)
    return np.where(over, WEIGHT_CLAMP, w), int(np.count_nonzero(over))


def irl2_step(x, g, w, lam, L):
    """Minimizer of ``g'z + L/2 ||z - x||^2 + lam sum w_i z_i^2``, coordinatewise."""
    return (L * x - g) / (L + 2.0 * lam * w)


def run_irl2(inst, config=SolveConfig(), x0=None, info=None):
    """Iteratively reweighted l2 baseline for the LPN penalty; iterates stay dense."""
    if inst.reg.family is not Family.LPN:
        raise ContractViolation("the IRL2 baseline is defined for the LPN penalty only")
    p = inst.reg.p

    def step(k, x, eps, eps_next, info):
        g = smooth_gradient(inst, x)
        w, nc = irl2_weights(x, eps, p)
        x_next = irl2_step(x, g, w, inst.lam, info.L)
        w1, _ = _kernels.backend.weights(int(inst.reg.family), p, x, eps)
        return _Step(
            x_next=x_next, kind="UA", resid_norm=float(np.linalg.norm(x_next - x)),
            chi=chi_measure(x, g, _chi_weights(inst, config, w1)), n_clamped=nc,
        )

    return _drive("irl2", inst, config, x0, step, info)


def nesterov_coefficient(k):
    return 0.0 if k == 0 else (k - 1.0) / (k + 2.0)


def run_nesirl1(inst, config=SolveConfig(), x0=None, info=None):
    """IRL1 with Nesterov-type extrapolation; the reweighted step is taken at ``y^k``.

    ``resid_norm`` and ``chi`` in the trace refer to the extrapolated point.
    """
    prev = {"x": None}

    def step(k, x, eps, eps_next, info):
        x_prev = x if prev["x"] is None else prev["x"]
        y = x + nesterov_coefficient(k) * (x - x_prev)
        out = apply_map(inst, info, IterateState(y, eps, k), config.mu, debug=config.debug_checks)
        prev["x"] = x
        return _Step(
            x_next=out.h_x, kind="UA", resid_norm=float(np.linalg.norm(out.residual)),
            chi=chi_measure(y, out.grad, _chi_weights(inst, config, out.weights)),
            n_clamped=out.n_clamped,
        )

    return _drive("nesirl1", inst, config, x0, step, info)


SOLVERS = {
    "irl1": run_irl1,
    "irl2": run_irl2,
    "aairl1": run_aairl1,
    "guard_aairl1": run_guard_aairl1,
    "nesirl1": run_nesirl1,
}


def solve(name, inst, config=SolveConfig(), x0=None, info=None):
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise ContractViolation("unknown solver %r (choose from %s)" % (name, ", ".join(SOLVERS))) from None
    return fn(inst, config, x0=x0, info=info)


def config_fields():
    return [f.name for f in fields(SolveConfig)]
