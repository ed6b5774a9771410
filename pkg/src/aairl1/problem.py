"""Least-squares data model ``f(x) = 0.5 ||Ax - b||^2`` with a concave penalty.

The full objective is ``f(x) + lam * sum phi(|x_i|)``; the relaxed objective
shifts every magnitude by a perturbation ``eps_i >= 0`` so it is continuously
differentiable away from the origin.
"""

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation
from .regularizers import RegularizerSpec, phi_sum, weights

INSTANCE_SCHEMA = 1


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Immutable problem data; arrays are stored read-only."""

    A: np.ndarray
    b: np.ndarray
    lam: float
    reg: RegularizerSpec
    seed: int = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ContractViolation("A must be a nonempty 2-D matrix, got shape %s" % (A.shape,))
        if b.ndim != 1 or b.shape[0] != A.shape[0]:
            raise ContractViolation("b must have length m=%d, got shape %s" % (A.shape[0], b.shape))
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ContractViolation("A and b must have finite entries")
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0):
            raise ContractViolation("lambda must be positive, got %r" % self.lam)
        if not isinstance(self.reg, RegularizerSpec):
            raise ContractViolation("reg must be a RegularizerSpec")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "lam", lam)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class SmoothnessInfo:
    L_f: float
    L: float

    def __post_init__(self):
        if not (self.L_f > 0 and self.L >= self.L_f):
            raise ContractViolation("need L >= L_f > 0, got L_f=%r, L=%r" % (self.L_f, self.L))


def _check_vec(inst, x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (inst.n,):
        raise ContractViolation("%s must have shape (%d,), got %s" % (name, inst.n, x.shape))
    return x


def smooth_value(inst, x):
    x = _check_vec(inst, x)
    r = inst.A @ x - inst.b
    return 0.5 * float(r @ r)


def smooth_gradient(inst, x):
    x = _check_vec(inst, x)
    return inst.A.T @ (inst.A @ x - inst.b)


def value_and_gradient(inst, x):
    """``(f(x), grad f(x))`` sharing one residual evaluation."""
    x = _check_vec(inst, x)
    r = inst.A @ x - inst.b
    return 0.5 * float(r @ r), inst.A.T @ r


def objective_value(inst, x):
    x = _check_vec(inst, x)
    return smooth_value(inst, x) + inst.lam * phi_sum(inst.reg, np.abs(x))


def relaxed_objective(inst, x, eps):
    x = _check_vec(inst, x)
    eps = _check_vec(inst, eps, "eps")
    if np.any(eps < 0):
        raise ContractViolation("eps must be componentwise nonnegative")
    return smooth_value(inst, x) + inst.lam * phi_sum(inst.reg, np.abs(x) + eps)


def surrogate_value(inst, L, x, x_ref, eps_ref):
    """Convex model minimized by one reweighted step, anchored at ``x_ref``.

    ``grad_f(x_ref)' x + L/2 ||x - x_ref||^2 + lam * sum w_i |x_i|`` with the
    weights frozen at ``(x_ref, eps_ref)``.  Only test oracles use this.
    """
    if not L > 0:
        raise ContractViolation("L must be positive")
    x = _check_vec(inst, x)
    x_ref = _check_vec(inst, x_ref, "x_ref")
    eps_ref = _check_vec(inst, eps_ref, "eps_ref")
    g = smooth_gradient(inst, x_ref)
    w, _ = weights(inst.reg, x_ref, eps_ref)
    d = x - x_ref
    return float(g @ x) + 0.5 * L * float(d @ d) + inst.lam * float(w @ np.abs(x))


def estimate_lipschitz(inst, rtol=1e-8, max_iter=1000, seed=0):
    """Largest eigenvalue of ``A'A`` by power iteration.

    Iterates on whichever of ``A'A`` and ``AA'`` is smaller (same nonzero
    spectrum).  ``L`` is ``max(L_f, 1)`` inflated by one part in a million so
    the majorant is strict.
    """
    A = np.asarray(inst.A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise ContractViolation("A has non-finite entries")
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    v = np.random.default_rng(seed).standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam_est = 0.0
    for _ in range(max_iter):
        w = G @ v
        new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            lam_est = 0.0
            break
        v = w / nrm
        if abs(new - lam_est) <= rtol * abs(new):
            lam_est = new
            break
        lam_est = new
    if not lam_est > 0:
        raise ContractViolation("A'A has no positive eigenvalue (A is zero)")
    return SmoothnessInfo(L_f=lam_est, L=max(lam_est, 1.0) * (1.0 + 1e-6))


# instance files ---------------------------------------------------------------

def _atomic_write_text(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp%d" % os.getpid())
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(a):
    a = np.atleast_2d(a)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a)


def save_instance(inst, directory, x_true=None, extra=None):
    """Write ``header.json``, ``A.csv`` (one row per line), ``b.csv`` and optionally ``x_true.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(d / "A.csv", _csv_text(inst.A))
    _atomic_write_text(d / "b.csv", _csv_text(inst.b[:, None]))
    header = {
        "schema": INSTANCE_SCHEMA,
        "m": inst.m,
        "n": inst.n,
        "lambda": inst.lam,
        "regularizer": inst.reg.name,
        "p": inst.reg.p,
        "seed": inst.seed,
    }
    if x_true is not None:
        _atomic_write_text(d / "x_true.csv", _csv_text(np.asarray(x_true)[:, None]))
        header["x_true"] = "x_true.csv"
    if extra:
        header.update(extra)
    _atomic_write_text(d / "header.json", json.dumps(header, indent=2) + "\n")
    return d


def load_instance(directory):
    """Inverse of :func:`save_instance`; returns ``(instance, x_true or None)``."""
    d = Path(directory)
    header = json.loads((d / "header.json").read_text())
    if header.get("schema") != INSTANCE_SCHEMA:
        raise ContractViolation("unsupported instance schema %r" % header.get("schema"))
    A = np.loadtxt(d / "A.csv", delimiter=",", ndmin=2)
    b = np.loadtxt(d / "b.csv", delimiter=",", ndmin=1)
    if A.shape != (header["m"], header["n"]):
        raise ContractViolation("A.csv shape %s disagrees with header" % (A.shape,))
    inst = ProblemInstance(
        A=A, b=b, lam=header["lambda"],
        reg=RegularizerSpec.from_name(header["regularizer"], header["p"]),
        seed=header.get("seed"),
    )
    x_true = None
    if header.get("x_true"):
        x_true = np.loadtxt(d / header["x_true"], delimiter=",", ndmin=1)
    return inst, x_true
