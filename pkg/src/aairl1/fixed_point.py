"""The compound reweighted-l1 map ``H(x, eps) = (H_x(x, eps), mu * eps)``."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolation, RegularizerPoleError
from .problem import value_and_gradient
from .regularizers import Family, weights

FIRST_ORDER_TOL = 1e-9


@dataclass
class IterateState:
    x: np.ndarray
    eps: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.eps = np.asarray(self.eps, dtype=np.float64)
        if self.x.shape != self.eps.shape or self.x.ndim != 1:
            raise ContractViolation("x and eps must be 1-D with equal length")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.eps))):
            raise ContractViolation("iterate has non-finite entries")
        if np.any(self.eps < 0):
            raise ContractViolation("eps must be componentwise nonnegative")


@dataclass
class MapOutput:
    h_x: np.ndarray
    eps_next: np.ndarray
    weights: np.ndarray
    residual: np.ndarray
    grad: np.ndarray = None
    f_value: float = None
    n_clamped: int = 0


def prox_step(x_i, g_i, omega_i, lam, L):
    """Minimizer over ``z`` of ``g_i z + L/2 (z - x_i)^2 + lam omega_i |z|``.

    Three cases, with ties at either threshold sent to zero.
    """
    vals = (x_i, g_i, omega_i, lam, L)
    if not all(math.isfinite(v) for v in vals):
        raise ContractViolation("prox_step inputs must be finite")
    if not (omega_i > 0 and lam > 0 and L > 0):
        raise ContractViolation("prox_step needs omega, lambda, L > 0")
    lo = (g_i - lam * omega_i) / L
    hi = (g_i + lam * omega_i) / L
    if x_i < lo:
        return x_i - lo
    if x_i > hi:
        return x_i - hi
    return 0.0


def first_order_violation(grad, x, h_x, w, lam, L):
    """Largest breach of the optimality system of the weighted-l1 subproblem at ``h_x``.

    Nonzero entries must satisfy the equation exactly; zero entries the
    interval inclusion.  Returns 0 when every coordinate is within slack.
    """
    lw = lam * w
    stat = grad + L * (h_x - x)
    nz = h_x != 0
    viol_nz = np.abs(stat + lw * np.sign(h_x))
    viol_z = np.maximum(np.abs(stat) - lw, 0.0)
    v = np.where(nz, viol_nz, viol_z)
    return float(v.max()) if v.size else 0.0


def apply_map(inst, info, state, mu, debug=False):
    """One application of ``H`` at ``state``.

    With ``debug=True`` the first-order conditions of the subproblem are
    checked at the output and a violation above ``FIRST_ORDER_TOL`` raises
    AssertionError.
    """
    if not 0 < mu < 1:
        raise ContractViolation("mu must lie in (0, 1), got %r" % mu)
    x, eps = state.x, state.eps
    if x.shape != (inst.n,):
        raise ContractViolation("state dimension %s does not match n=%d" % (x.shape, inst.n))
    if inst.reg.family is Family.LPN and np.any((np.abs(x) + eps) == 0):
        raise RegularizerPoleError("LPN weight pole: some |x_i| + eps_i == 0")
    f, g = value_and_gradient(inst, x)
    w, n_clamped = weights(inst.reg, x, eps)
    h = _kernels.backend.prox(x, g, w, inst.lam, info.L)
    if debug:
        viol = first_order_violation(g, x, h, w, inst.lam, info.L)
        if viol > FIRST_ORDER_TOL:
            raise AssertionError("first-order check failed: violation %.3e" % viol)
    return MapOutput(
        h_x=h, eps_next=mu * eps, weights=w, residual=h - x,
        grad=g, f_value=f, n_clamped=n_clamped,
    )
