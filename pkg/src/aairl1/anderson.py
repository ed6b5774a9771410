"""Windowed Anderson mixing of fixed-point outputs.

The window keeps the last ``m + 1`` map outputs and their residuals, oldest
first.  Mixing weights solve

    min ||R a||  subject to  sum(a) = 1

through the normal equations, with a Tikhonov term proportional to the
squared Frobenius norm of ``R`` keeping the Gram matrix invertible.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, ResidualsVanished

TIKHONOV_SCALE = 1e-10


@dataclass
class MixWeights:
    alpha: np.ndarray
    objective: float
    alpha_l1: float


class AndersonWindow:
    """Ring buffer of aligned ``(H_x, r)`` pairs with capacity ``depth_m + 1``."""

    def __init__(self, depth_m):
        depth_m = int(depth_m)
        if depth_m < 1:
            raise ContractViolation("mixing depth must be >= 1, got %r" % depth_m)
        self.depth_m = depth_m
        self.h_history = deque(maxlen=depth_m + 1)
        self.r_history = deque(maxlen=depth_m + 1)
        self.k = 0
        self._n = None

    def __len__(self):
        return len(self.h_history)

    def push(self, h_x, residual):
        h_x = np.asarray(h_x, dtype=np.float64)
        residual = np.asarray(residual, dtype=np.float64)
        if h_x.ndim != 1 or h_x.shape != residual.shape:
            raise ContractViolation("h_x and residual must be 1-D vectors of equal length")
        if self._n is None:
            self._n = h_x.shape[0]
        elif h_x.shape[0] != self._n:
            raise ContractViolation("vector length %d differs from window length %d" % (h_x.shape[0], self._n))
        self.h_history.append(h_x)
        self.r_history.append(residual)
        self.k += 1
        return self

    def residual_matrix(self):
        """``n x (m_k + 1)`` matrix of residuals, oldest column first."""
        return np.column_stack(self.r_history)

    def clear(self):
        self.h_history.clear()
        self.r_history.clear()


def solve_alpha_matrix(R, tikhonov_scale=TIKHONOV_SCALE):
    """Affine mixing weights for a residual matrix ``R`` (columns are residuals)."""
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[1] < 1:
        raise ContractViolation("residual matrix must have at least one column")
    if tikhonov_scale < 0:
        raise ContractViolation("tikhonov_scale must be nonnegative")
    cols = R.shape[1]
    if cols == 1:
        alpha = np.ones(1)
        obj = float(np.linalg.norm(R[:, 0]))
        return MixWeights(alpha=alpha, objective=obj, alpha_l1=1.0)
    G = R.T @ R
    fro2 = float(np.trace(G))
    if fro2 == 0.0:
        raise ResidualsVanished("all residuals in the window are zero")
    G[np.diag_indices(cols)] += tikhonov_scale * fro2
    ones = np.ones(cols)
    try:
        z = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G, check_finite=False), ones, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        z = np.linalg.lstsq(G, ones, rcond=None)[0]
    s = float(z.sum())
    if s == 0.0 or not np.isfinite(s):
        raise ResidualsVanished("Gram system is numerically singular")
    alpha = z / s
    return MixWeights(
        alpha=alpha,
        objective=float(np.linalg.norm(R @ alpha)),
        alpha_l1=float(np.abs(alpha).sum()),
    )


def solve_alpha(window, tikhonov_scale=TIKHONOV_SCALE):
    if len(window) == 0:
        raise ContractViolation("cannot solve for weights on an empty window")
    return solve_alpha_matrix(window.residual_matrix(), tikhonov_scale)


def mix(window, weights):
    alpha = weights.alpha if isinstance(weights, MixWeights) else np.asarray(weights, dtype=np.float64)
    if alpha.shape != (len(window),):
        raise ContractViolation("weights length %d does not match window length %d" % (alpha.size, len(window)))
    if alpha.shape[0] == 1 and alpha[0] == 1.0:
        return window.h_history[0].copy()
    return np.column_stack(window.h_history) @ alpha
