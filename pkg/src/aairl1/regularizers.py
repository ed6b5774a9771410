"""Concave sparsity penalties phi and their reweighting functions.

Each family is a smooth, concave, strictly increasing function on
``[0, inf)`` with ``phi(0) = 0``; the iteratively reweighted l1 scheme only
ever consumes its derivative, evaluated at ``|x_i| + eps_i``::

    family   phi(t)            weight(t) = phi'(t)
    EXP      1 - exp(-p t)     p exp(-p t)
    LPN      t**p              p t**(p-1)          (0 < p < 1)
    LOG      log(1 + p t)      p / (1 + p t)
    FRA      t / (t + p)       p / (t + p)**2
    TAN      t / (t + p)       p / (1 + p**2 t**2)

The TAN row pairs the FRA value with an arctangent-type weight; both columns
are kept as tabulated, so ``phi_value`` and ``weight`` are not a
derivative pair for TAN.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolation, RegularizerPoleError

WEIGHT_CLAMP = _kernels.WEIGHT_CLAMP


class Family(enum.IntEnum):
    EXP = _kernels.EXP
    LPN = _kernels.LPN
    LOG = _kernels.LOG
    FRA = _kernels.FRA
    TAN = _kernels.TAN

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise ContractViolation(
                "unknown regularizer %r (expected one of exp, lpn, log, fra, tan)" % (name,)
            ) from None


@dataclass(frozen=True)
class RegularizerSpec:
    family: Family
    p: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        p = float(self.p)
        if not math.isfinite(p) or p <= 0:
            raise ContractViolation("regularizer hyperparameter p must be positive, got %r" % self.p)
        if self.family is Family.LPN and not p < 1:
            raise ContractViolation("LPN requires 0 < p < 1, got %r" % self.p)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_name(cls, name, p):
        return cls(Family.parse(name), p)

    @property
    def name(self):
        return self.family.name.lower()


def phi_value(spec, t):
    """Penalty value at a single nonnegative magnitude ``t``."""
    t = float(t)
    if not t >= 0:
        raise ContractViolation("phi_value needs t >= 0, got %r" % t)
    p = spec.p
    fam = spec.family
    if fam is Family.EXP:
        return -math.expm1(-p * t)
    if fam is Family.LPN:
        return t ** p
    if fam is Family.LOG:
        return math.log1p(p * t)
    return t / (t + p)


def weight(spec, x_abs, eps):
    """Reweighting coefficient ``phi'(x_abs + eps)``.

    Raises RegularizerPoleError for LPN at ``x_abs + eps == 0``.  Finite
    values above ``WEIGHT_CLAMP`` are returned clamped.
    """
    x_abs = float(x_abs)
    eps = float(eps)
    if not (x_abs >= 0 and eps >= 0):
        raise ContractViolation("weight needs x_abs >= 0 and eps >= 0, got %r, %r" % (x_abs, eps))
    t = x_abs + eps
    p = spec.p
    fam = spec.family
    if fam is Family.EXP:
        w = p * math.exp(-p * t)
    elif fam is Family.LPN:
        if t == 0.0:
            raise RegularizerPoleError("LPN weight diverges at |x| + eps = 0; keep eps > 0")
        w = p * t ** (p - 1.0)
    elif fam is Family.LOG:
        w = p / (1.0 + p * t)
    elif fam is Family.FRA:
        w = p / ((t + p) * (t + p))
    else:
        w = p / (1.0 + p * p * t * t)
    return min(w, WEIGHT_CLAMP)


def weights(spec, x, eps):
    """Vectorized :func:`weight`; returns ``(w, n_clamped)``.

    Unlike the scalar form this never raises at the LPN pole: such entries
    are clamped and counted in ``n_clamped``.
    """
    return _kernels.backend.weights(int(spec.family), spec.p, x, eps, WEIGHT_CLAMP)


def phi_sum(spec, t):
    """``sum_i phi(t_i)`` for a nonnegative magnitude vector."""
    t = np.asarray(t, dtype=np.float64)
    if t.size and not np.all(t >= 0):
        raise ContractViolation("phi_sum needs nonnegative magnitudes")
    return _kernels.backend.phi_sum(int(spec.family), spec.p, t)
