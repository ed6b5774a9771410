"""Per-coordinate kernels used by every solver iteration.

Two interchangeable implementations live here: numba-compiled loops and plain
numpy expressions.  The numba path is used when numba imports cleanly unless
``AAIRL1_DISABLE_NUMBA`` is set to a truthy value in the environment before
this module is first imported.  Both paths evaluate the same formulas in the
same per-coordinate order; only the reduction in :func:`phi_sum` may differ in
the last bits (numpy sums pairwise, the loop sums left to right).

Without SVML the compiled loops call scalar ``pow``/``exp``, which loses to
numpy's SIMD ufuncs once vectors get long.  The weight and penalty kernels
therefore switch to numpy above ``TRANSCENDENTAL_CUTOFF`` coordinates even on
the numba path; the branchy prox and chi kernels stay compiled at every size.
"""

import os

import numpy as np

EXP, LPN, LOG, FRA, TAN = range(5)

WEIGHT_CLAMP = 1e12

# measured crossover for the pow/exp loops on a single core (benchmarks/bench_kernels.py)
TRANSCENDENTAL_CUTOFF = 256


def _env_disabled():
    return os.environ.get("AAIRL1_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


try:
    if _env_disabled():
        raise ImportError("numba disabled by AAIRL1_DISABLE_NUMBA")
    import numba
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


# numpy path -------------------------------------------------------------------

def _np_weights(family, p, x, eps, clamp):
    t = np.abs(x) + eps
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if family == EXP:
            w = p * np.exp(-p * t)
        elif family == LPN:
            w = p * t ** (p - 1.0)
        elif family == LOG:
            w = p / (1.0 + p * t)
        elif family == FRA:
            w = p / ((t + p) * (t + p))
        elif family == TAN:
            w = p / (1.0 + p * p * t * t)
        else:
            raise ValueError("unknown regularizer family code %r" % family)
    over = ~(w <= clamp)  # catches inf and nan from the pole
    n_clamped = int(np.count_nonzero(over))
    if n_clamped:
        w = np.where(over, clamp, w)
    return w, n_clamped


def _np_phi_sum(family, p, t):
    if family == EXP:
        v = -np.expm1(-p * t)
    elif family == LPN:
        v = t ** p
    elif family == LOG:
        v = np.log1p(p * t)
    elif family == FRA or family == TAN:
        v = t / (t + p)
    else:
        raise ValueError("unknown regularizer family code %r" % family)
    return float(np.sum(v))


def _np_prox(x, g, w, lam, L):
    lo = (g - lam * w) / L
    hi = (g + lam * w) / L
    return np.where(x < lo, x - lo, np.where(x > hi, x - hi, 0.0))


def _np_chi(x, g, w):
    if x.size == 0:
        return 0.0
    nz = np.abs(g + w * np.sign(x))
    z = np.maximum(np.abs(g) - w, 0.0)
    return float(np.max(np.where(x != 0.0, nz, z)))


# numba path -------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_weights(family, p, x, eps, clamp):
        n = x.shape[0]
        w = np.empty(n)
        n_clamped = 0
        for i in range(n):
            t = abs(x[i]) + eps[i]
            if family == EXP:
                v = p * np.exp(-p * t)
            elif family == LPN:
                if t == 0.0:
                    v = np.inf
                else:
                    v = p * t ** (p - 1.0)
            elif family == LOG:
                v = p / (1.0 + p * t)
            elif family == FRA:
                v = p / ((t + p) * (t + p))
            else:
                v = p / (1.0 + p * p * t * t)
            if not (v <= clamp):
                v = clamp
                n_clamped += 1
            w[i] = v
        return w, n_clamped

    @njit(cache=True)
    def _nb_phi_sum(family, p, t):
        s = 0.0
        for i in range(t.shape[0]):
            ti = t[i]
            if family == EXP:
                s -= np.expm1(-p * ti)
            elif family == LPN:
                s += ti ** p
            elif family == LOG:
                s += np.log1p(p * ti)
            else:
                s += ti / (ti + p)
        return s

    @njit(cache=True)
    def _nb_prox(x, g, w, lam, L):
        n = x.shape[0]
        out = np.empty(n)
        for i in range(n):
            lo = (g[i] - lam * w[i]) / L
            hi = (g[i] + lam * w[i]) / L
            if x[i] < lo:
                out[i] = x[i] - lo
            elif x[i] > hi:
                out[i] = x[i] - hi
            else:
                out[i] = 0.0
        return out

    @njit(cache=True)
    def _nb_chi(x, g, w):
        best = 0.0
        for i in range(x.shape[0]):
            if x[i] > 0.0:
                d = abs(g[i] + w[i])
            elif x[i] < 0.0:
                d = abs(g[i] - w[i])
            else:
                d = abs(g[i]) - w[i]
                if d < 0.0:
                    d = 0.0
            if d > best:
                best = d
        return best


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


class _Backend:
    """Dispatch table; ``use_numba`` can be flipped at runtime by tests and benchmarks."""

    def __init__(self, use_numba):
        self.use_numba = use_numba and HAS_NUMBA

    @property
    def name(self):
        return "numba" if self.use_numba else "numpy"

    def weights(self, family, p, x, eps, clamp=WEIGHT_CLAMP):
        if self.use_numba and np.size(x) < TRANSCENDENTAL_CUTOFF:
            w, c = _nb_weights(int(family), float(p), _as_f64(x), _as_f64(eps), float(clamp))
            return w, int(c)
        return _np_weights(family, p, _as_f64(x), _as_f64(eps), clamp)

    def phi_sum(self, family, p, t):
        if family not in (EXP, LPN, LOG, FRA, TAN):
            raise ValueError("unknown regularizer family code %r" % family)
        if self.use_numba and np.size(t) < TRANSCENDENTAL_CUTOFF:
            return float(_nb_phi_sum(int(family), float(p), _as_f64(t)))
        return _np_phi_sum(family, p, _as_f64(t))

    def prox(self, x, g, w, lam, L):
        if self.use_numba:
            return _nb_prox(_as_f64(x), _as_f64(g), _as_f64(w), float(lam), float(L))
        return _np_prox(_as_f64(x), _as_f64(g), _as_f64(w), lam, L)

    def chi(self, x, g, w):
        if self.use_numba:
            return float(_nb_chi(_as_f64(x), _as_f64(g), _as_f64(w)))
        return _np_chi(_as_f64(x), _as_f64(g), _as_f64(w))


backend = _Backend(use_numba=HAS_NUMBA)


def use_numba(flag):
    """Switch the active backend; returns the previous setting."""
    prev = backend.use_numba
    backend.use_numba = bool(flag) and HAS_NUMBA
    return prev
