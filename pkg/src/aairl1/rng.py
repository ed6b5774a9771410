"""Seed expansion into independent, named random streams.

A single integer seed is turned into one Philox (counter-based) generator per
draw category.  The stream index of each category is fixed, so adding draws
to one category never perturbs another::

    A = 0, support = 1, signs = 2, noise = 3, x0 = 4
"""

import numpy as np

STREAMS = {"A": 0, "support": 1, "signs": 2, "noise": 3, "x0": 4}


def stream(seed, name):
    if name not in STREAMS:
        raise KeyError("unknown random stream %r" % name)
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name],))
    return np.random.Generator(np.random.Philox(ss))


def initial_point(n, seed):
    """Standard Gaussian starting point drawn from the ``x0`` stream."""
    return stream(seed, "x0").standard_normal(n)
