"""Seed streams.

All randomness comes from Philox (a counter-based generator) keyed by a
``numpy.random.SeedSequence``.  A stream is identified by a root seed and a
path of integer labels, so draws do not depend on the order in which
streams are consumed.

``split(seed, i)`` is the per-trial seed: the first 64-bit word of
``SeedSequence(seed, spawn_key=(TRIAL, i))``.  Inside a trial, placement
for user group ``b`` and user ``k`` draws from ``(seed_i, PLACEMENT, b, k)``,
pull-down from ``(seed_i, PULL_DOWN, b)`` and a resampled demand from
``(seed_i, DEMAND)``.
"""

import numpy as np

PLACEMENT = 0
DEMAND = 1
PULL_DOWN = 2
TRIAL = 3


def as_seedseq(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def child(seed, *labels):
    ss = as_seedseq(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(labels))


def generator(seed, *labels):
    return np.random.Generator(np.random.Philox(child(seed, *labels)))


def split(seed, i):
    return int(child(seed, TRIAL, i).generate_state(1, np.uint64)[0])
