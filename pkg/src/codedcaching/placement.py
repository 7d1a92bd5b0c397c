"""Placement schemes that fill user caches before any demand is known."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import seeding
from .model import CacheConfiguration, InstanceError, SystemParams, mask_dtype

__all__ = [
    'PlacementSpec',
    'UserGrouping',
    'place_old',
    'place_new',
    'place_deterministic_grouped',
    'colex_subsets',
    'place',
]

SCHEMES = ('old_random', 'new_random', 'deterministic_grouped')


@dataclass(frozen=True)
class PlacementSpec:
    scheme: str
    g: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InstanceError(f'unknown placement scheme {self.scheme!r}')
        if (self.scheme == 'deterministic_grouped') != (self.g is not None):
            raise InstanceError('g is required for deterministic_grouped and only for it')


@dataclass(frozen=True)
class UserGrouping:
    """Contiguous blocks of ``group_size`` users: users ``0..K'-1`` form group 0, and so on."""

    K: int
    group_size: int

    def __post_init__(self):
        if self.group_size < 1 or self.K % self.group_size:
            raise InstanceError(f'group size {self.group_size} does not divide K={self.K}')

    @property
    def n_groups(self):
        return self.K // self.group_size

    def group_of(self, user):
        return user // self.group_size

    @property
    def assignment(self):
        return tuple(self.group_of(k) for k in range(self.K))

    def members(self, group):
        return range(group * self.group_size, (group + 1) * self.group_size)


def _empty_store(params):
    dtype = mask_dtype(params.K)
    if dtype is object:
        return np.zeros((params.N, params.F), dtype=object)
    return np.zeros((params.N, params.F), dtype=np.uint64)


def _bit(params, k):
    return np.uint64(1 << k) if params.K <= 64 else 1 << k


def place_old(params: SystemParams, seed) -> CacheConfiguration:
    """Each user caches a uniform ``M*F/N``-subset of every file's packets.

    Draws for user ``k`` come from stream ``(seed, k)``, so the result does
    not depend on the order in which users are filled.
    """
    quota = params.M * params.F / params.N
    if quota.denominator != 1:
        raise InstanceError(
            f'M*F/N = {quota} is not an integer; choose F as a multiple of {quota.denominator}')
    quota = int(quota)
    store = _empty_store(params)
    rows = np.arange(params.N)[:, None]
    for k in range(params.K):
        if quota == 0:
            break
        rng = seeding.generator(seed, k)
        chosen = np.argsort(rng.random((params.N, params.F)), axis=1)[:, :quota]
        store[rows, chosen] |= _bit(params, k)
    return CacheConfiguration(params, store, 'old_random')


def place_new(params: SystemParams, seed) -> CacheConfiguration:
    """Each user caches exactly one uniformly chosen packet from every group of every file.

    Packet ``f`` belongs to group ``f // ceil(N/M)``.
    """
    if params.F_prime is None:
        raise InstanceError('new placement needs grouped params (use SystemParams.grouped)')
    c = params.group_size
    store = _empty_store(params)
    rows = np.arange(params.N)[:, None]
    base = np.arange(params.F_prime)[None, :] * c
    for k in range(params.K):
        rng = seeding.generator(seed, k)
        pick = base + rng.integers(c, size=(params.N, params.F_prime))
        store[rows, pick] |= _bit(params, k)
    return CacheConfiguration(params, store, 'new_random')


def colex_subsets(n, g):
    """All ``g``-subsets of ``range(n)`` in colexicographic order."""
    return sorted(itertools.combinations(range(n), g), key=lambda s: s[::-1])


def place_deterministic_grouped(params: SystemParams, g: int):
    """Deterministic subset placement applied per user group.

    Users are split into groups of ``K' = g * ceil(N/M)``.  Every file has
    ``F = C(K', g)`` packets; packet ``p`` corresponds to the ``p``-th
    ``g``-subset (colex order) and is cached, inside every group, by the
    group members at those positions.

    Returns
    -------
    config : CacheConfiguration
    grouping : UserGrouping
    """
    if g < 1:
        raise InstanceError(f'need g >= 1, got {g}')
    c = params.group_size
    group_size = g * c
    grouping = UserGrouping(params.K, group_size)
    if params.F != math.comb(group_size, g):
        raise InstanceError(f'need F = C({group_size}, {g}) = {math.comb(group_size, g)}, got {params.F}')
    if Fraction(g) > group_size * params.M / params.N:
        raise InstanceError(f'g={g} exceeds K\'M/N; per-user memory would overflow')
    subsets = colex_subsets(group_size, g)
    masks = []
    for s in subsets:
        m = 0
        for b in range(grouping.n_groups):
            for pos in s:
                m |= 1 << (b * group_size + pos)
        masks.append(m)
    store = np.tile(np.array(masks, dtype=mask_dtype(params.K)), (params.N, 1))
    return CacheConfiguration(params, store, f'deterministic_grouped(g={g})'), grouping


def place(params, spec: PlacementSpec, seed=None):
    """Dispatch on ``spec.scheme``; returns ``(config, grouping_or_None)``."""
    seed = spec.seed if seed is None else seed
    if spec.scheme == 'old_random':
        return place_old(params, seed), None
    if spec.scheme == 'new_random':
        return place_new(params, seed), None
    return place_deterministic_grouped(params, spec.g)
