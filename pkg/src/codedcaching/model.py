"""Problem instance, cache state, demands and transmission plans.

Indices are 0-based throughout the Python API: users ``0..K-1``, files
``0..N-1`` and packets ``0..F-1``.  A packet's user-set is a bitmask in which
bit ``k`` is set when user ``k`` caches the packet.  Serialized forms (JSON
documents) use 1-based numbering, so bit ``k-1`` of a hex mask stands for
user ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    'InstanceError',
    'CapabilityError',
    'SystemParams',
    'PacketId',
    'Node',
    'CacheConfiguration',
    'DemandVector',
    'SideInfoView',
    'TransmissionPlan',
    'build_side_info_view',
    'is_clique',
    'check_decodable',
    'verify_decodable',
    'mask_users',
    'popcount',
]

# largest K whose user-sets fit a native uint64 mask
MAX_NATIVE_USERS = 64


class InstanceError(ValueError):
    """Raised for inconsistent or infeasible problem instances."""


class CapabilityError(RuntimeError):
    """Raised when an exact/enumerative routine is asked to run past its size limit."""


def _as_number(x):
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float) and x.is_integer():
        return Fraction(int(x))
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**6)
    raise TypeError(f'cache size must be a real number, got {x!r}')


@dataclass(frozen=True)
class SystemParams:
    """A coded-caching instance.

    Parameters
    ----------
    K : int
        Number of users.
    N : int
        Number of files in the library.
    M : int or Fraction
        Cache size per user, in files.
    F : int
        Packets per file.
    F_prime : int, optional
        Number of packet groups.  Set only for the grouped (new) random
        placement, where ``F == group_size * F_prime``.
    """

    K: int
    N: int
    M: Fraction
    F: int
    F_prime: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'M', _as_number(self.M))
        if self.K < 1 or self.N < 1:
            raise InstanceError(f'need K >= 1 and N >= 1, got K={self.K}, N={self.N}')
        if not 0 <= self.M <= self.N:
            raise InstanceError(f'need 0 <= M <= N, got M={self.M}, N={self.N}')
        if self.F < 1:
            raise InstanceError(f'need F >= 1, got F={self.F}')
        if self.F_prime is not None:
            if self.M == 0:
                raise InstanceError('grouped placement needs M >= 1 (ceil(N/M) undefined at M=0)')
            if self.F_prime < 1 or self.F != self.group_size * self.F_prime:
                raise InstanceError(
                    f'grouped mode needs F = ceil(N/M) * F_prime, got F={self.F}, '
                    f'ceil(N/M)={self.group_size}, F_prime={self.F_prime}')

    @classmethod
    def grouped(cls, K, N, M, F_prime):
        """Instance in new-placement mode with ``F = ceil(N/M) * F_prime``."""
        M = _as_number(M)
        if M <= 0:
            raise InstanceError('grouped placement needs M > 0')
        return cls(K, N, M, math.ceil(Fraction(N) / M) * F_prime, F_prime)

    @property
    def group_size(self) -> int:
        """Packets per group, ``ceil(N/M)``."""
        if self.M == 0:
            raise InstanceError('group size undefined at M=0')
        return math.ceil(Fraction(self.N) / self.M)

    @property
    def t(self) -> float:
        """Target gain: ``K/ceil(N/M)`` in grouped mode, ``K*M/N`` otherwise."""
        if self.F_prime is not None:
            return self.K / self.group_size
        return float(self.K * self.M / self.N)

    def with_users(self, K):
        return SystemParams(K, self.N, self.M, self.F, self.F_prime)

    def to_dict(self):
        return {'K': self.K, 'N': self.N, 'M': str(self.M), 'F': self.F,
                'F_prime': self.F_prime}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d['K']), int(d['N']), Fraction(d['M']), int(d['F']),
                   None if d.get('F_prime') is None else int(d['F_prime']))


class PacketId(NamedTuple):
    file: int
    packet: int


class Node(NamedTuple):
    """A requested packet: user ``user`` wants packet ``packet`` of ``file``."""

    user: int
    file: int
    packet: int

    @property
    def packet_id(self) -> PacketId:
        return PacketId(self.file, self.packet)


def mask_users(mask) -> list[int]:
    """Users whose bit is set in ``mask``, ascending."""
    mask = int(mask)
    users = []
    while mask:
        low = mask & -mask
        users.append(low.bit_length() - 1)
        mask ^= low
    return users


def popcount(mask) -> int:
    return int(mask).bit_count()


def mask_dtype(K):
    return np.uint64 if K <= MAX_NATIVE_USERS else object


class CacheConfiguration:
    """Which caches hold which packet.

    ``store[n, f]`` is the user-set mask of packet ``f`` of file ``n``.  For
    ``K <= 64`` the array has dtype ``uint64``; larger systems fall back to
    an object array of Python ints.  The array is made read-only.
    """

    def __init__(self, params: SystemParams, store, origin: str):
        store = np.asarray(store, dtype=mask_dtype(params.K))
        if store.shape != (params.N, params.F):
            raise InstanceError(f'store shape {store.shape} != (N, F) = {(params.N, params.F)}')
        store.flags.writeable = False
        self.params = params
        self.store = store
        self.origin = origin

    def __repr__(self):
        p = self.params
        return f'CacheConfiguration(K={p.K}, N={p.N}, M={p.M}, F={p.F}, origin={self.origin!r})'

    def __eq__(self, other):
        if not isinstance(other, CacheConfiguration):
            return NotImplemented
        return (self.params == other.params and self.origin == other.origin
                and np.array_equal(self.store, other.store))

    __hash__ = None

    def user_set(self, file, packet) -> int:
        return int(self.store[file, packet])

    def caches(self, user, file, packet) -> bool:
        return bool((int(self.store[file, packet]) >> user) & 1)

    def occupancy(self):
        """Array ``(K, N)`` with the number of packets of each file cached by each user."""
        K = self.params.K
        out = np.zeros((K, self.params.N), dtype=np.int64)
        if self.store.dtype == np.uint64:
            for k in range(K):
                out[k] = ((self.store >> np.uint64(k)) & np.uint64(1)).sum(axis=1)
        else:
            for k in range(K):
                out[k] = [sum((int(m) >> k) & 1 for m in row) for row in self.store]
        return out

    def level_counts(self):
        """Array ``(N, F)`` with ``|S_{n,f}|`` for every packet."""
        if self.store.dtype == np.uint64:
            return np.bitwise_count(self.store).astype(np.int64)
        return np.vectorize(popcount, otypes=[np.int64])(self.store)

    def to_json(self):
        """JSON document: params header plus one hex mask per packet (bit k-1 <-> user k)."""
        return json.dumps({
            'params': self.params.to_dict(),
            'origin': self.origin,
            'store': [[format(int(m), 'x') for m in row] for row in self.store],
        })

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        params = SystemParams.from_dict(doc['params'])
        rows = [[int(h, 16) for h in row] for row in doc['store']]
        store = np.array(rows, dtype=mask_dtype(params.K)).reshape(params.N, params.F)
        return cls(params, store, doc['origin'])


@dataclass(frozen=True)
class DemandVector:
    """One requested file per user."""

    d: tuple[int, ...]
    mode: str = 'arbitrary'

    def __post_init__(self):
        object.__setattr__(self, 'd', tuple(int(x) for x in self.d))
        if self.mode not in ('distinct', 'arbitrary'):
            raise InstanceError(f'unknown demand mode {self.mode!r}')
        if self.mode == 'distinct' and len(set(self.d)) != len(self.d):
            raise InstanceError(f'distinct demand has repeated files: {self.d}')

    def __len__(self):
        return len(self.d)

    def __iter__(self):
        return iter(self.d)

    def __getitem__(self, k):
        return self.d[k]

    @property
    def is_distinct(self):
        return len(set(self.d)) == len(self.d)


def _check_instance(config, demand):
    p = config.params
    if len(demand) != p.K:
        raise InstanceError(f'demand has {len(demand)} entries for K={p.K} users')
    bad = [n for n in demand if not 0 <= n < p.N]
    if bad:
        raise InstanceError(f'demanded files {bad} outside [0, {p.N})')


@dataclass(frozen=True, eq=False)
class SideInfoView:
    """Requested packets missing from their requester's cache, plus the edge predicate.

    Nodes whose packet already sits in the requester's cache are left out.
    An edge runs from node ``u`` to node ``v`` when user ``u.user`` caches
    packet ``v.packet_id``.
    """

    config: CacheConfiguration
    demand: DemandVector
    needed: tuple[Node, ...]
    _index: frozenset = field(repr=False)

    def __contains__(self, node):
        return node in self._index

    def __len__(self):
        return len(self.needed)

    def has_edge(self, u: Node, v: Node) -> bool:
        return self.config.caches(u.user, v.file, v.packet)

    def edges(self):
        """All directed edges, in canonical node order."""
        return [(u, v) for u in self.needed for v in self.needed
                if u != v and self.has_edge(u, v)]


def build_side_info_view(config: CacheConfiguration, demand: DemandVector) -> SideInfoView:
    _check_instance(config, demand)
    needed = []
    for k, n in enumerate(demand):
        row = config.store[n]
        if row.dtype == np.uint64:
            missing = np.nonzero(((row >> np.uint64(k)) & np.uint64(1)) == 0)[0].tolist()
        else:
            missing = [f for f, m in enumerate(row) if not (m >> k) & 1]
        needed.extend(Node(k, n, f) for f in missing)
    needed = tuple(needed)
    return SideInfoView(config, demand, needed, frozenset(needed))


def is_clique(view: SideInfoView, nodes: Iterable[Node]) -> bool:
    """Whether ``nodes`` can share one XOR broadcast.

    Every requester must cache every other packet in the set; two entries
    carrying the same packet need nothing from each other.
    """
    nodes = list(nodes)
    for u in nodes:
        if u not in view:
            raise ValueError(f'{u} is not a node of the side-information view')
    for u in nodes:
        for v in nodes:
            if u.packet_id != v.packet_id and not view.has_edge(u, v):
                return False
    return True


@dataclass(frozen=True)
class TransmissionPlan:
    """Ordered XOR broadcasts; each clique costs one packet transmission."""

    cliques: tuple[tuple[Node, ...], ...]
    F: int
    scheme: str = ''

    @property
    def transmissions(self) -> int:
        return len(self.cliques)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.transmissions, self.F)

    def covered(self):
        return [u for c in self.cliques for u in c]

    def without_clique(self, i):
        return TransmissionPlan(self.cliques[:i] + self.cliques[i + 1:], self.F, self.scheme)

    def to_dict(self):
        return {
            'scheme': self.scheme,
            'cliques': [[{'user': u.user + 1, 'file': u.file + 1, 'packet': u.packet + 1}
                         for u in c] for c in self.cliques],
            'summary': {'transmissions': self.transmissions, 'F': self.F,
                        'rate': float(self.rate)},
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc):
        cliques = tuple(tuple(Node(e['user'] - 1, e['file'] - 1, e['packet'] - 1) for e in c)
                        for c in doc['cliques'])
        return cls(cliques, int(doc['summary']['F']), doc.get('scheme', ''))


def check_decodable(plan: TransmissionPlan, config: CacheConfiguration, demand: DemandVector):
    """Return ``None`` if every needed packet is decodable, else a message for the first failure."""
    view = build_side_info_view(config, demand)
    rows = config.store.tolist()
    where = {}
    for i, clique in enumerate(plan.cliques):
        for u in clique:
            if u.file != demand[u.user]:
                return f'clique {i}: user {u.user} does not request file {u.file}'
            if u in where:
                return f'{u} covered twice (cliques {where[u]} and {i})'
            where[u] = i
    for u in view.needed:
        i = where.get(u)
        if i is None:
            return f'{u} not covered'
        for v in plan.cliques[i]:
            if (v.file != u.file or v.packet != u.packet) and not (rows[v.file][v.packet] >> u.user) & 1:
                return f'{u} cannot decode clique {i}: missing packet {v.packet_id}'
    return None


def verify_decodable(plan: TransmissionPlan, config: CacheConfiguration, demand: DemandVector) -> bool:
    return check_decodable(plan, config, demand) is None
