"""Clique-cover delivery schemes.

Every scheme returns a :class:`~codedcaching.model.TransmissionPlan` whose
cliques are XOR broadcasts.  Nodes are ``(user, file, packet)`` requests, so
a packet wanted by two users with the same demand is two nodes; within a
clique, entries are listed by ascending user.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import seeding
from .model import (CacheConfiguration, CapabilityError, DemandVector, InstanceError, Node,
                    TransmissionPlan, _check_instance, build_side_info_view, mask_users)
from .placement import UserGrouping, colex_subsets

__all__ = [
    'DeliverySpec',
    'deliver_old',
    'deliver_greedy',
    'pull_down',
    'deliver_modified',
    'deliver_deterministic',
    'deliver_optimal',
    'deliver',
    'MAX_OLD_USERS',
    'MAX_OPTIMAL_NODES',
]

SCHEMES = ('old_enum', 'greedy', 'modified', 'deterministic', 'optimal')
MAX_OLD_USERS = 20
MAX_OPTIMAL_NODES = 20


@dataclass(frozen=True)
class DeliverySpec:
    scheme: str
    g: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InstanceError(f'unknown delivery scheme {self.scheme!r}')
        if self.scheme in ('modified', 'deterministic') and (self.g is None or self.g < 1):
            raise InstanceError(f'{self.scheme} delivery needs g >= 1')


def _needed_by_user(config, demand):
    """Per user: needed packet indices and their storage masks, both ascending by packet."""
    K = config.params.K
    out = []
    for k in range(K):
        row = config.store[demand[k]]
        if row.dtype == np.uint64:
            keep = ((row >> np.uint64(k)) & np.uint64(1)) == 0
            fs = np.nonzero(keep)[0]
            out.append((fs.tolist(), [int(m) for m in row[fs]]))
        else:
            fs = [f for f, m in enumerate(row) if not (m >> k) & 1]
            out.append((fs, [int(row[f]) for f in fs]))
    return out


def _buckets(needed):
    """``(user, mask) -> ascending packet list``, plus each needed packet's rank in its bucket."""
    buckets = {}
    ranks = []
    for k, (fs, masks) in enumerate(needed):
        r = []
        for f, m in zip(fs, masks):
            lst = buckets.setdefault((k, m), [])
            r.append(len(lst))
            lst.append(f)
        ranks.append(r)
    return buckets, ranks


def deliver_old(config: CacheConfiguration, demand: DemandVector) -> TransmissionPlan:
    """Subset-enumeration delivery.

    For every nonempty user subset ``S`` the ``i``-th broadcast XORs the
    ``i``-th packet (ascending index) of each ``V[k, S-k]``, the packets of
    file ``d_k`` stored exactly at ``S - {k}``.  Enumerates ``2**K`` subsets,
    so ``K`` is capped at :data:`MAX_OLD_USERS`.
    """
    _check_instance(config, demand)
    K = config.params.K
    if K > MAX_OLD_USERS:
        raise CapabilityError(
            f'deliver_old enumerates 2^K subsets; K={K} > {MAX_OLD_USERS}. '
            'deliver_greedy yields the same transmission count.')
    buckets, _ = _buckets(_needed_by_user(config, demand))
    cliques = []
    for S in range(1, 1 << K):
        members = []
        for k in mask_users(S):
            lst = buckets.get((k, S ^ (1 << k)))
            if lst:
                members.append((k, lst))
        if not members:
            continue
        for i in range(max(len(lst) for _, lst in members)):
            cliques.append(tuple(Node(k, demand[k], lst[i]) for k, lst in members if i < len(lst)))
    return TransmissionPlan(tuple(cliques), config.params.F, 'old_enum')


def deliver_greedy(config: CacheConfiguration, demand: DemandVector) -> TransmissionPlan:
    """Greedy clique cover over packets grouped by storage set.

    Needed packets are visited user by user, packet index ascending.  An
    uncovered packet of user ``k`` stored at ``T`` starts a clique; for each
    ``j`` in ``T`` it takes the lowest uncovered packet of user ``j`` stored
    exactly at ``T + {k} - {j}``.
    """
    _check_instance(config, demand)
    needed = _needed_by_user(config, demand)
    buckets, ranks = _buckets(needed)
    # covered entries of each bucket always form a prefix
    taken = dict.fromkeys(buckets, 0)
    cliques = []
    for k, (fs, masks) in enumerate(needed):
        for f, T, rank in zip(fs, masks, ranks[k]):
            key = (k, T)
            if rank < taken[key]:
                continue
            taken[key] = rank + 1
            S = T | (1 << k)
            members = [Node(k, demand[k], f)]
            for j in mask_users(T):
                other = (j, S ^ (1 << j))
                lst = buckets.get(other)
                if lst is not None and taken[other] < len(lst):
                    members.append(Node(j, demand[j], lst[taken[other]]))
                    taken[other] += 1
            members.sort()
            cliques.append(tuple(members))
    return TransmissionPlan(tuple(cliques), config.params.F, 'greedy')


def pull_down(config: CacheConfiguration, demand: DemandVector, g: int, seed) -> CacheConfiguration:
    """Virtual configuration where every demanded packet cached by more than ``g`` users
    keeps only a uniformly random ``g``-subset of them.

    Packets of files nobody requested are left alone; the input is not modified.
    """
    _check_instance(config, demand)
    if g < 1:
        raise InstanceError(f'need g >= 1, got {g}')
    K = config.params.K
    rng = seeding.generator(seed)
    store = config.store.copy()
    files = sorted(set(demand))
    if store.dtype == np.uint64:
        sub = store[files]
        heavy = np.nonzero(np.bitwise_count(sub) > g)
        masks = sub[heavy]
        if masks.size:
            bits = (masks[:, None] >> np.arange(K, dtype=np.uint64)[None, :]) & np.uint64(1)
            keys = rng.random(bits.shape)
            keys[bits == 0] = 2.0
            keep = np.argsort(keys, axis=1)[:, :g].astype(np.uint64)
            new = np.bitwise_or.reduce(np.uint64(1) << keep, axis=1)
            sub[heavy] = new
            store[files] = sub
    else:
        for n in files:
            for f in range(config.params.F):
                users = mask_users(store[n, f])
                if len(users) > g:
                    store[n, f] = sum(1 << int(u) for u in rng.choice(users, size=g, replace=False))
    return CacheConfiguration(config.params, store, f'pull_down(g={g})<{config.origin}>')


def deliver_modified(config: CacheConfiguration, demand: DemandVector, g: int, seed) -> TransmissionPlan:
    """Pull demanded packets down to level ``g``, then run :func:`deliver_greedy`.

    The pull-down only forgets side information, so the plan decodes
    against the real caches.
    """
    virtual = pull_down(config, demand, g, seed)
    plan = deliver_greedy(virtual, demand)
    return TransmissionPlan(plan.cliques, plan.F, 'modified')


def deliver_deterministic(config: CacheConfiguration, demand: DemandVector,
                          grouping: UserGrouping, g: int) -> TransmissionPlan:
    """Per group, one broadcast for every ``(g+1)``-subset ``T`` of its users.

    User ``k`` in ``T`` decodes the packet of ``d_k`` indexed by ``T - {k}``.
    """
    _check_instance(config, demand)
    p = config.params
    size = grouping.group_size
    if (config.origin != f'deterministic_grouped(g={g})' or grouping.K != p.K
            or size != g * p.group_size or p.F != math.comb(size, g)):
        raise InstanceError('configuration was not produced by place_deterministic_grouped '
                            f'with g={g} and this grouping')
    index = {s: i for i, s in enumerate(colex_subsets(size, g))}
    cliques = []
    for b in range(grouping.n_groups):
        first = b * size
        for T in colex_subsets(size, g + 1):
            cliques.append(tuple(
                Node(first + pos, demand[first + pos], index[tuple(x for x in T if x != pos)])
                for pos in T))
    return TransmissionPlan(tuple(cliques), p.F, 'deterministic')


def deliver_optimal(config: CacheConfiguration, demand: DemandVector) -> TransmissionPlan:
    """Minimum clique cover by exact search; a test oracle for small instances.

    Maximal cliques of the bidirectional graph are enumerated, then a
    branch-and-bound search picks cliques (trimmed to the uncovered nodes)
    until everything is covered.
    """
    view = build_side_info_view(config, demand)
    nodes = view.needed
    n = len(nodes)
    if n > MAX_OPTIMAL_NODES:
        raise CapabilityError(f'deliver_optimal is exact; {n} needed nodes > {MAX_OPTIMAL_NODES}')
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            u, v = nodes[i], nodes[j]
            if u.packet_id == v.packet_id or (view.has_edge(u, v) and view.has_edge(v, u)):
                graph.add_edge(i, j)
    adj = [0] * n
    for i, j in graph.edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    through = [[] for _ in range(n)]
    for clique in nx.find_cliques(graph):
        m = sum(1 << i for i in clique)
        for i in clique:
            through[i].append(m)
    full = (1 << n) - 1
    best_cover = _greedy_cover(full, through)
    seen = {}

    def independent_bound(mask):
        # uncovered nodes with no edge between them each need their own clique
        count = 0
        while mask:
            low = mask & -mask
            count += 1
            mask &= ~low & ~adj[low.bit_length() - 1]
        return count

    def search(mask, chosen):
        nonlocal best_cover
        if not mask:
            if len(chosen) < len(best_cover):
                best_cover = list(chosen)
            return
        if len(chosen) + independent_bound(mask) >= len(best_cover):
            return
        if seen.get(mask, n + 1) <= len(chosen):
            return
        seen[mask] = len(chosen)
        # branch on the uncovered node with the fewest distinct options
        options = min(({q & mask for q in through[i]} for i in mask_users(mask)), key=len)
        for q in sorted(options, key=lambda q: -q.bit_count()):
            chosen.append(q)
            search(mask & ~q, chosen)
            chosen.pop()

    search(full, [])
    cliques = [tuple(sorted(nodes[i] for i in mask_users(q))) for q in best_cover]
    return TransmissionPlan(tuple(cliques), config.params.F, 'optimal')


def _greedy_cover(mask, through):
    """Cover the lowest uncovered node with its largest clique, restricted to what is left."""
    cover = []
    while mask:
        low = (mask & -mask).bit_length() - 1
        q = max((q & mask for q in through[low]), key=int.bit_count)
        cover.append(q)
        mask &= ~q
    return cover


def deliver(config, demand, spec: DeliverySpec, grouping=None, seed=None) -> TransmissionPlan:
    """Dispatch on ``spec.scheme``."""
    seed = spec.seed if seed is None else seed
    if spec.scheme == 'old_enum':
        return deliver_old(config, demand)
    if spec.scheme == 'greedy':
        return deliver_greedy(config, demand)
    if spec.scheme == 'modified':
        return deliver_modified(config, demand, spec.g, seed)
    if spec.scheme == 'deterministic':
        if grouping is None:
            raise InstanceError('deterministic delivery needs the placement grouping')
        return deliver_deterministic(config, demand, grouping, spec.g)
    return deliver_optimal(config, demand)
