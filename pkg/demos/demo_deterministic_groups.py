"""
A deterministic scheme with small files
=======================================

Split the K=32 users into groups of K' = g * ceil(N/M) = 8, give every
group the classic subset placement over C(8, 2) = 28 packets, and serve
each group with one XOR per 3-subset.  The rate is exact: no randomness.
"""

from codedcaching import (DemandVector, SystemParams, analysis, deliver_deterministic,
                          deliver_greedy, place_deterministic_grouped, verify_decodable)

params = SystemParams(K=32, N=64, M=16, F=28)
config, grouping = place_deterministic_grouped(params, g=2)
demand = DemandVector(range(32), 'distinct')

plan = deliver_deterministic(config, demand, grouping, g=2)
assert verify_decodable(plan, config, demand)
print(f'{grouping.n_groups} groups of {grouping.group_size}, F = {params.F}')
print(f'deterministic delivery: {plan.transmissions} XORs, rate {plan.rate}')
print(f'closed form:            rate {analysis.deterministic_grouped_rate(32, 64, 16, 2)}')
print(f'uncoded:                rate {analysis.uncoded_rate(32, 64, 16)}')

# Greedy delivery on the same caches is a cautionary tale.  Every packet is
# held by the same two positions in all four groups, so its user set has
# eight members and greedy never finds a partner packet whose set differs by
# exactly one user: it falls back to sending each missing packet on its own.
print(f'greedy on these caches: rate {deliver_greedy(config, demand).rate}')

# Inside a single group the two coincide.
one_group = SystemParams(K=8, N=16, M=4, F=28)
small, small_grouping = place_deterministic_grouped(one_group, g=2)
d8 = DemandVector(range(8), 'distinct')
print(f'one group of 8: deterministic {deliver_deterministic(small, d8, small_grouping, 2).rate}, '
      f'greedy {deliver_greedy(small, d8).rate}')
