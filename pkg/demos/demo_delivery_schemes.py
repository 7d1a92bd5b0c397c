"""
Four ways to deliver the same request
=====================================

One small system, one cache placement, one demand, and every delivery
scheme the package offers.  The subset-enumeration scheme and the greedy
clique cover always send the same number of XORs; the exact minimum
clique cover can only do better.
"""

from codedcaching import (DemandVector, SystemParams, build_side_info_view, deliver_greedy,
                          deliver_modified, deliver_old, deliver_optimal, place_new,
                          verify_decodable)

# Three users, six files, room for two files each.  Grouped random placement
# splits every file into F = ceil(N/M) * F' packets and each user keeps one
# packet out of every group of ceil(N/M).
params = SystemParams.grouped(K=3, N=6, M=2, F_prime=2)
config = place_new(params, seed=2024)
demand = DemandVector((0, 1, 2), 'distinct')

# The side-information graph has one node per packet a user still needs.
view = build_side_info_view(config, demand)
print(f'{len(view)} packets are missing across the three users; F = {params.F}')

for name, plan in [('subset enumeration', deliver_old(config, demand)),
                   ('greedy clique cover', deliver_greedy(config, demand)),
                   ('pull-down to level 1', deliver_modified(config, demand, g=1, seed=7)),
                   ('exact minimum cover', deliver_optimal(config, demand))]:
    assert verify_decodable(plan, config, demand)
    print(f'{name:>22}: {plan.transmissions:2d} XORs, rate {plan.rate} = {float(plan.rate):.3f}')

# The plan serializes to JSON with 1-based user/file/packet labels.
print(deliver_greedy(config, demand).to_json()[:200], '...')
