"""Placement and clique-cover delivery for caching-aided coded multicasting.

Random and deterministic placement schemes, greedy/enumerative/exact
clique-cover delivery, closed-form rate and bound evaluators, and a seeded
Monte Carlo harness.
"""

from .model import (CacheConfiguration, CapabilityError, DemandVector, InstanceError, Node,
                    PacketId, SideInfoView, SystemParams, TransmissionPlan, build_side_info_view,
                    check_decodable, is_clique, verify_decodable)
from .placement import (PlacementSpec, UserGrouping, place_deterministic_grouped, place_new,
                        place_old)
from .delivery import (DeliverySpec, deliver, deliver_deterministic, deliver_greedy,
                       deliver_modified, deliver_old, deliver_optimal, pull_down)
from .harness import (DecodabilityError, ExperimentConfig, RateStats, gen_demand, run_trials,
                      sweep, verify_suite)
from . import analysis

__version__ = '0.1.0'
