"""
cachezf: cache-aided interference networks with one-shot zero-forcing delivery.

Combinatorial cache placement at transmitters and receivers, the delivery
scheduler that serves ``t_T + t_R`` receivers per block, numeric zero-forcing
verification, and exact outer bounds on the one-shot linear sum-DoF.
"""
from .errors import (
    CacheZFError,
    ConsistencyError,
    DomainError,
    ExactCapExceeded,
    InstanceFormatError,
    MemorySharingRequired,
    SaturationRequired,
    SingularChannelError,
)
from .placement import NetworkConfig, build_placement, minimal_f, split_file
from .scheduler import DemandVector, measured_dof, plan_delivery, saturate, schedule
from .phy import gen_channel, solve_beamformers, verify_schedule
from .converse import (
    PacketInstance,
    PlacementProfile,
    analytic_block_lb,
    average_min_blocks,
    dof_bounds,
    min_blocks_exact,
    min_blocks_greedy,
)

__version__ = "0.1.0"

__all__ = [
    "CacheZFError", "ConsistencyError", "DomainError", "ExactCapExceeded",
    "InstanceFormatError", "MemorySharingRequired", "SaturationRequired",
    "SingularChannelError",
    "NetworkConfig", "build_placement", "minimal_f", "split_file",
    "DemandVector", "measured_dof", "plan_delivery", "saturate", "schedule",
    "gen_channel", "solve_beamformers", "verify_schedule",
    "PacketInstance", "PlacementProfile", "analytic_block_lb", "average_min_blocks",
    "dof_bounds", "min_blocks_exact", "min_blocks_greedy",
]
