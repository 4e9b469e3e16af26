"""Zoned water-filling power allocation for clustered massive MIMO downlink."""

__version__ = "0.1.0"

from .model import (
    ChannelRealization,
    RateReport,
    SystemConfig,
    compute_rates,
    dbm_to_watt,
    generate_realization,
    watt_to_dbm,
)
from .waterfill import (
    ALL_SCHEMES,
    DualState,
    PowerAllocation,
    ZonePartition,
    allocate_baseline_equal,
    allocate_baseline_single_zone,
    allocate_scheme,
    initial_duals,
    partition_zones,
    solve_iterative,
    waterfill_closed_form,
    waterfill_exact,
    waterfill_objective,
)

__all__ = [
    "__version__",
    "SystemConfig",
    "ChannelRealization",
    "RateReport",
    "generate_realization",
    "compute_rates",
    "dbm_to_watt",
    "watt_to_dbm",
    "ZonePartition",
    "PowerAllocation",
    "DualState",
    "partition_zones",
    "waterfill_closed_form",
    "waterfill_exact",
    "waterfill_objective",
    "initial_duals",
    "solve_iterative",
    "allocate_baseline_equal",
    "allocate_baseline_single_zone",
    "allocate_scheme",
    "ALL_SCHEMES",
]
