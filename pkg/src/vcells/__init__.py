"""Virtual-cell uplink resource allocation.

Clusters base-stations into virtual cells, solves the joint channel-access
and power-allocation problem inside each cell by three schemes, and measures
the network sum rate (with cross-cell interference) as a function of the
number of virtual cells.
"""

from .alternating import (
    AlternationResult,
    bs_centric_allocate,
    kkt_user_power,
    user_centric_allocate,
)
from .clustering import (
    Clustering,
    Dendrogram,
    affiliate_users,
    cut_dendrogram,
    enumerate_partitions,
    format_dendrogram,
    hierarchical_cluster,
    minimax_linkage,
    set_radius,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config, serialize_config
from .evaluation import (
    NetworkSolution,
    exhaustive_best_clustering,
    grid_oracle_rate,
    network_sum_rate,
    run_experiment,
    run_trial,
    solve_partition,
)
from .network import (
    NetworkInstance,
    SystemParams,
    dbm_to_watts,
    free_space_gain,
    generate_network,
    noise_power,
    watts_to_dbm,
)
from .solver import (
    CellProblem,
    SolverOptions,
    cell_from_instance,
    cell_rate_continuous,
    high_sinr_coeffs,
    interference_price,
    joint_allocate,
    sinr_pair,
)

__version__ = "0.1.0"
