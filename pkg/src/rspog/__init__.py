"""Spatial node distribution, line-of-sight coverage and mean degree of mobile
stations moving along random shortest paths in a grid with obstacles."""

__version__ = "0.1.0"

from .coverage import (  # noqa: E402
    CoverageMap,
    coverage_map,
    coverage_numeric,
    coverage_zone6,
    los_visible,
)
from .degree import DegreeMap, global_mean_degree, local_density, mean_degree_map  # noqa: E402
from .distribution import (  # noqa: E402
    PresenceDistribution,
    aggregate_distribution,
    aggregate_fast,
    pair_presence,
)
from .environment import (  # noqa: E402
    EnvironmentConfig,
    GridEnvironment,
    NodeId,
    Obstacle,
    build_environment,
    lattice_config,
    load_config,
    neighbors,
    validate_zone_spacing,
)
from .montecarlo import SimulationConfig, compare, run_occupancy, snapshot_degree  # noqa: E402
from .paths import (  # noqa: E402
    closed_form_count,
    enumerate_paths_bruteforce,
    sample_shortest_path,
    single_source_dag,
    through_counts,
)
