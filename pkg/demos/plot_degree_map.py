"""
Mean degree over the obstacle field
===================================

Density times coverage gives the expected number of neighbours of a station
at each node.  A snapshot simulation of 1000 stations gives an empirical
value to hold it against.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rspog.coverage import coverage_map
from rspog.degree import global_mean_degree, local_density, mean_degree_map
from rspog.distribution import aggregate_fast
from rspog.environment import build_environment, load_config
from rspog.montecarlo import SimulationConfig, snapshot_degree

configs = Path(__file__).resolve().parents[1] / "configs"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo-out")
out.mkdir(exist_ok=True)

cfg = load_config(configs / "field_460m.json")
env = build_environment(cfg)
dist = aggregate_fast(env)
deg = mean_degree_map(coverage_map(env), local_density(dist, cfg.station_count, cfg.cell_size_m),
                      N=cfg.station_count)
print("analytic global mean degree:", global_mean_degree(dist, deg))

snap = snapshot_degree(env, SimulationConfig(stations=cfg.station_count, snapshots=50), dist=dist)
print("snapshot global mean degree:", snap.global_mean)

plt.imshow(deg.as_grid(), origin="lower", extent=(0, env.width, 0, env.height))
plt.colorbar(label="mean degree")
plt.savefig(out / "degree.png", dpi=120)
print("wrote", out / "degree.png")
