"""
Checking the distribution by simulation
=======================================

Random trips along uniformly drawn shortest paths should reproduce the
analytic distribution, as long as the simulation deposits mass the same way
the aggregation does.
"""

from pathlib import Path

from rspog.distribution import aggregate_fast
from rspog.environment import build_environment, load_config
from rspog.montecarlo import SimulationConfig, compare, run_occupancy

configs = Path(__file__).resolve().parents[1] / "configs"
env = build_environment(load_config(configs / "grid12_obstacle.json"))

for trips in (10_000, 100_000, 1_000_000):
    emp = run_occupancy(env, SimulationConfig(trips=trips, seed=1))
    print(trips, "trips, TV =", round(compare(aggregate_fast(env), emp).tv_distance, 4))

###############################################################################
# The two deposit conventions disagree, and the simulation can tell them apart.

emp = run_occupancy(env, SimulationConfig(trips=1_000_000, seed=1, mode="time-weighted"))
print("per-trip analytic vs time-weighted walk:", compare(aggregate_fast(env), emp).to_text())
