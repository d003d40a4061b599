"""
Line-of-sight coverage
======================

Each station covers the part of its radio disk it can see.  Borders and
obstacle faces cut the disk; near an obstacle corner the closed form for the
corner case applies and is checked against the ray-cast value.
"""

import math
from pathlib import Path

from rspog.coverage import coverage_map, coverage_numeric, coverage_zone6, wall_coverage
from rspog.environment import EnvironmentConfig, Obstacle, build_environment, load_config

r = 20.0
env = build_environment(EnvironmentConfig(200, 200, 10, r, 10, (Obstacle(100, 100, 90, 90),)))

print("free disk   ", coverage_numeric((40, 40), r, env), math.pi * r * r)
print("wall at r/2 ", coverage_numeric((90, 150), r, env), wall_coverage(r / 2, r))
x, y = 6.0, 8.0
print("corner case ", coverage_numeric((100 - x, 100 + y), r, env), coverage_zone6(x, y, r))

###############################################################################
# A whole map, with the closed-form cross-checks it ran along the way.

configs = Path(__file__).resolve().parents[1] / "configs"
cov = coverage_map(build_environment(load_config(configs / "field_460m.json")))
print("checked cases:", cov.checks, "diagnostics:", len(cov.diagnostics))
