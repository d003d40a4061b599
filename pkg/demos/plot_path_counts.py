"""
Counting shortest paths on a grid
=================================

On an empty lattice the number of shortest paths between two nodes is a
binomial coefficient.  An obstacle breaks that, and the labelling pass in
``rspog.paths`` counts the paths exactly anyway.
"""

import numpy as np

from rspog.environment import build_environment, lattice_config
from rspog.paths import closed_form_count, single_source_dag, through_counts

env = build_environment(lattice_config(7, 7))
dag = single_source_dag(env, (0, 0))
counts = through_counts(dag, (6, 6))
print("paths (0,0) -> (6,6):", counts.n_paths, "closed form:", closed_form_count((0, 0), (6, 6)))

# Paths through each node, laid out like the grid (row 0 at the bottom).
through = np.zeros((env.rows, env.cols), dtype=int)
for (i, j), v in counts.node_tag2.items():
    through[j, i] = v
print(through[::-1])

###############################################################################
# Remove two nodes in the middle: the count drops and the traffic shifts to
# the sides of the hole.

env = build_environment(lattice_config(7, 7, blocked=[(3, 3), (3, 2)]))
counts = through_counts(single_source_dag(env, (0, 0)), (6, 6))
print("with a hole:", counts.n_paths)
through = np.zeros((env.rows, env.cols), dtype=int)
for (i, j), v in counts.node_tag2.items():
    through[j, i] = v
print(through[::-1])
