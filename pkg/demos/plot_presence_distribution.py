"""
Where stations spend their time
===============================

Aggregating the per-trip presence over every ordered pair of nodes gives the
stationary distribution.  On an empty square it is bell shaped; obstacles
carve holes and push traffic into the corridors between them.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rspog.distribution import aggregate_fast
from rspog.environment import build_environment, load_config

configs = Path(__file__).resolve().parents[1] / "configs"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo-out")
out.mkdir(exist_ok=True)

env = build_environment(load_config(configs / "field_460m.json"))
fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
for ax, mode in zip(axes, ("per-trip", "time-weighted")):
    P = aggregate_fast(env, mode).as_grid()
    im = ax.imshow(P, origin="lower", extent=(0, env.width, 0, env.height))
    ax.set_title(mode)
    fig.colorbar(im, ax=ax, shrink=0.8)
fig.savefig(out / "presence.png", dpi=120)
print("wrote", out / "presence.png")
