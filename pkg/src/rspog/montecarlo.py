"""Monte Carlo oracle: simulated trips and snapshot connection graphs.

Randomness comes from Philox4x64 (counter-based) generators, one per task,
derived with ``SeedSequence(seed).spawn``.  Task boundaries depend only on the
workload size, never on the number of worker threads, and partial results are
merged in task order, so outputs are bit-identical for a given seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .coverage import los_visible_many
from .degree import ShapeMismatch
from .distribution import MODES, PresenceDistribution, aggregate_fast
from .environment import GridEnvironment
from .paths import path_counts_from, single_source_dag

__all__ = [
    "ComparisonReport",
    "EmpiricalDistribution",
    "RNG_ALGORITHM",
    "SimulationConfig",
    "SnapshotDegree",
    "compare",
    "connection_degrees",
    "run_occupancy",
    "snapshot_degree",
    "total_variation",
]

RNG_ALGORITHM = "numpy Philox4x64-10, per-task streams from SeedSequence(seed).spawn(n_tasks)"
MAX_TASK_TRIPS = 1 << 16
MIN_TASKS = 16


@dataclass(frozen=True)
class SimulationConfig:
    trips: int = 100_000
    stations: int = 1000
    seed: int = 0
    mode: str = "per-trip"
    snapshots: int = 200

    def __post_init__(self):
        if self.trips < 1:
            raise ValueError("trips must be >= 1")
        if self.stations < 1:
            raise ValueError("stations must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    env: GridEnvironment = field(repr=False)
    prob: np.ndarray
    stderr: np.ndarray
    samples: int
    mode: str
    rng: str = RNG_ALGORITHM

    def as_grid(self) -> np.ndarray:
        return self.env.to_grid(self.prob)


def _streams(seed: int, n: int):
    return [np.random.Generator(np.random.Philox(ss))
            for ss in np.random.SeedSequence(seed).spawn(n)]


def _task_sizes(total: int) -> list[int]:
    size = min(MAX_TASK_TRIPS, max(1, -(-total // MIN_TASKS)))
    sizes = [size] * (total // size)
    if total % size:
        sizes.append(total % size)
    return sizes


class _Walker:
    """Per-target distance and path-count tables for sampling shortest paths."""

    def __init__(self, env: GridEnvironment):
        n = env.n_free
        self.env = env
        self.dist = np.empty((n, n))
        self.sigma = np.empty((n, n))
        nodes, index = env.nodes, env.index
        for ti, t in enumerate(nodes):
            dag = single_source_dag(env, t)
            counts = path_counts_from(dag)
            for node, d in dag.dist.items():
                k = index[node]
                self.dist[ti, k] = d
                self.sigma[ti, k] = float(counts[node])
        self.nbr = np.where(env.neighbor_index >= 0, env.neighbor_index, 0)
        self.valid = env.neighbor_index >= 0
        self.cost = np.where(self.valid, env.neighbor_cost, 0.0)
        self.tol = 0.0 if env.uniform_cost else 1e-9

    def draw_pairs(self, rng, size, weights):
        n = self.env.n_free
        if weights is None:
            s = rng.integers(n, size=size)
            t = rng.integers(n - 1, size=size)
            t = t + (t >= s)
            return s, t
        p = weights / weights.sum()
        s = rng.choice(n, size=size, p=p)
        t = rng.choice(n, size=size, p=p)
        # Redraw both ends so accepted pairs stay proportional to w(s) * w(t).
        clash = s == t
        while clash.any():
            m = int(clash.sum())
            s[clash] = rng.choice(n, size=m, p=p)
            t[clash] = rng.choice(n, size=m, p=p)
            clash = s == t
        return s, t

    def occupancy(self, rng, size, mode, weights):
        """Visit mass per node for ``size`` trips."""
        n = self.env.n_free
        s, t = self.draw_pairs(rng, size, weights)
        L = self.dist[t, s]
        mass = 1.0 / L if mode == "per-trip" else np.ones(size)
        occ = np.bincount(s, weights=mass, minlength=n)
        cur = s.copy()
        active = np.nonzero(cur != t)[0]
        while active.size:
            c, tt = cur[active], t[active]
            here_d = self.dist[tt, c]
            cum = np.zeros((active.size, 4))
            allowed = np.zeros((active.size, 4), dtype=bool)
            running = np.zeros(active.size)
            for k in range(4):
                m = self.nbr[c, k]
                ok = self.valid[c, k] & (
                    np.abs(self.dist[tt, m] + self.cost[c, k] - here_d)
                    <= self.tol * np.maximum(1.0, here_d))
                running = running + np.where(ok, self.sigma[tt, m], 0.0)
                cum[:, k] = running
                allowed[:, k] = ok
            u = rng.random(active.size) * running
            above = cum > u[:, None]
            # u can round up to the total; fall back to the last allowed step.
            last = 3 - np.argmax(allowed[:, ::-1], axis=1)
            k_pick = np.where(above.any(axis=1), np.argmax(above, axis=1), last)
            nxt = self.nbr[c, k_pick]
            cur[active] = nxt
            occ += np.bincount(nxt, weights=mass[active], minlength=n)
            active = active[nxt != t[active]]
        return occ


def run_occupancy(env: GridEnvironment, cfg: SimulationConfig, threads: int = 1,
                  hotspots: bool = True) -> EmpiricalDistribution:
    """Simulate ``cfg.trips`` trips and return the normalized visit mass.

    Each trip draws ``s != t`` (uniformly, or by hotspot weight), follows a
    uniformly random shortest path and deposits ``1 / L`` (per-trip mode) or
    ``1`` (time-weighted mode) on every visited node, endpoints included.
    The standard-error map comes from batch means over the tasks.
    """
    n = env.n_free
    weights = None
    if hotspots and not np.all(env.node_weights == 1.0):
        weights = np.asarray(env.node_weights, dtype=float)
    sizes = _task_sizes(cfg.trips)
    rngs = _streams(cfg.seed, len(sizes))
    if n < 2:
        raise ValueError("need at least two free nodes")
    walker = _Walker(env)

    def task(i):
        return walker.occupancy(rngs[i], sizes[i], cfg.mode, weights)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(task, range(len(sizes))))
    else:
        parts = [task(i) for i in range(len(sizes))]

    total = np.zeros(n)
    for part in parts:
        total += part
    prob = total / total.sum()
    if len(parts) > 1:
        batch = np.array([p / p.sum() for p in parts])
        w = np.array(sizes, dtype=float)
        mean = prob
        var = (w[:, None] * (batch - mean) ** 2).sum(axis=0) / (w.sum() * (len(parts) - 1))
        stderr = np.sqrt(var)
    else:
        stderr = np.full(n, np.nan)
    return EmpiricalDistribution(env=env, prob=prob, stderr=stderr,
                                 samples=cfg.trips, mode=cfg.mode)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


@dataclass(frozen=True)
class ComparisonReport:
    tv_distance: float
    z_scores: np.ndarray
    delta: np.ndarray
    max_abs_delta: float
    max_node: object

    def to_text(self) -> str:
        finite = np.abs(self.z_scores[np.isfinite(self.z_scores)])
        zmax = float(finite.max()) if finite.size else float("nan")
        return (f"total_variation: {self.tv_distance:.12g}\n"
                f"max_abs_delta: {self.max_abs_delta:.12g} at {tuple(self.max_node)}\n"
                f"max_abs_z: {zmax:.6g}\n")


def compare(analytic, empirical) -> ComparisonReport:
    """Total variation, per-node z-scores and the location of the largest difference."""
    p = analytic.prob if hasattr(analytic, "prob") else np.asarray(analytic, float)
    q = empirical.prob if hasattr(empirical, "prob") else np.asarray(empirical, float)
    if p.shape != q.shape:
        raise ShapeMismatch(f"analytic {p.shape} vs empirical {q.shape}")
    delta = q - p
    se = getattr(empirical, "stderr", None)
    if se is None:
        z = np.full(p.shape, np.nan)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, delta / se, np.where(delta == 0, 0.0, np.inf))
    k = int(np.argmax(np.abs(delta)))
    env = getattr(analytic, "env", None) or getattr(empirical, "env", None)
    where = env.nodes[k] if env is not None else (k,)
    return ComparisonReport(tv_distance=total_variation(p, q), z_scores=z, delta=delta,
                            max_abs_delta=float(np.abs(delta[k])), max_node=where)


def connection_degrees(positions, r: float, obstacles=()) -> np.ndarray:
    """Degree of every station in the LOS connection graph (distance <= r, clear sight)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    pairs = cKDTree(positions).query_pairs(r, output_type="ndarray")
    if len(pairs) and obstacles:
        ok = los_visible_many(positions[pairs[:, 0]], positions[pairs[:, 1]], obstacles)
        pairs = pairs[ok]
    return np.bincount(pairs.ravel(), minlength=len(positions))


@dataclass(frozen=True, eq=False)
class SnapshotDegree:
    env: GridEnvironment = field(repr=False)
    node_mean: np.ndarray
    node_samples: np.ndarray
    global_mean: float
    snapshots: int
    rng: str = RNG_ALGORITHM


def _place(env, rng, count, prob):
    a = env.cell
    k = rng.choice(env.n_free, size=count, p=prob)
    centers = env.positions()[k]
    lo = np.maximum(centers - a / 2, 0.0)
    hi = np.minimum(centers + a / 2, [env.width, env.height])
    pos = lo + rng.random((count, 2)) * (hi - lo)
    rects = [(o.x_m, o.y_m, o.x_max, o.y_max) for o in env.obstacles]
    for _ in range(100):
        bad = np.zeros(count, dtype=bool)
        for x0, y0, x1, y1 in rects:
            bad |= ((pos[:, 0] > x0) & (pos[:, 0] < x1)
                    & (pos[:, 1] > y0) & (pos[:, 1] < y1))
        if not bad.any():
            break
        nb = int(bad.sum())
        pos[bad] = lo[bad] + rng.random((nb, 2)) * (hi[bad] - lo[bad])
    return k, pos


def snapshot_degree(env: GridEnvironment, cfg: SimulationConfig, r: float | None = None,
                    dist: PresenceDistribution | None = None,
                    threads: int = 1) -> SnapshotDegree:
    """Average LOS degree over independent snapshots of ``cfg.stations`` stations.

    Positions are drawn i.i.d. from the analytic presence distribution and
    jittered uniformly inside the node's cell (clipped to the world, never
    inside an obstacle); each degree is credited to the station's node.
    """
    r = env.config.radio_range_m if r is None else float(r)
    if dist is None:
        dist = aggregate_fast(env, cfg.mode, threads=threads)
    prob = np.clip(dist.prob, 0.0, None)
    prob = prob / prob.sum()
    n = env.n_free
    rngs = _streams(cfg.seed, cfg.snapshots)

    def one(i):
        k, pos = _place(env, rngs[i], cfg.stations, prob)
        deg = connection_degrees(pos, r, env.obstacles)
        return (np.bincount(k, weights=deg, minlength=n),
                np.bincount(k, minlength=n), int(deg.sum()))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(cfg.snapshots)))
    else:
        parts = [one(i) for i in range(cfg.snapshots)]
    deg_sum = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    total = 0
    for d, c, tot in parts:
        deg_sum += d
        counts += c
        total += tot
    with np.errstate(invalid="ignore", divide="ignore"):
        node_mean = np.where(counts > 0, deg_sum / np.maximum(counts, 1), np.nan)
    global_mean = total / (cfg.stations * cfg.snapshots)
    return SnapshotDegree(env=env, node_mean=node_mean, node_samples=counts,
                          global_mean=global_mean, snapshots=cfg.snapshots)
