"""Grid environment with rectangular obstacles.

Stations live on the nodes of a 4-connected lattice with spacing ``cell_size_m``.
Obstacles are axis-aligned rectangles; every node inside a (closed) obstacle
rectangle is removed together with its edges, and any remaining edge whose
open segment crosses an obstacle interior is removed as well.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "ConfigError",
    "DisconnectedEnvironment",
    "EnvironmentConfig",
    "GridEnvironment",
    "HotspotWeight",
    "NodeId",
    "NonDivisibleDimensions",
    "Obstacle",
    "ObstacleOutOfBounds",
    "OverlappingObstacles",
    "SpeedOverride",
    "UnknownNode",
    "build_environment",
    "lattice_config",
    "load_config",
    "neighbors",
    "validate_zone_spacing",
]

_EPS = 1e-9


class ConfigError(ValueError):
    """Invalid environment configuration."""


class DisconnectedEnvironment(ConfigError):
    pass


class ObstacleOutOfBounds(ConfigError):
    def __init__(self, index: int, message: str):
        super().__init__(f"obstacles[{index}]: {message}")
        self.index = index


class OverlappingObstacles(ConfigError):
    def __init__(self, first: int, second: int):
        super().__init__(f"obstacles[{first}] and obstacles[{second}] overlap")
        self.indices = (first, second)


class NonDivisibleDimensions(ConfigError):
    pass


class UnknownNode(KeyError):
    pass


class NodeId(NamedTuple):
    """Lattice node by (column, row) index; row 0 is the bottom of the world."""

    i: int
    j: int


@dataclass(frozen=True)
class Obstacle:
    x_m: float
    y_m: float
    w_m: float
    h_m: float

    def __post_init__(self):
        if not (self.w_m > 0 and self.h_m > 0):
            raise ConfigError(f"obstacle extent must be positive, got {self.w_m}x{self.h_m}")

    @property
    def x_max(self) -> float:
        return self.x_m + self.w_m

    @property
    def y_max(self) -> float:
        return self.y_m + self.h_m

    def contains_closed(self, x: float, y: float) -> bool:
        return (self.x_m - _EPS <= x <= self.x_max + _EPS
                and self.y_m - _EPS <= y <= self.y_max + _EPS)

    def contains_open(self, x: float, y: float) -> bool:
        return self.x_m < x < self.x_max and self.y_m < y < self.y_max

    def segment_hits_interior(self, p, q) -> bool:
        """Exact test: does the open segment ``pq`` meet the open rectangle?"""
        return _segment_hits_open_rect(p, q, self.x_m, self.y_m, self.x_max, self.y_max)

    def gap_to(self, other: "Obstacle") -> float:
        dx = max(other.x_m - self.x_max, self.x_m - other.x_max, 0.0)
        dy = max(other.y_m - self.y_max, self.y_m - other.y_max, 0.0)
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class SpeedOverride:
    """Speed multiplier for every edge whose midpoint lies in the region."""

    x_m: float
    y_m: float
    w_m: float
    h_m: float
    speed: float

    def covers(self, x: float, y: float) -> bool:
        return (self.x_m - _EPS <= x <= self.x_m + self.w_m + _EPS
                and self.y_m - _EPS <= y <= self.y_m + self.h_m + _EPS)


@dataclass(frozen=True)
class HotspotWeight:
    """Source/destination selection weight for every node in the region."""

    x_m: float
    y_m: float
    w_m: float
    h_m: float
    weight: float

    def covers(self, x: float, y: float) -> bool:
        return (self.x_m - _EPS <= x <= self.x_m + self.w_m + _EPS
                and self.y_m - _EPS <= y <= self.y_m + self.h_m + _EPS)


@dataclass(frozen=True)
class EnvironmentConfig:
    width_m: float
    height_m: float
    cell_size_m: float
    radio_range_m: float
    station_count: int
    obstacles: tuple[Obstacle, ...] = ()
    edge_speed_overrides: tuple[SpeedOverride, ...] = ()
    hotspot_weights: tuple[HotspotWeight, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "edge_speed_overrides", tuple(self.edge_speed_overrides))
        object.__setattr__(self, "hotspot_weights", tuple(self.hotspot_weights))

    @classmethod
    def from_dict(cls, data: dict) -> "EnvironmentConfig":
        """Parse a config mapping, rejecting unknown fields with field-level messages."""
        return _parse_config(data)

    def to_dict(self) -> dict:
        out = {
            "width_m": self.width_m,
            "height_m": self.height_m,
            "cell_size_m": self.cell_size_m,
            "radio_range_m": self.radio_range_m,
            "station_count": self.station_count,
            "obstacles": [vars(o) for o in self.obstacles],
        }
        if self.edge_speed_overrides:
            out["edge_speed_overrides"] = [vars(o) for o in self.edge_speed_overrides]
        if self.hotspot_weights:
            out["hotspot_weights"] = [vars(h) for h in self.hotspot_weights]
        return out


_FIELDS = {
    "width_m", "height_m", "cell_size_m", "radio_range_m", "station_count",
    "obstacles", "edge_speed_overrides", "hotspot_weights",
}
_REQUIRED = ("width_m", "height_m", "cell_size_m", "radio_range_m", "station_count")
_RECT_FIELDS = ("x_m", "y_m", "w_m", "h_m")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    return float(value)


def _record(item, where: str, extra: str | None):
    if not isinstance(item, dict):
        raise ConfigError(f"{where}: expected an object")
    allowed = set(_RECT_FIELDS) | ({extra} if extra else set())
    unknown = set(item) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = [k for k in sorted(allowed) if k not in item]
    if missing:
        raise ConfigError(f"{where}: missing field(s) {missing}")
    return {k: _number(item[k], f"{where}.{k}") for k in allowed}


def _parse_config(data: dict) -> EnvironmentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"config: missing field {key!r}")
    values = {k: _number(data[k], k) for k in _REQUIRED}
    count = data["station_count"]
    if isinstance(count, bool) or not isinstance(count, int) or count <= 0:
        raise ConfigError(f"station_count: expected a positive integer, got {count!r}")
    for key in ("cell_size_m", "radio_range_m"):
        if values[key] <= 0:
            raise ConfigError(f"{key}: must be positive")

    def records(key, extra, cls):
        raw = data.get(key, [])
        if not isinstance(raw, list):
            raise ConfigError(f"{key}: expected a list")
        out = []
        for idx, item in enumerate(raw):
            where = f"{key}[{idx}]"
            fields = _record(item, where, extra)
            try:
                out.append(cls(**fields))
            except ConfigError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        return tuple(out)

    obstacles = records("obstacles", None, Obstacle)
    overrides = records("edge_speed_overrides", "speed", SpeedOverride)
    hotspots = records("hotspot_weights", "weight", HotspotWeight)
    for idx, o in enumerate(overrides):
        if o.speed <= 0:
            raise ConfigError(f"edge_speed_overrides[{idx}].speed: must be positive")
    for idx, h in enumerate(hotspots):
        if h.weight <= 0:
            raise ConfigError(f"hotspot_weights[{idx}].weight: must be positive")
    return EnvironmentConfig(
        width_m=values["width_m"],
        height_m=values["height_m"],
        cell_size_m=values["cell_size_m"],
        radio_range_m=values["radio_range_m"],
        station_count=count,
        obstacles=obstacles,
        edge_speed_overrides=overrides,
        hotspot_weights=hotspots,
    )


def load_config(path) -> EnvironmentConfig:
    """Read an environment config file (JSON syntax)."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return _parse_config(data)


def lattice_config(cols: int, rows: int, cell: float = 1.0, blocked: Iterable = (),
                   radio_range: float = 1.0, station_count: int = 1) -> EnvironmentConfig:
    """Config for a ``cols x rows`` node lattice with single lattice nodes blocked.

    Each blocked node (i, j) becomes a small square obstacle centred on it, which
    removes that node and its four edges and nothing else.
    """
    half = 0.25 * cell
    obstacles = [Obstacle(i * cell - half, j * cell - half, 2 * half, 2 * half)
                 for i, j in blocked]
    W, H = (cols - 1) * cell, (rows - 1) * cell
    # Border nodes would push their obstacle outside the world; clip it in.
    clipped = []
    for o in obstacles:
        x0, y0 = max(o.x_m, 0.0), max(o.y_m, 0.0)
        x1, y1 = min(o.x_max, W), min(o.y_max, H)
        clipped.append(Obstacle(x0, y0, x1 - x0, y1 - y0))
    return EnvironmentConfig(
        width_m=W, height_m=H, cell_size_m=cell, radio_range_m=radio_range,
        station_count=station_count, obstacles=tuple(clipped),
    )


def _segment_hits_open_rect(p, q, x0, y0, x1, y1) -> bool:
    # Liang-Barsky clip of the segment against the rectangle; a hit needs a
    # parameter interval of positive length strictly inside every slab.
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    lo, hi = 0.0, 1.0
    for d, a, b in ((dx, x0 - px, x1 - px), (dy, y0 - py, y1 - py)):
        if d == 0.0:
            if not (a < 0.0 < b):
                return False
            continue
        t0, t1 = a / d, b / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo, hi = max(lo, t0), min(hi, t1)
        if hi - lo <= 1e-12:
            return False
    return hi - lo > 1e-12


@dataclass(frozen=True, eq=False)
class GridEnvironment:
    """Immutable lattice graph plus the continuous obstacle geometry.

    Free nodes carry a compact index ``0..n_free-1`` in row-major order
    (row ``j`` outer, column ``i`` inner); the array views ``neighbor_index``
    and ``neighbor_cost`` are laid out by that index, direction order
    (+x, -x, +y, -y), with -1 / inf marking a missing edge.
    """

    config: EnvironmentConfig
    cols: int
    rows: int
    free_mask: np.ndarray          # (rows, cols) bool, indexed [j, i]
    nodes: tuple[NodeId, ...]
    index: dict
    adjacency: dict
    neighbor_index: np.ndarray     # (n_free, 4) int
    neighbor_cost: np.ndarray      # (n_free, 4) float
    uniform_cost: bool
    node_weights: np.ndarray = field(repr=False)

    @property
    def cell(self) -> float:
        return self.config.cell_size_m

    @property
    def width(self) -> float:
        return self.config.width_m

    @property
    def height(self) -> float:
        return self.config.height_m

    @property
    def obstacles(self) -> tuple[Obstacle, ...]:
        return self.config.obstacles

    @property
    def n_free(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def position(self, n) -> tuple[float, float]:
        return (n[0] * self.cell, n[1] * self.cell)

    def positions(self) -> np.ndarray:
        """(n_free, 2) array of node coordinates in meters."""
        idx = np.array(self.nodes, dtype=float).reshape(-1, 2)
        return idx * self.cell

    def is_free(self, n) -> bool:
        return n in self.index

    def to_grid(self, values, fill: float = 0.0) -> np.ndarray:
        """Scatter a per-free-node vector into a (rows, cols) array."""
        out = np.full((self.rows, self.cols), fill, dtype=float)
        ij = np.array(self.nodes, dtype=int).reshape(-1, 2)
        out[ij[:, 1], ij[:, 0]] = np.asarray(values, dtype=float)
        return out

    def from_grid(self, grid) -> np.ndarray:
        ij = np.array(self.nodes, dtype=int).reshape(-1, 2)
        return np.asarray(grid)[ij[:, 1], ij[:, 0]]

    def edges(self):
        """Undirected edges as ``(u, v, cost)`` with ``u < v``."""
        for u, nbrs in self.adjacency.items():
            for v, c in nbrs:
                if u < v:
                    yield u, v, c


def _check_config(cfg: EnvironmentConfig):
    a = cfg.cell_size_m
    for name in ("width_m", "height_m"):
        value = getattr(cfg, name)
        if value < 0:
            raise ConfigError(f"{name}: must be non-negative")
        ratio = value / a
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise NonDivisibleDimensions(
                f"{name}={value} is not an integer multiple of cell_size_m={a}")
    if cfg.width_m == 0 and cfg.height_m == 0:
        raise ConfigError("width_m/height_m: the world must contain at least two nodes")
    for idx, o in enumerate(cfg.obstacles):
        if (o.x_m < -_EPS or o.y_m < -_EPS
                or o.x_max > cfg.width_m + _EPS or o.y_max > cfg.height_m + _EPS):
            raise ObstacleOutOfBounds(idx, "lies outside the environment rectangle")
    obs = cfg.obstacles
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            a_, b_ = obs[i], obs[j]
            if (a_.x_m <= b_.x_max and b_.x_m <= a_.x_max
                    and a_.y_m <= b_.y_max and b_.y_m <= a_.y_max):
                raise OverlappingObstacles(i, j)


def build_environment(config: EnvironmentConfig) -> GridEnvironment:
    """Validate ``config`` and build the lattice graph with obstacles carved out.

    Raises
    ------
    NonDivisibleDimensions, ObstacleOutOfBounds, OverlappingObstacles
        When the configuration breaks its invariants.
    DisconnectedEnvironment
        When the free nodes do not form a single connected component.
    """
    _check_config(config)
    a = config.cell_size_m
    cols = int(round(config.width_m / a)) + 1
    rows = int(round(config.height_m / a)) + 1

    free = np.ones((rows, cols), dtype=bool)
    for o in config.obstacles:
        i0 = max(0, math.ceil((o.x_m - _EPS) / a))
        i1 = min(cols - 1, math.floor((o.x_max + _EPS) / a))
        j0 = max(0, math.ceil((o.y_m - _EPS) / a))
        j1 = min(rows - 1, math.floor((o.y_max + _EPS) / a))
        if i0 <= i1 and j0 <= j1:
            free[j0:j1 + 1, i0:i1 + 1] = False

    nodes = tuple(NodeId(i, j) for j in range(rows) for i in range(cols) if free[j, i])
    index = {n: k for k, n in enumerate(nodes)}
    if not nodes:
        raise DisconnectedEnvironment("every node is covered by an obstacle")

    overrides = config.edge_speed_overrides
    uniform = not overrides
    steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    adjacency = {}
    nbr_idx = np.full((len(nodes), 4), -1, dtype=np.int64)
    nbr_cost = np.full((len(nodes), 4), np.inf)
    for k, n in enumerate(nodes):
        p = (n.i * a, n.j * a)
        out = []
        for d, (di, dj) in enumerate(steps):
            m = NodeId(n.i + di, n.j + dj)
            if m not in index:
                continue
            q = (m.i * a, m.j * a)
            if any(o.segment_hits_interior(p, q) for o in config.obstacles):
                continue
            if uniform:
                cost = 1
            else:
                mx, my = (p[0] + q[0]) / 2, (p[1] + q[1]) / 2
                speed = 1.0
                for ov in overrides:
                    if ov.covers(mx, my):
                        speed *= ov.speed
                cost = a / speed
            out.append((m, cost))
            nbr_idx[k, d] = index[m]
            nbr_cost[k, d] = cost
        adjacency[n] = tuple(out)

    # Connectivity of the free subgraph.
    seen = {nodes[0]}
    queue = deque([nodes[0]])
    while queue:
        u = queue.popleft()
        for v, _ in adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    if len(seen) != len(nodes):
        raise DisconnectedEnvironment(
            f"free subgraph has unreachable nodes ({len(nodes) - len(seen)} of {len(nodes)}"
            " cannot be reached from the first free node)")

    weights = np.ones(len(nodes))
    for k, n in enumerate(nodes):
        for h in config.hotspot_weights:
            if h.covers(n.i * a, n.j * a):
                weights[k] *= h.weight

    nbr_idx.setflags(write=False)
    nbr_cost.setflags(write=False)
    free.setflags(write=False)
    weights.setflags(write=False)
    return GridEnvironment(
        config=config, cols=cols, rows=rows, free_mask=free, nodes=nodes,
        index=index, adjacency=adjacency, neighbor_index=nbr_idx,
        neighbor_cost=nbr_cost, uniform_cost=uniform, node_weights=weights,
    )


def neighbors(env: GridEnvironment, n) -> list:
    """Adjacent free nodes of ``n`` as ``(NodeId, cost)`` pairs."""
    key = NodeId(*n)
    if key not in env.adjacency:
        raise UnknownNode(key)
    return list(env.adjacency[key])


def validate_zone_spacing(env: GridEnvironment) -> list[str]:
    """Warnings for obstacle/obstacle and obstacle/border gaps below 2r.

    Never raises; the numeric coverage evaluator does not depend on the spacing.
    """
    r2 = 2 * env.config.radio_range_m
    W, H = env.width, env.height
    warnings = []
    obs = env.obstacles
    for i, o in enumerate(obs):
        for j in range(i + 1, len(obs)):
            gap = o.gap_to(obs[j])
            if gap < r2 - _EPS:
                warnings.append(
                    f"obstacles[{i}] and obstacles[{j}] are {gap:g} m apart (< {r2:g} m)")
        for side, gap in (("left", o.x_m), ("right", W - o.x_max),
                          ("bottom", o.y_m), ("top", H - o.y_max)):
            if gap < r2 - _EPS:
                warnings.append(
                    f"obstacles[{i}] is {gap:g} m from the {side} border (< {r2:g} m)")
    return warnings
