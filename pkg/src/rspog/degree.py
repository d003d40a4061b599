"""Local station density and mean degree of the connection graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coverage import CoverageMap
from .distribution import PresenceDistribution
from .environment import GridEnvironment

__all__ = [
    "DegreeMap",
    "ShapeMismatch",
    "global_mean_degree",
    "local_density",
    "mean_degree_map",
]


class ShapeMismatch(ValueError):
    pass


def local_density(dist, N: int, a: float) -> np.ndarray:
    """Stations per m^2 at each node: ``N * P(n) / a**2``.

    ``dist`` is a :class:`PresenceDistribution` or a bare probability vector.
    """
    prob = dist.prob if isinstance(dist, PresenceDistribution) else np.asarray(dist, float)
    return N * prob / (a * a)


@dataclass(frozen=True, eq=False)
class DegreeMap:
    env: GridEnvironment | None = field(repr=False)
    density: np.ndarray
    degree: np.ndarray
    station_count: int
    global_mean: float | None = None

    def as_grid(self) -> np.ndarray:
        return self.env.to_grid(self.degree)

    def summary(self) -> str:
        """Plain-text block: global mean, minimum and maximum node degree with coordinates."""
        lines = []
        if self.global_mean is not None:
            lines.append(f"global_mean_degree: {self.global_mean:.12g}")
        k_min, k_max = int(np.argmin(self.degree)), int(np.argmax(self.degree))
        for label, k in (("min", k_min), ("max", k_max)):
            where = ""
            if self.env is not None:
                x, y = self.env.position(self.env.nodes[k])
                where = f" at x_m={x:g} y_m={y:g}"
            lines.append(f"{label}_node_degree: {self.degree[k]:.12g}{where}")
        lines.append(f"station_count: {self.station_count}")
        return "\n".join(lines) + "\n"


def mean_degree_map(cov, dens, N: int | None = None, self_exclusion: bool = False,
                    env: GridEnvironment | None = None) -> DegreeMap:
    """``deg(n) = C(n) * rho(n)``, optionally scaled by ``(N - 1) / N``."""
    area = cov.area if isinstance(cov, CoverageMap) else np.asarray(cov, float)
    dens = np.asarray(dens, dtype=float)
    if area.shape != dens.shape:
        raise ShapeMismatch(f"coverage {area.shape} vs density {dens.shape}")
    if env is None and isinstance(cov, CoverageMap):
        env = cov.env
    degree = area * dens
    if N is None:
        N = int(round(dens.sum() * env.cell ** 2)) if env is not None else 0
    if self_exclusion and N > 0:
        degree = degree * (N - 1) / N
    return DegreeMap(env=env, density=dens, degree=degree, station_count=N)


def global_mean_degree(dist, deg) -> float:
    """Expected degree of a station drawn from the presence distribution."""
    prob = dist.prob if isinstance(dist, PresenceDistribution) else np.asarray(dist, float)
    degree = deg.degree if isinstance(deg, DegreeMap) else np.asarray(deg, float)
    if prob.shape != degree.shape:
        raise ShapeMismatch(f"distribution {prob.shape} vs degree {degree.shape}")
    return float(np.dot(prob, degree))
