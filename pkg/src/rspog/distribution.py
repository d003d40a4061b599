"""Stationary presence distribution of stations on the grid.

For one trip from ``s`` to ``t`` a node ``n`` receives
``N_sp(n; s, t) / (N_sp(s, t) * L_sp(s, t))``: the share of shortest paths
through ``n`` divided by the trip length.  Summing over every ordered pair of
distinct free nodes and normalizing once gives the distribution.

Two aggregation modes exist:

``per-trip``
    every pair contributes the value above (each trip carries the same total
    mass, up to the endpoint term);
``time-weighted``
    each pair's contribution is multiplied by ``L_sp``, i.e. mass proportional
    to the time spent travelling, which is what a long-running walker sees.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .environment import GridEnvironment
from .paths import PathCounts, single_source_dag, through_counts

__all__ = [
    "DegeneratePair",
    "MODES",
    "PresenceDistribution",
    "aggregate_distribution",
    "aggregate_fast",
    "all_pairs_distances",
    "pair_presence",
]

MODES = ("per-trip", "time-weighted")


class DegeneratePair(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PresenceDistribution:
    """Per-node presence probability, indexed like ``env.nodes``."""

    env: GridEnvironment = field(repr=False)
    prob: np.ndarray
    mode: str
    pair_count: int
    edge_prob: dict | None = None

    def __getitem__(self, n) -> float:
        return float(self.prob[self.env.index[tuple(n)]])

    def as_grid(self) -> np.ndarray:
        """(rows, cols) array, removed nodes set to 0, row 0 at the bottom."""
        return self.env.to_grid(self.prob)


def _check_mode(mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def pair_presence(counts: PathCounts, edges: bool = False, exact: bool = False):
    """Per-node presence values of one trip; optionally also per-edge values.

    Returns ``{node: value}`` (or ``(nodes, edges)`` when ``edges`` is set).
    With ``exact=True`` and integer path lengths the values are Fractions.
    """
    if counts.source == counts.target:
        raise DegeneratePair(counts.source)
    N, L = counts.n_paths, counts.length
    if exact:
        denom = N * Fraction(L)
        node_vals = {n: Fraction(v) / denom for n, v in counts.node_tag2.items()}
    elif isinstance(L, int):
        denom = N * L
        node_vals = {n: v / denom for n, v in counts.node_tag2.items()}
    else:
        node_vals = {n: (v / N) / L for n, v in counts.node_tag2.items()}
    if not edges:
        return node_vals
    if exact:
        edge_vals = {e: Fraction(v) / denom for e, v in counts.edge_tag2.items()}
    else:
        edge_vals = {e: float(Fraction(v) / N) / L for e, v in counts.edge_tag2.items()}
    return node_vals, edge_vals


def _undirected(u, v):
    return (u, v) if u < v else (v, u)


def aggregate_distribution(env: GridEnvironment, mode: str = "per-trip",
                           weights=None, edges: bool = False) -> PresenceDistribution:
    """Reference aggregation: one labelling double search per ordered pair.

    ``weights`` is an optional per-node selection weight (defaults to the
    environment's hotspot weights); pair ``(s, t)`` is weighted by ``w(s) * w(t)``.
    Cost is quadratic in the number of nodes times the DAG size, so this path
    is meant for small grids and as the oracle for :func:`aggregate_fast`.
    """
    _check_mode(mode)
    w = env.node_weights if weights is None else np.asarray(weights, dtype=float)
    nodes = env.nodes
    index = env.index
    acc = np.zeros(env.n_free)
    eacc: dict = {}
    pairs = 0
    for si, s in enumerate(nodes):
        dag = single_source_dag(env, s)
        for ti, t in enumerate(nodes):
            if ti == si:
                continue
            counts = through_counts(dag, t)
            pw = w[si] * w[ti]
            if mode == "time-weighted":
                pw *= counts.length
            vals = pair_presence(counts, edges=edges)
            if edges:
                vals, evals = vals
                for (u, v), x in evals.items():
                    key = _undirected(u, v)
                    eacc[key] = eacc.get(key, 0.0) + pw * x
            for n, x in vals.items():
                acc[index[n]] += pw * x
            pairs += 1
    total = acc.sum()
    prob = acc / total if total > 0 else acc
    edge_prob = None
    if edges:
        etotal = sum(eacc.values())
        edge_prob = {k: v / etotal for k, v in eacc.items()} if etotal > 0 else eacc
    return PresenceDistribution(env=env, prob=prob, mode=mode, pair_count=pairs,
                                edge_prob=edge_prob)


def _graph(env: GridEnvironment) -> csr_matrix:
    nbr, cost = env.neighbor_index, env.neighbor_cost
    rows, dirs = np.nonzero(nbr >= 0)
    n = env.n_free
    return csr_matrix((cost[rows, dirs], (rows, nbr[rows, dirs])), shape=(n, n))


def all_pairs_distances(env: GridEnvironment, sources=None) -> np.ndarray:
    """Shortest-path costs from ``sources`` (compact indices) to every free node."""
    g = _graph(env)
    if sources is None:
        sources = np.arange(env.n_free)
    return shortest_path(g, method="D", directed=False, unweighted=env.uniform_cost,
                         indices=np.asarray(sources))


def _pred_masks(env, dist):
    """``masks[k][b, n]``: neighbour of ``n`` in direction ``k`` precedes it on a shortest path."""
    nbr, cost = env.neighbor_index, env.neighbor_cost
    safe = np.where(nbr >= 0, nbr, 0)
    tol = 0.0 if env.uniform_cost else 1e-9
    masks = []
    for k in range(4):
        dm = dist[:, safe[:, k]]
        step = np.where(np.isfinite(cost[:, k]), cost[:, k], 0.0)
        ok = np.abs(dm + step - dist) <= tol * np.maximum(1.0, dist)
        masks.append(ok & (nbr[:, k] >= 0))
    return masks, safe


def _accumulate_chunk(env, sources, mode, w, with_edges):
    """Contribution of the given sources, via one forward and one backward sweep each."""
    n = env.n_free
    B = len(sources)
    rows = np.arange(B)
    dist = all_pairs_distances(env, sources)
    masks, safe = _pred_masks(env, dist)
    order = np.argsort(dist, axis=1, kind="stable")

    # Forward sweep: sigma[b, n] shortest paths from source b to n.
    sigma = np.zeros((B, n))
    sigma[rows, sources] = 1.0
    for pos in range(1, n):
        col = order[:, pos]
        acc = np.zeros(B)
        for k in range(4):
            m = safe[col, k]
            acc += np.where(masks[k][rows, col], sigma[rows, m], 0.0)
        sigma[rows, col] = acc

    # Per-target weight divided by the path count of that target.
    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == "per-trip":
            c = w[None, :] / (sigma * dist)
        else:
            c = w[None, :] / sigma
    c[rows, sources] = 0.0

    # Backward sweep: D[b, n] = c[b, n] + sum of D over DAG children of n.
    D = c
    for pos in range(n - 1, 0, -1):
        col = order[:, pos]
        d_col = D[rows, col]
        for k in range(4):
            hit = masks[k][rows, col]
            if hit.any():
                m = safe[col, k]
                D[rows[hit], m[hit]] += d_col[hit]

    ws = w[sources][:, None]
    node_part = (ws * sigma * D).sum(axis=0)
    edge_part = None
    if with_edges:
        edge_part = np.zeros((n, 4))
        for k in range(4):
            flow = ws * sigma[:, safe[:, k]] * D
            edge_part[:, k] = np.where(masks[k], flow, 0.0).sum(axis=0)
    return node_part, edge_part


def aggregate_fast(env: GridEnvironment, mode: str = "per-trip", weights=None,
                   edges: bool = False, threads: int = 1,
                   chunk_size: int = 256) -> PresenceDistribution:
    """Same result as :func:`aggregate_distribution` in O(n * m) per source.

    For a fixed source the per-target sums collapse into a dependency-style
    accumulation on the shortest-path DAG: with ``sigma`` the path counts from
    the source and ``c(t) = w(t) / (sigma(t) * L(t))`` (``L`` dropped in
    time-weighted mode), ``D(n) = c(n) + sum(D(child))`` and node ``n`` gains
    ``w(s) * sigma(n) * D(n)``.  Sources are processed in fixed-size chunks whose
    partial maps are added in chunk order, so the result does not depend on
    ``threads``.
    """
    _check_mode(mode)
    w = env.node_weights if weights is None else np.asarray(weights, dtype=float)
    n = env.n_free
    chunks = [np.arange(i, min(i + chunk_size, n)) for i in range(0, n, chunk_size)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda src: _accumulate_chunk(env, src, mode, w, edges), chunks))
    else:
        parts = [_accumulate_chunk(env, src, mode, w, edges) for src in chunks]

    acc = np.zeros(n)
    eacc = np.zeros((n, 4)) if edges else None
    for node_part, edge_part in parts:
        acc += node_part
        if edges:
            eacc += edge_part
    prob = acc / acc.sum() if acc.sum() > 0 else acc

    edge_prob = None
    if edges:
        edge_prob = {}
        nodes = env.nodes
        for a, k in zip(*np.nonzero(env.neighbor_index >= 0)):
            key = _undirected(nodes[a], nodes[env.neighbor_index[a, k]])
            edge_prob[key] = edge_prob.get(key, 0.0) + eacc[a, k]
        etotal = sum(edge_prob.values())
        if etotal > 0:
            edge_prob = {k: v / etotal for k, v in edge_prob.items()}
    return PresenceDistribution(env=env, prob=prob, mode=mode,
                                pair_count=n * (n - 1), edge_prob=edge_prob)
