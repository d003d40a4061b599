"""Shortest-path DAGs and exact counts of shortest paths through nodes and edges.

For a pair (s, t) the counts come from two labelling passes over the DAG of
shortest paths towards ``s``.  DAG edges point from the target side toward the
source: ``u -> v`` is present iff ``dist(v) == dist(u) - cost(u, v)``.

* first pass (from ``t``): ``tag1(t) = 1``, an edge copies the tag of its tail
  and a node sums its incoming edges, so ``tag1(n)`` counts shortest ``n``-``t``
  paths and ``tag1(s)`` is the total number of shortest ``s``-``t`` paths;
* second pass (from ``s``): ``tag2(s) = tag1(s)``, an edge ``e = u -> v`` gets
  ``tag2(v) * tag1(e) / tag1(v)`` and a node sums its outgoing edges.

``tag2`` then counts the shortest ``s``-``t`` paths through each node or edge.
All tags are Python integers or :class:`fractions.Fraction`, never floats.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .environment import GridEnvironment, NodeId

__all__ = [
    "PathCountCapExceeded",
    "PathCounts",
    "ShortestPathDag",
    "UnreachableTarget",
    "closed_form_count",
    "enumerate_paths_bruteforce",
    "path_counts_from",
    "sample_shortest_path",
    "single_source_dag",
    "through_counts",
]


class UnreachableTarget(ValueError):
    pass


class PathCountCapExceeded(RuntimeError):
    pass


def _tol(d) -> float:
    return 1e-9 * max(1.0, abs(d))


@dataclass(frozen=True, eq=False)
class ShortestPathDag:
    """All shortest paths towards ``source``.

    ``preds[n]`` lists the DAG successors of ``n`` on the way to the source
    (the neighbours one step closer), ``succs[n]`` the nodes one step further.
    ``order`` holds every reached node sorted by non-decreasing distance.
    """

    source: NodeId
    dist: dict
    preds: dict
    succs: dict
    order: tuple
    uniform_cost: bool

    def edges(self):
        """DAG edges ``(u, v)`` oriented away from the target side, i.e. ``v`` closer to the source."""
        for v, ups in self.succs.items():
            for u in ups:
                yield (u, v)


def single_source_dag(env: GridEnvironment, s) -> ShortestPathDag:
    """Distances from ``s`` and the DAG of every edge lying on a shortest path to ``s``.

    Uniform-cost grids use breadth-first search; weighted grids use Dijkstra and
    keep every predecessor whose distance ties within a relative 1e-9.
    """
    s = NodeId(*s)
    if s not in env.adjacency:
        raise KeyError(s)
    adj = env.adjacency
    dist = {s: 0}
    order = []
    if env.uniform_cost:
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            du = dist[u] + 1
            for v, _ in adj[u]:
                if v not in dist:
                    dist[v] = du
                    queue.append(v)
    else:
        dist = {s: 0.0}
        done = set()
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            order.append(u)
            for v, c in adj[u]:
                nd = d + c
                if nd < dist.get(v, math.inf) - _tol(nd):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))

    preds = {n: [] for n in order}
    succs = {n: [] for n in order}
    for v in order:
        dv = dist[v]
        for u, c in adj[v]:
            if env.uniform_cost:
                ok = dist[u] == dv - 1
            else:
                ok = abs(dist[u] + c - dv) <= _tol(dv)
            if ok:
                preds[v].append(u)
                succs[u].append(v)
    order.sort(key=dist.__getitem__)
    return ShortestPathDag(
        source=s, dist=dist,
        preds={k: tuple(v) for k, v in preds.items()},
        succs={k: tuple(v) for k, v in succs.items()},
        order=tuple(order), uniform_cost=env.uniform_cost,
    )


def path_counts_from(dag: ShortestPathDag) -> dict:
    """Number of shortest paths from the DAG source to every node (exact ints)."""
    sigma = {dag.source: 1}
    for n in dag.order[1:]:
        sigma[n] = sum(sigma[p] for p in dag.preds[n])
    return sigma


def closed_form_count(s, t) -> int:
    """Shortest lattice paths between ``s`` and ``t`` on an obstacle-free uniform grid."""
    dx = abs(s[0] - t[0])
    dy = abs(s[1] - t[1])
    return math.comb(dx + dy, dx)


@dataclass(frozen=True, eq=False)
class PathCounts:
    """Labels of the two passes for one (s, t) pair.

    Nodes missing from ``node_tag2`` lie on no shortest path; their count is 0.
    Edge keys ``(u, v)`` follow the DAG orientation (``v`` closer to ``s``).
    """

    source: NodeId
    target: NodeId
    length: float
    n_paths: int
    node_tag1: dict
    node_tag2: dict
    edge_tag1: dict
    edge_tag2: dict
    # Order used by the second pass, source first.
    levels: tuple

    def through(self, n) -> int:
        return self.node_tag2.get(NodeId(*n), 0)


def through_counts(dag: ShortestPathDag, t) -> PathCounts:
    """Run the two labelling passes for the pair ``(dag.source, t)``."""
    t = NodeId(*t)
    s = dag.source
    if t not in dag.dist:
        raise UnreachableTarget(t)

    # Nodes reachable from t in the DAG are the ones on some shortest s-t path.
    # Distance order guarantees every tail is tagged before its heads.
    dist = dag.dist
    on_path = {t}
    stack = [t]
    while stack:
        u = stack.pop()
        for v in dag.preds[u]:
            if v not in on_path:
                on_path.add(v)
                stack.append(v)
    seq = sorted(on_path, key=dist.__getitem__, reverse=True)  # t first, s last

    tag1 = {}
    etag1 = {}
    for n in seq:
        if n == t:
            tag1[n] = 1
        else:
            tag1[n] = sum(etag1[(u, n)] for u in dag.succs[n] if u in on_path)
        for v in dag.preds[n]:
            etag1[(n, v)] = tag1[n]

    tag2 = {}
    etag2 = {}
    for n in reversed(seq):  # s first
        if n == s:
            tag2[n] = tag1[n]
        else:
            tag2[n] = sum(etag2[(n, v)] for v in dag.preds[n])
        for u in dag.succs[n]:
            if u in on_path:
                etag2[(u, n)] = _ratio(tag2[n] * etag1[(u, n)], tag1[n])

    return PathCounts(
        source=s, target=t, length=dist[t], n_paths=tag1[s],
        node_tag1=tag1, node_tag2=tag2, edge_tag1=etag1, edge_tag2=etag2,
        levels=tuple(reversed(seq)),
    )


def _ratio(num: int, den: int):
    q, rem = divmod(num, den)
    return q if rem == 0 else Fraction(num, den)


def enumerate_paths_bruteforce(env: GridEnvironment, s, t, cap: int = 10**6) -> list:
    """Every minimum-cost ``s``-``t`` path, found by branch-and-bound over simple paths.

    Independent of the BFS/Dijkstra machinery: the only pruning is a Manhattan
    lower bound scaled by the cheapest edge cost.
    """
    s, t = NodeId(*s), NodeId(*t)
    if s == t:
        return [[s]]
    adj = env.adjacency
    cmin = min((c for nbrs in adj.values() for _, c in nbrs), default=1)
    steps_per_cost = cmin

    def h(n):
        return (abs(n[0] - t[0]) + abs(n[1] - t[1])) * steps_per_cost

    best = [math.inf]
    found: list = []
    path = [s]
    onpath = {s}

    def tol(x):
        return 0 if env.uniform_cost else _tol(x)

    def dfs(u, cost):
        if cost + h(u) > best[0] + tol(best[0]):
            return
        if u == t:
            if cost < best[0] - tol(cost):
                best[0] = cost
                found.clear()
            found.append(list(path))
            if len(found) > cap:
                raise PathCountCapExceeded(f"more than {cap} shortest paths")
            return
        nbrs = sorted(adj[u], key=lambda vc: h(vc[0]))
        for v, c in nbrs:
            if v in onpath:
                continue
            path.append(v)
            onpath.add(v)
            dfs(v, cost + c)
            onpath.discard(v)
            path.pop()

    dfs(s, 0)
    return found


def sample_shortest_path(counts: PathCounts, rng) -> list:
    """Draw one shortest ``s``-``t`` path uniformly at random.

    Walking from ``s``, the next node ``u`` behind the edge ``u -> n`` is taken
    with probability ``tag2(u -> n) / tag2(n)``, which equals
    ``tag1(u) / tag1(n)``.  ``rng`` is a :class:`numpy.random.Generator` or a
    :class:`random.Random`.
    """
    s, t = counts.source, counts.target
    draw = rng.random
    heads = {}
    for (u, v) in counts.edge_tag1:
        heads.setdefault(v, []).append(u)
    path = [s]
    n = s
    while n != t:
        options = heads[n]
        total = counts.node_tag1[n]
        x = draw() * total
        acc = 0
        chosen = options[-1]
        for u in options:
            acc += counts.node_tag1[u]
            if x < acc:
                chosen = u
                break
        path.append(chosen)
        n = chosen
    return path
