import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binomtest, chisquare

from conftest import grid
from rspog.environment import EnvironmentConfig, build_environment, DisconnectedEnvironment
from rspog.paths import (
    PathCountCapExceeded,
    UnreachableTarget,
    closed_form_count,
    enumerate_paths_bruteforce,
    path_counts_from,
    sample_shortest_path,
    single_source_dag,
    through_counts,
)


def monotone_paths(dx, dy):
    """All staircase paths from (0, 0) to (dx, dy) by choosing which steps go in x."""
    out = []
    for xs in itertools.combinations(range(dx + dy), dx):
        x = y = 0
        path = [(0, 0)]
        for k in range(dx + dy):
            if k in xs:
                x += 1
            else:
                y += 1
            path.append((x, y))
        out.append(path)
    return out


def test_dag_2x2():
    dag = single_source_dag(grid(2, 2), (0, 0))
    assert dag.dist[(1, 1)] == 2
    assert len(list(dag.edges())) == 4


def test_dag_4x4_manhattan():
    dag = single_source_dag(grid(4, 4), (0, 0))
    assert dag.dist[(3, 3)] == 6


def test_dag_detour_free_with_center_removed():
    env = grid(5, 5, blocked=[(2, 2)])
    dag = single_source_dag(env, (0, 0))
    brute = enumerate_paths_bruteforce(env, (0, 0), (4, 4))
    assert dag.dist[(4, 4)] == len(brute[0]) - 1 == 8


def test_dag_invariants():
    env = grid(5, 4, blocked=[(1, 1), (3, 2)])
    dag = single_source_dag(env, (4, 0))
    assert dag.dist[(4, 0)] == 0
    for n in dag.order[1:]:
        assert dag.preds[n], n
        for p in dag.preds[n]:
            assert dag.dist[p] == dag.dist[n] - 1


@pytest.mark.parametrize("dx,dy", [(0, 0), (2, 1), (3, 3), (1, 4), (5, 0)])
def test_closed_form_matches_enumeration(dx, dy):
    assert closed_form_count((0, 0), (dx, dy)) == len(monotone_paths(dx, dy))


def test_closed_form_values():
    assert closed_form_count((3, 3), (3, 3)) == 1
    assert closed_form_count((0, 0), (2, 1)) == 3
    assert closed_form_count((0, 0), (3, 3)) == 20


def test_through_counts_2x2():
    c = through_counts(single_source_dag(grid(2, 2), (0, 0)), (1, 1))
    assert c.n_paths == 2
    assert c.through((1, 0)) == c.through((0, 1)) == 1
    assert c.through((0, 0)) == c.through((1, 1)) == 2


def test_through_counts_self_pair():
    c = through_counts(single_source_dag(grid(3, 3), (1, 1)), (1, 1))
    assert c.n_paths == 1 and c.through((1, 1)) == 1


def test_through_counts_factorize_on_empty_grid():
    env = grid(5, 4)
    for s in [(0, 0), (1, 3), (4, 1)]:
        dag = single_source_dag(env, s)
        for t in env.nodes:
            c = through_counts(dag, t)
            for n in env.nodes:
                d = lambda a, b: abs(a[0] - b[0]) + abs(a[1] - b[1])  # noqa: E731
                expected = (closed_form_count(s, n) * closed_form_count(n, t)
                            if d(s, n) + d(n, t) == d(s, t) else 0)
                assert c.through(n) == expected


@pytest.mark.parametrize("blocked", [[], [(1, 1)], [(2, 1), (1, 2)], [(0, 2), (2, 0)]])
def test_through_counts_match_bruteforce(blocked):
    env = grid(4, 4, blocked=blocked)
    for s in env.nodes:
        dag = single_source_dag(env, s)
        for t in env.nodes:
            c = through_counts(dag, t)
            paths = enumerate_paths_bruteforce(env, s, t)
            assert c.n_paths == len(paths)
            hits = Counter(n for p in paths for n in p)
            assert {n: v for n, v in c.node_tag2.items()} == dict(hits)
            ehits = Counter(frozenset(e) for p in paths for e in zip(p, p[1:]))
            assert {frozenset(e): v for e, v in c.edge_tag2.items()} == dict(ehits)


def test_tags_are_exact_integers_for_large_counts():
    env = grid(30, 30)
    c = through_counts(single_source_dag(env, (0, 0)), (29, 29))
    assert c.n_paths == math.comb(58, 29)
    assert all(isinstance(v, int) for v in c.node_tag2.values())
    assert c.through((15, 14)) == math.comb(29, 14) * math.comb(29, 15)


def test_unreachable_target():
    dag = single_source_dag(grid(3, 3), (0, 0))
    with pytest.raises(UnreachableTarget):
        through_counts(dag, (7, 7))


def test_bruteforce_small_cases():
    env = grid(3, 3)
    assert len(enumerate_paths_bruteforce(env, (0, 0), (1, 1))) == 2
    assert len(enumerate_paths_bruteforce(env, (0, 0), (2, 2))) == 6
    assert len(enumerate_paths_bruteforce(grid(3, 3, blocked=[(1, 1)]), (0, 0), (2, 2))) == 2


def test_bruteforce_cap():
    with pytest.raises(PathCountCapExceeded):
        enumerate_paths_bruteforce(grid(6, 6), (0, 0), (5, 5), cap=100)


def test_weighted_dag_prefers_fast_lane():
    cfg = EnvironmentConfig.from_dict({
        "width_m": 3, "height_m": 2, "cell_size_m": 1, "radio_range_m": 1, "station_count": 1,
        "obstacles": [],
        "edge_speed_overrides": [{"x_m": 0, "y_m": 2, "w_m": 3, "h_m": 0, "speed": 4}],
    })
    env = build_environment(cfg)
    dag = single_source_dag(env, (0, 0))
    # Along the top lane: 2 vertical at cost 1 + 3 horizontal at cost 1/4.
    assert dag.dist[(3, 0)] == pytest.approx(3.0)
    assert dag.dist[(3, 2)] == pytest.approx(2.75)
    c = through_counts(dag, (3, 2))
    brute = enumerate_paths_bruteforce(env, (0, 0), (3, 2))
    assert c.n_paths == len(brute) == 1
    assert brute[0] == [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (3, 2)]


def test_path_counts_from_source():
    sigma = path_counts_from(single_source_dag(grid(4, 4), (0, 0)))
    assert sigma[(3, 3)] == 20 and sigma[(2, 1)] == 3


def test_sample_two_paths_balanced():
    c = through_counts(single_source_dag(grid(2, 2), (0, 0)), (1, 1))
    rng = np.random.default_rng(11)
    n = 10_000
    via_x = sum(sample_shortest_path(c, rng)[1] == (1, 0) for _ in range(n))
    # 3 sigma band around 0.5
    assert abs(via_x / n - 0.5) <= 3 * math.sqrt(0.25 / n)
    assert binomtest(via_x, n, 0.5).pvalue > 0.001


def test_sample_single_path():
    c = through_counts(single_source_dag(grid(5, 1), (0, 0)), (4, 0))
    rng = np.random.default_rng(0)
    assert all(sample_shortest_path(c, rng) == [(i, 0) for i in range(5)] for _ in range(20))


def test_sample_uniform_over_six_paths():
    env = grid(3, 3)
    c = through_counts(single_source_dag(env, (0, 0)), (2, 2))
    rng = np.random.default_rng(5)
    counts = Counter(tuple(sample_shortest_path(c, rng)) for _ in range(60_000))
    assert len(counts) == 6
    assert set(counts) == {tuple(p) for p in enumerate_paths_bruteforce(env, (0, 0), (2, 2))}
    assert chisquare(list(counts.values())).pvalue > 0.001


def test_sample_uniform_with_obstacle():
    env = grid(4, 4, blocked=[(1, 2)])
    c = through_counts(single_source_dag(env, (0, 0)), (3, 3))
    rng = np.random.default_rng(9)
    paths = {tuple(p) for p in enumerate_paths_bruteforce(env, (0, 0), (3, 3))}
    counts = Counter(tuple(sample_shortest_path(c, rng)) for _ in range(len(paths) * 5000))
    assert set(counts) == paths
    assert chisquare(list(counts.values())).pvalue > 0.001


@st.composite
def small_env(draw):
    cols = draw(st.integers(2, 6))
    rows = draw(st.integers(2, 6))
    cells = [(i, j) for i in range(cols) for j in range(rows)]
    blocked = draw(st.lists(st.sampled_from(cells), max_size=3, unique=True))
    try:
        env = grid(cols, rows, blocked)
    except DisconnectedEnvironment:
        env = grid(cols, rows)
    s = draw(st.sampled_from(env.nodes))
    t = draw(st.sampled_from(env.nodes))
    return env, s, t


@settings(max_examples=150, deadline=None)
@given(small_env())
def test_tag_invariants(case):
    env, s, t = case
    c = through_counts(single_source_dag(env, s), t)
    dag = single_source_dag(env, s)
    N = c.n_paths
    assert c.node_tag2[s] == c.node_tag2[t] == N
    assert all(0 < v <= N for v in c.node_tag2.values())
    levels = Counter()
    for n, v in c.node_tag2.items():
        levels[dag.dist[n]] += v
    assert set(levels) == set(range(c.length + 1))
    assert all(v == N for v in levels.values())
