import json

import pytest

from conftest import grid, field_config
from rspog.environment import (
    ConfigError,
    DisconnectedEnvironment,
    EnvironmentConfig,
    NonDivisibleDimensions,
    Obstacle,
    ObstacleOutOfBounds,
    OverlappingObstacles,
    UnknownNode,
    build_environment,
    load_config,
    neighbors,
    validate_zone_spacing,
)


def test_empty_3x3_counts():
    env = grid(3, 3)
    assert env.n_free == 9
    assert env.n_edges == 12


@pytest.mark.parametrize("cols,rows", [(2, 2), (3, 5), (7, 4), (10, 10)])
def test_empty_lattice_formula(cols, rows):
    env = grid(cols, rows)
    assert env.n_free == cols * rows
    assert env.n_edges == 2 * cols * rows - cols - rows


def test_field_layout_has_sixteen_holes(field_env):
    env = field_env
    assert (env.cols, env.rows) == (47, 47)
    # 40 m obstacles with corners on the 10 m lattice remove 5x5 nodes each.
    assert env.n_free == 47 * 47 - 16 * 25
    holes = ~env.free_mask
    for y in (60, 160, 260, 360):
        for x in (60, 160, 260, 360):
            assert holes[y // 10:y // 10 + 5, x // 10:x // 10 + 5].all()


def test_full_row_obstacle_disconnects():
    cfg = EnvironmentConfig(4, 4, 1, 1, 1, [Obstacle(0, 1.75, 4, 0.5)])
    with pytest.raises(DisconnectedEnvironment):
        build_environment(cfg)


def test_neighbor_counts():
    env = grid(5, 5)
    assert len(neighbors(env, (0, 0))) == 2
    assert len(neighbors(env, (2, 2))) == 4
    blocked = grid(5, 5, blocked=[(2, 2)])
    # Counted by hand: the four face neighbours of the removed centre lose one edge.
    for n in [(1, 2), (3, 2), (2, 1), (2, 3)]:
        assert len(neighbors(blocked, n)) == 3
    assert len(neighbors(blocked, (1, 1))) == 4
    with pytest.raises(UnknownNode):
        neighbors(blocked, (2, 2))


def test_uniform_edge_cost_is_one():
    env = grid(3, 3)
    assert {c for _, c in neighbors(env, (1, 1))} == {1}


def test_speed_override_costs():
    cfg = EnvironmentConfig.from_dict({
        "width_m": 20, "height_m": 20, "cell_size_m": 10, "radio_range_m": 5,
        "station_count": 1, "obstacles": [],
        "edge_speed_overrides": [{"x_m": 0, "y_m": 0, "w_m": 20, "h_m": 0, "speed": 2}],
    })
    env = build_environment(cfg)
    assert not env.uniform_cost
    costs = dict(neighbors(env, (0, 0)))
    assert costs[(1, 0)] == pytest.approx(5.0)   # bottom row: 10 m / speed 2
    assert costs[(0, 1)] == pytest.approx(10.0)


def test_edge_through_thin_obstacle_removed():
    # The obstacle sits between lattice lines: no node is removed but the
    # vertical edges crossing it are.
    cfg = EnvironmentConfig(4, 2, 1, 1, 1, [Obstacle(0.8, 0.3, 0.4, 0.4)])
    env = build_environment(cfg)
    assert env.n_free == 15
    for u, v, _ in env.edges():
        for o in cfg.obstacles:
            assert not o.segment_hits_interior(env.position(u), env.position(v))
    assert (1, 1) not in dict(neighbors(env, (1, 0)))
    assert len(neighbors(env, (1, 0))) == 2


def test_obstacle_monotonicity():
    base = grid(6, 6)
    one = grid(6, 6, blocked=[(2, 3)])
    two = grid(6, 6, blocked=[(2, 3), (4, 1)])
    for small, big in ((one, base), (two, one)):
        assert set(small.nodes) <= set(big.nodes)
        assert {(u, v) for u, v, _ in small.edges()} <= {(u, v) for u, v, _ in big.edges()}


@pytest.mark.parametrize("obstacle,error", [
    (Obstacle(-1, 0, 2, 2), ObstacleOutOfBounds),
    (Obstacle(9, 9, 2, 2), ObstacleOutOfBounds),
])
def test_config_errors(obstacle, error):
    with pytest.raises(error):
        build_environment(EnvironmentConfig(10, 10, 1, 1, 1, [obstacle]))


def test_overlapping_obstacles():
    cfg = EnvironmentConfig(10, 10, 1, 1, 1, [Obstacle(1, 1, 3, 3), Obstacle(3, 3, 2, 2)])
    with pytest.raises(OverlappingObstacles):
        build_environment(cfg)


def test_non_divisible():
    with pytest.raises(NonDivisibleDimensions):
        build_environment(EnvironmentConfig(10.5, 10, 1, 1, 1))


def test_zone_spacing_warnings():
    r20 = dict(width_m=400, height_m=200, cell_size_m=10, radio_range_m=20, station_count=1)
    far = EnvironmentConfig(**r20, obstacles=[Obstacle(100, 80, 40, 40), Obstacle(190, 80, 40, 40)])
    assert validate_zone_spacing(build_environment(far)) == []
    near = EnvironmentConfig(**r20, obstacles=[Obstacle(100, 80, 40, 40), Obstacle(170, 80, 40, 40)])
    warnings = validate_zone_spacing(build_environment(near))
    assert len(warnings) == 1 and "30 m apart" in warnings[0]


def test_field_layout_spacing(field_env):
    # Uniform placement leaves 60 m gaps everywhere, above 2r = 40 m.
    gaps = [60] + [160 - 100] * 3 + [460 - 400]
    assert min(gaps) >= 40
    assert validate_zone_spacing(field_env) == []


def test_load_config_roundtrip(write_config):
    cfg = field_config()
    path = write_config(cfg.to_dict())
    assert load_config(path) == cfg


@pytest.mark.parametrize("patch,needle", [
    ({"colour": "red"}, "unknown field"),
    ({"obstacles": [{"x_m": 1, "y_m": 1, "w_m": 1}]}, "obstacles[0]: missing"),
    ({"obstacles": [{"x_m": 1, "y_m": 1, "w_m": 1, "h_m": 1, "z": 0}]}, "obstacles[0]: unknown"),
    ({"station_count": 2.5}, "station_count"),
    ({"cell_size_m": "ten"}, "cell_size_m"),
])
def test_config_field_messages(write_config, patch, needle):
    data = field_config().to_dict()
    data.update(patch)
    with pytest.raises(ConfigError, match=needle.replace("[", r"\[").replace("]", r"\]")):
        load_config(write_config(data))


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_hotspot_weights():
    cfg = EnvironmentConfig.from_dict(json.loads(json.dumps({
        "width_m": 2, "height_m": 2, "cell_size_m": 1, "radio_range_m": 1, "station_count": 1,
        "obstacles": [],
        "hotspot_weights": [{"x_m": 0, "y_m": 0, "w_m": 0, "h_m": 0, "weight": 3}],
    })))
    env = build_environment(cfg)
    assert env.node_weights[env.index[(0, 0)]] == 3
    assert env.node_weights.sum() == 3 + 8
