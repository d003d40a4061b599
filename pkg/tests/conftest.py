import json

import pytest

from rspog.environment import EnvironmentConfig, Obstacle, build_environment, lattice_config

FIELD_OBSTACLE_CORNERS = (60, 160, 260, 360)


def field_config(cell=10.0, radio=20.0, stations=1000):
    obstacles = [Obstacle(x, y, 40, 40)
                 for y in FIELD_OBSTACLE_CORNERS for x in FIELD_OBSTACLE_CORNERS]
    return EnvironmentConfig(460, 460, cell, radio, stations, obstacles)


def grid(cols, rows, blocked=()):
    return build_environment(lattice_config(cols, rows, blocked=blocked))


@pytest.fixture(scope="session")
def field_env():
    return build_environment(field_config())


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="env.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return write


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test still asserts on ``ok``."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE_RESULTS.append((number, line))
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)
