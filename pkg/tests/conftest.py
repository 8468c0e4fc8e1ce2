import numpy as np
import pytest

from alebgk import grid as gm


def line_cloud(n, lo=-1.0, hi=1.0, jitter=0.0, seed=0, walls=True):
    """Uniform (optionally jittered) 1D cloud with wall points at both ends."""
    x = np.linspace(lo, hi, n)
    dx = (hi - lo) / (n - 1)
    if jitter:
        rng = np.random.default_rng(seed)
        x[1:-1] += rng.uniform(-jitter, jitter, n - 2) * dx
    role = np.zeros(n, np.int8)
    normal = np.zeros((n, 1))
    if walls:
        role[[0, -1]] = gm.WALL
        normal[0, 0], normal[-1, 0] = 1.0, -1.0
    cloud = gm.PointCloud(x, role, dx, gm.GridParams.for_dim(1), normal,
                          np.where(role > 0, 1.0, 0.0))
    return cloud, gm.Domain([lo], [hi])


def box_cloud(n, jitter=0.0, seed=0, lo=-1.0, hi=1.0):
    ax = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    x = np.stack([X.ravel(), Y.ravel()], axis=1)
    dx = (hi - lo) / (n - 1)
    wall = np.any(np.isclose(x, lo) | np.isclose(x, hi), axis=1)
    if jitter:
        rng = np.random.default_rng(seed)
        x[~wall] += rng.uniform(-jitter, jitter, (int((~wall).sum()), 2)) * dx
    normal = np.zeros_like(x)
    normal[np.isclose(x[:, 0], lo), 0] += 1
    normal[np.isclose(x[:, 0], hi), 0] -= 1
    normal[np.isclose(x[:, 1], lo), 1] += 1
    normal[np.isclose(x[:, 1], hi), 1] -= 1
    normal[wall] /= np.linalg.norm(normal[wall], axis=1)[:, None]
    role = np.where(wall, gm.WALL, gm.INTERIOR).astype(np.int8)
    cloud = gm.PointCloud(x, role, dx, gm.GridParams.for_dim(2), normal,
                          np.where(wall, 1.0, 0.0))
    return cloud, gm.Domain([lo, lo], [hi, hi])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
