import numpy as np
import pytest

from wiener_nls.grid import Field, Grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(grid: Grid, rng, scale: float = 1.0) -> Field:
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return Field(grid, scale * vals)


def smooth_field(grid: Grid, rng, width: float = 1.0) -> Field:
    """Random combination of a few Gaussians, well resolved on ``grid``."""
    acc = np.zeros(grid.shape, dtype=complex)
    for _ in range(3):
        x0 = rng.uniform(-grid.L / 8, grid.L / 8, grid.d)
        w = rng.standard_normal() + 1j * rng.standard_normal()
        r2 = sum((x - c) ** 2 for x, c in zip(grid.x, x0))
        acc = acc + w * np.exp(-r2 / width**2)
    return Field(grid, acc)
