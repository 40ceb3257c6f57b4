"""Shared fixtures: small binary volumes with known surfaces."""

from __future__ import annotations

import numpy as np
import pytest

from voxshell.volume import IsoConfig, ScalarGrid


def binary_grid(shape: tuple[int, int, int], *active: tuple[int, int, int]) -> ScalarGrid:
    """A u8 grid with value 1 at the given voxels and 0 elsewhere."""
    values = np.zeros(shape, dtype=np.uint8)
    for voxel in active:
        values[voxel] = 1
    return ScalarGrid(values)


@pytest.fixture
def iso() -> IsoConfig:
    """Isovalue that separates 0 from 1."""
    return IsoConfig(1)


@pytest.fixture
def single_voxel() -> ScalarGrid:
    """One active voxel."""
    return binary_grid((1, 1, 1), (0, 0, 0))


@pytest.fixture
def domino() -> ScalarGrid:
    """Two face-adjacent active voxels along x."""
    return binary_grid((2, 1, 1), (0, 0, 0), (1, 0, 0))


@pytest.fixture
def block() -> ScalarGrid:
    """A full 2x2x2 block."""
    return ScalarGrid(np.ones((2, 2, 2), dtype=np.uint8))


@pytest.fixture
def edge_pair() -> ScalarGrid:
    """Two active voxels sharing only an edge."""
    return binary_grid((2, 2, 1), (0, 0, 0), (1, 1, 0))


@pytest.fixture
def vertex_pair() -> ScalarGrid:
    """Two active voxels sharing only a corner."""
    return binary_grid((2, 2, 2), (0, 0, 0), (1, 1, 1))


@pytest.fixture
def hole_demo() -> ScalarGrid:
    """Volume on which the classic 15-case table leaves a hole."""
    values = np.zeros((3, 2, 2), dtype=np.uint8)
    values[1, 0, 0] = 1
    values[1, 1, 1] = 1
    values[2, :, :] = 1
    return ScalarGrid(values)


@pytest.fixture(params=[0, 1, 2])
def random_binary(request: pytest.FixtureRequest) -> ScalarGrid:
    """Seeded binary volumes with roughly half the voxels active."""
    rng = np.random.default_rng(request.param)
    return ScalarGrid((rng.random((5, 4, 6)) < 0.5).astype(np.uint8))
