import numpy as np
import pytest

from nslab.spectral import PHYSICAL, SPECTRAL, Grid3, VectorField, leray_project, to_spectral

TWO_PI = 2.0 * np.pi


def random_physical(grid, seed, amplitude=1.0):
    """Smooth random real field: white spectral noise with a Gaussian rolloff."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((3, *grid.physical_shape))
    spec = np.fft.rfftn(raw, axes=(1, 2, 3)) / grid.n**3
    spec *= np.exp(-grid.k2 * (2.0 * grid.spacing) ** 2)
    phys = np.fft.irfftn(spec * grid.n**3, s=grid.physical_shape, axes=(1, 2, 3))
    peak = np.max(np.sqrt(np.sum(phys**2, axis=0)))
    if peak > 0:
        phys *= amplitude / peak
    return VectorField(grid, PHYSICAL, phys)


def random_spectral(grid, seed, amplitude=1.0):
    return to_spectral(random_physical(grid, seed, amplitude))


def random_solenoidal(grid, seed, amplitude=1.0):
    """Random smooth divergence-free mean-zero spectral field."""
    f = leray_project(random_spectral(grid, seed, amplitude))
    data = f.data.copy()
    data[:, 0, 0, 0] = 0.0
    return VectorField(grid, SPECTRAL, data)


@pytest.fixture
def grid8():
    return Grid3(8, TWO_PI)


@pytest.fixture
def grid16():
    return Grid3(16, TWO_PI)


@pytest.fixture
def grid32():
    return Grid3(32, TWO_PI)
