import numpy as np
import pytest

from nsdetermine.fields import SpectralField, grid
from nsdetermine.solver import ForcingSpec, InitialSpec, SolverConfig
from nsdetermine.utils import InitialKind
from nsdetermine.viscosity import ViscosityModel


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run long simulations')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long chaotic runs')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def gradient_field(n: int, seed: int) -> SpectralField:
    """Чистый градиент ∇φ случайного тригонометрического многочлена φ."""
    rng = np.random.default_rng(seed)
    x, y = grid(n)
    phi_x = np.zeros_like(x)
    phi_y = np.zeros_like(x)
    for kx, ky in rng.integers(-4, 5, size=(6, 2)):
        a, b = rng.standard_normal(2)
        arg = kx * x + ky * y
        phi_x += kx * (-a * np.sin(arg) + b * np.cos(arg))
        phi_y += ky * (-a * np.sin(arg) + b * np.cos(arg))
    return SpectralField.from_physical(np.stack([phi_x, phi_y]))


def laminar_config(t_end: float = 25.0, **viscosity) -> SolverConfig:
    """Ламинарный режим Колмогорова: ν = 0.5, k_f = 2, a = 1, n = 16, dt = 0.05."""
    model = ViscosityModel.from_dict(viscosity) if viscosity else ViscosityModel.constant(0.5)
    return SolverConfig(resolution=16, dt=0.05, t_end=t_end, viscosity=model,
                        forcing=ForcingSpec.kolmogorov(1.0, 2),
                        initial=InitialSpec(InitialKind.RANDOM, amplitude=0.05, k_max=4), sample_stride=4)


@pytest.fixture
def laminar():
    return laminar_config()
