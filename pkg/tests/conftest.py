"""Shared fixtures for the wave library tests."""
import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from models.galileo import from_exact, to_zero_mean  # noqa: E402
from models.wave_solvers import SolverConfig  # noqa: E402
from utils.fourier_core import make_grid  # noqa: E402
from utils.special_functions import bo_exact, bo_gamma_for_speed, kdv_exact  # noqa: E402


@pytest.fixture
def grid64():
    return make_grid(64)


@pytest.fixture
def grid128():
    return make_grid(128)


@pytest.fixture
def cfg():
    return SolverConfig()


@pytest.fixture
def bo_wave(grid128):
    """Zero-mean Benjamin-Ono wave at c = 0 (b = 1, omega = 2)."""
    return to_zero_mean(from_exact(bo_exact(bo_gamma_for_speed(0.0), grid128)))


@pytest.fixture
def kdv_wave(grid64):
    """Zero-mean cnoidal KdV wave with modulus 0.6."""
    return to_zero_mean(from_exact(kdv_exact(0.6, grid64)))
