import numpy as np
import pytest

from tbglab import build_lattice, default_potential, build_T
from tbglab.magic import DEFAULT_K, magic_operator, refine_magic_angle


@pytest.fixture(scope="session")
def lat():
    return build_lattice()


@pytest.fixture(scope="session")
def pot():
    return default_potential()


@pytest.fixture(scope="session")
def alpha1(lat, pot):
    """First real positive magic angle, polished at cutoff 14."""
    a = refine_magic_angle(lat, pot, 0.586, cutoff=14.0)
    assert abs(a.imag) < 1e-9
    return float(a.real)


@pytest.fixture(scope="session")
def T12(lat, pot):
    """Full two-component compact operator at the default momentum."""
    return build_T(lat, pot, DEFAULT_K, 12.0)


@pytest.fixture(scope="session")
def T12_sector(lat, pot):
    return magic_operator(lat, pot, DEFAULT_K, 12.0)
