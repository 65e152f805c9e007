import numpy as np
import pytest

from nrcasimir import MatsubaraPolicy, ThermalContext


@pytest.fixture(scope="session")
def ctx():
    return ThermalContext(temperature=300.0)


@pytest.fixture(scope="session")
def policy():
    return MatsubaraPolicy()


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_rotation(rng):
    """Haar-ish random proper rotation from QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
