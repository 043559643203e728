import pytest
from hypothesis import HealthCheck, settings

from gsbkit import field_model as fm
from gsbkit.fock_space import build_basis

settings.register_profile("gsbkit", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gsbkit")


@pytest.fixture(scope="session")
def coarse():
    """Eight-mode uniform grid on [-4, 4], the desk-scale workhorse."""
    return fm.FieldModel.uniform(4.0, 8)


@pytest.fixture(scope="session")
def fine():
    """Grid on which continuum integrals are accurate to about 1e-7."""
    return fm.FieldModel.uniform(40.0, 400)


@pytest.fixture(scope="session")
def basis8():
    return build_basis(8, 3)
