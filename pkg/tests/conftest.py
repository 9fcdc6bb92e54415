import pytest

from kinetic_spectral.kernel import CollisionKernel
from kinetic_spectral.spectrum import SpectralTable, build_table


@pytest.fixture(scope="session")
def table_s1() -> SpectralTable:
    return build_table(CollisionKernel(s=1.0), 12)


@pytest.fixture(scope="session")
def table_s2() -> SpectralTable:
    return build_table(CollisionKernel(s=2.0), 12)
