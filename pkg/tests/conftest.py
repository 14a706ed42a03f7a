import math

import pytest

from leeyang import analysis as an
from leeyang import spectrum as sp
from leeyang import zeros as zr
from leeyang.lattice import FREE, PERIODIC, build_lattice, chain_lattice

# beta with e^{2 beta} = 2: the hand-enumerable three-site chain
BETA_LOG2 = math.log(2.0) / 2.0


@pytest.fixture(scope="session")
def single_spin():
    return sp.enumerate_spectrum(build_lattice(1, 0, FREE), 0.0)


@pytest.fixture(scope="session")
def chain3():
    """N=3 free chain at e^{2 beta} = 2: A_{+-3} = 2, A_{+-1} = 2.5."""
    return sp.transfer_spectrum_1d(3, FREE, BETA_LOG2)


@pytest.fixture(scope="session")
def grid3x3():
    return sp.enumerate_spectrum(build_lattice(2, 1, FREE), 0.3)


@pytest.fixture(scope="session")
def grid3x3_periodic():
    return sp.enumerate_spectrum(build_lattice(2, 1, PERIODIC), 0.3)


@pytest.fixture(scope="session")
def grid5x5():
    return sp.transfer_spectrum_2d(2, FREE, 0.3)


@pytest.fixture(scope="session")
def chain101():
    return sp.transfer_spectrum_1d(101, FREE, 0.2)


@pytest.fixture(scope="session")
def chain401():
    return sp.transfer_spectrum_1d(401, FREE, 0.2)


@pytest.fixture(scope="session")
def chain1601():
    return sp.transfer_spectrum_1d(1601, FREE, 0.2)


@pytest.fixture(scope="session")
def chain101_zeros(chain101):
    return zr.find_angles(chain101)


@pytest.fixture(scope="session")
def chain401_zeros(chain401):
    return zr.find_angles(chain401)


@pytest.fixture(scope="session")
def chain1601_zeros(chain1601):
    return zr.find_angles(chain1601)


@pytest.fixture(scope="session")
def cw10k():
    return sp.curie_weiss_spectrum(10_000)
