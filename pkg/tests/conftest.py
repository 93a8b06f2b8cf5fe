"""Shared fixtures: catalog entries and the expensive evolved measures."""

import numpy as np
import pytest

import eqmeas


@pytest.fixture(scope="session")
def cat():
    return eqmeas.get_system("cat")


@pytest.fixture(scope="session")
def skew():
    return eqmeas.get_system("skew")


@pytest.fixture(scope="session")
def slowprod():
    return eqmeas.get_system("slowprod")


@pytest.fixture(scope="session")
def phi0():
    return eqmeas.zero_potential()


@pytest.fixture(scope="session")
def cat_mu40(cat, phi0):
    """40-step averaged measure on the cat map, maximal-entropy potential."""
    return eqmeas.evolve_average(
        cat.system, phi0, cat.h_top, np.array([0.2, 0.7]), steps=40,
        grid=(32, 32), order=10, leaf_radius=1.0)


@pytest.fixture(scope="session")
def skew_mu40(skew, phi0):
    return eqmeas.evolve_average(
        skew.system, phi0, skew.h_top, np.array([0.2, 0.7, 0.37]), steps=40,
        grid=(16, 16, 8), order=10, leaf_radius=1.0)


@pytest.fixture(scope="session")
def slow_pair(slowprod, phi0):
    """Evolved candidates from a generic fiber point and from the slow one."""
    sysm = slowprod.system
    kw = dict(steps=40, grid=(16, 16, 16, 16), order=8, r=0.05,
              leaf_radius=0.45)
    gen = eqmeas.evolve_average(sysm, phi0, slowprod.h_top,
                                np.array([0.2, 0.7, 0.13, 0.86]), **kw)
    slow = eqmeas.evolve_average(sysm, phi0, slowprod.h_top,
                                 np.array([0.61, 0.13, 0.5, 0.5]), **kw)
    return gen, slow
