import numpy as np
import pytest

import nhskin as nh

PARAMS = nh.ModelParams(t_h=2.0, g=0.8, delta=0.1)
SQRT_HALF = 1.0 / np.sqrt(2.0)


def circular_distance(a, b, n):
    d = np.abs(np.asarray(a) - np.asarray(b)) % n
    return np.minimum(d, n - d)


def angle_distance(a, b):
    return circular_distance(a, b, 2.0 * np.pi)


def sort_spectrum(vals, decimals=6):
    """Stable multiset order for complex spectra with degenerate values."""
    vals = np.asarray(vals)
    key_re = np.round(vals.real, decimals)
    key_im = np.round(vals.imag, decimals)
    return vals[np.lexsort((key_im, key_re))]


@pytest.fixture(scope="session")
def symplectic():
    return nh.build_symplectic_hn(PARAMS)


@pytest.fixture(scope="session")
def ordinary():
    return nh.build_ordinary_model()


@pytest.fixture(scope="session")
def symplectic_bands(symplectic):
    return nh.band_structure(symplectic, 240)


@pytest.fixture(scope="session")
def case1_spec():
    return nh.GaussianSpec(k0_plus=float(np.pi), k0_minus=float(np.pi),
                           n0_plus=60.0, n0_minus=60.0, sigma=0.4,
                           c_plus=SQRT_HALF, c_minus=SQRT_HALF)


@pytest.fixture(scope="session")
def case1_run(symplectic, case1_spec):
    times = np.arange(0.0, 30.01, 0.25)
    return nh.evolve(symplectic, case1_spec, nh.KGrid(120), times)
