import numpy as np
import pytest

from swsdc import spharm
from swsdc.swe import ModelParams, PrognosticState


EARTH_PARAMS = dict(
    radius=6.37122e6, omega=7.292e-5, gravity=9.80616, nu=1.0e5, h_bar=29400.0
)


def make_plan(truncation, n_lon=None, n_lat=None):
    if n_lon is None or n_lat is None:
        n_lon, n_lat = spharm.default_grid_shape(truncation)
    grid = spharm.build_gaussian_grid(n_lat, n_lon)
    return spharm.TransformPlan(grid, truncation)


def random_coeffs(rng, truncation, scale=1.0, decay=0.15, zero_mean=False):
    """Band-limited coefficients with a decaying spectrum; r=0 entries real."""
    c = spharm.zeros_coeffs(truncation)
    for r in range(truncation + 1):
        n = truncation + 1 - r
        env = scale * np.exp(-decay * np.arange(r, truncation + 1))
        c[r, r:] = (rng.normal(size=n) + 1j * rng.normal(size=n)) * env
    c[0] = c[0].real
    if zero_mean:
        c[0, 0] = 0.0
    return c


def random_state(rng, truncation, phi_scale=300.0, wind_scale=1e-5):
    """Physically admissible random state: zero-mean vorticity and divergence."""
    return PrognosticState(
        random_coeffs(rng, truncation, phi_scale),
        random_coeffs(rng, truncation, wind_scale, zero_mean=True),
        random_coeffs(rng, truncation, wind_scale, zero_mean=True),
    )


@pytest.fixture(scope="session")
def plan31():
    return make_plan(31)


@pytest.fixture(scope="session")
def params():
    return ModelParams(**EARTH_PARAMS)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
