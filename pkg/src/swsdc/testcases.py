"""Benchmark initial conditions for the rotating shallow-water system.

Four cases: a balanced mid-latitude zonal jet, a collapsing Gaussian dome at
rest, a wavenumber-4 Haurwitz wave, and the jet with a localized height bump
that triggers barotropic instability.  Constructors return the spectral state
together with the model parameters whose mean height is consistent with the
constructed height field.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any

import numpy as np

from . import spharm
from .spharm import TransformPlan
from .swe import ModelParams, PrognosticState


@dataclasses.dataclass(frozen=True)
class EarthConstants:
    """Radius (m), rotation rate (1/s) and gravity (m/s^2)."""

    radius: float = 6.37122e6
    omega: float = 7.292e-5
    gravity: float = 9.80616


EARTH = EarthConstants()

CASE_KINDS = (
    "steady_jet",
    "gaussian_dome",
    "rossby_haurwitz",
    "barotropic_instability",
)


@dataclasses.dataclass(frozen=True)
class TestCaseSpec:
    """A benchmark selection plus its diffusion coefficient and overrides."""

    __test__ = False  # not a pytest class, despite the name

    kind: str
    nu: float = 1.0e5
    params: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CASE_KINDS:
            raise ValueError(f"unknown test case {self.kind!r}; choose from {CASE_KINDS}")


# -- zonal jet ---------------------------------------------------------------

JET_DEFAULTS = {
    "u_max": 80.0,
    "phi_0": math.pi / 7.0,
    "phi_1": math.pi / 2.0 - math.pi / 7.0,
    "h_mean": 10000.0,
}

BUMP_DEFAULTS = {
    "h_hat": 120.0,
    "alpha_bump": 1.0 / 3.0,
    "beta_bump": 1.0 / 15.0,
    "phi_2": math.pi / 4.0,
    "lon_center": math.pi,
}


def jet_profile(phi: np.ndarray, u_max: float, phi_0: float, phi_1: float) -> np.ndarray:
    """Compact-support zonal wind profile, zero outside (phi_0, phi_1)."""
    u = np.zeros_like(phi)
    inside = (phi > phi_0) & (phi < phi_1)
    e_n = math.exp(-4.0 / (phi_1 - phi_0) ** 2)
    arg = (phi[inside] - phi_0) * (phi[inside] - phi_1)
    u[inside] = (u_max / e_n) * np.exp(1.0 / arg)
    return u


def _balance_increment(
    phi_a: float,
    phi_b: float,
    constants: EarthConstants,
    u_max: float,
    phi_0: float,
    phi_1: float,
    points_per_panel: int = 16,
    oversample: int = 4,
) -> float:
    """Integral of -a*u*(f + u*tan(phi)/a) over [phi_a, phi_b].

    Composite Gauss-Legendre quadrature with ``oversample`` panels per call,
    i.e. 4x the latitudinal grid resolution when called between neighbouring
    grid latitudes.
    """
    lo = max(phi_a, phi_0)
    hi = min(phi_b, phi_1)
    if hi <= lo:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(points_per_panel)
    total = 0.0
    edges = np.linspace(lo, hi, oversample + 1)
    for left, right in zip(edges[:-1], edges[1:]):
        half = 0.5 * (right - left)
        phi = 0.5 * (left + right) + half * x
        u = jet_profile(phi, u_max, phi_0, phi_1)
        f = 2.0 * constants.omega * np.sin(phi)
        integrand = -constants.radius * u * (f + u * np.tan(phi) / constants.radius)
        total += half * float(np.sum(w * integrand))
    return total


def _jet_geopotential(
    lats: np.ndarray, constants: EarthConstants, u_max: float, phi_0: float, phi_1: float
) -> np.ndarray:
    """Cumulative zonal-balance geopotential at the given latitudes, up to an
    additive constant fixed later by the prescribed global mean."""
    order = np.argsort(lats)
    sorted_lats = lats[order]
    gh = np.zeros_like(sorted_lats)
    prev_lat = -0.5 * math.pi
    acc = 0.0
    for i, lat in enumerate(sorted_lats):
        acc += _balance_increment(prev_lat, lat, constants, u_max, phi_0, phi_1)
        gh[i] = acc
        prev_lat = lat
    out = np.empty_like(gh)
    out[order] = gh
    return out


def init_steady_jet(
    plan: TransformPlan, constants: EarthConstants = EARTH, nu: float = 1.0e5, **overrides
) -> tuple[PrognosticState, ModelParams]:
    """Balanced zonal jet: compact-support wind, height from the zonal
    balance relation, global mean height pinned to ``h_mean``."""
    p = {**JET_DEFAULTS, **overrides}
    grid = plan.grid
    lats = grid.lat
    u = jet_profile(lats, p["u_max"], p["phi_0"], p["phi_1"])
    cos_u = (u * grid.cos_lat)[None, :] * np.ones((grid.n_lon, 1))
    zero_v = np.zeros_like(cos_u)
    div, curl = plan.analyze_vector_div_curl(cos_u, zero_v)
    zeta = curl / constants.radius
    delta = div / constants.radius

    gh = _jet_geopotential(lats, constants, p["u_max"], p["phi_0"], p["phi_1"])
    gh_grid = gh[None, :] * np.ones((grid.n_lon, 1))
    phi_bar = grid.quad_mean(gh_grid)  # shifted so the perturbation has zero mean
    phi_prime = plan.analyze(gh_grid - phi_bar)

    params = ModelParams(
        radius=constants.radius,
        omega=constants.omega,
        gravity=constants.gravity,
        nu=nu,
        h_bar=p["h_mean"],
    )
    return PrognosticState(phi_prime, zeta, delta), params


def add_jet_perturbation(
    state: PrognosticState,
    plan: TransformPlan,
    constants: EarthConstants = EARTH,
    **overrides,
) -> PrognosticState:
    """Add the localized Gaussian height bump that destabilizes the jet.

    The bump longitude profile is centered at ``lon_center`` and wrapped to
    (-pi, pi]; its value at the wrap point is below 1e-38 of the peak, so the
    wrapped field is smooth to machine precision.
    """
    p = {**BUMP_DEFAULTS, **overrides}
    grid = plan.grid
    lon = grid.lon[:, None] - p["lon_center"]
    lon = (lon + math.pi) % (2.0 * math.pi) - math.pi
    lat = grid.lat[None, :]
    bump = (
        p["h_hat"]
        * np.cos(lat)
        * np.exp(-((lon / p["alpha_bump"]) ** 2))
        * np.exp(-(((p["phi_2"] - lat) / p["beta_bump"]) ** 2))
    )
    out = state.copy()
    out.phi_prime += plan.analyze(constants.gravity * bump)
    return out


# -- Gaussian dome -----------------------------------------------------------

DOME_DEFAULTS = {
    "h_bar": 29400.0,
    "amplitude": 6000.0,
    "lon_center": math.pi,
    "lat_center": math.pi / 4.0,
    # Dome sharpness: the height spectrum decays below 1e-10 of its peak by
    # total wavenumber 32 (half of R = 63); see the spectrum test.
    "sharpness": 9.0,
}


def init_gaussian_dome(
    plan: TransformPlan, constants: EarthConstants = EARTH, nu: float = 1.0e5, **overrides
) -> tuple[PrognosticState, ModelParams]:
    """Gaussian height dome at rest; the exponent uses the chord distance to
    the dome center."""
    p = {**DOME_DEFAULTS, **overrides}
    grid = plan.grid
    lon = grid.lon[:, None]
    lat = grid.lat[None, :]
    x = np.cos(lon) * np.cos(lat) - math.cos(p["lon_center"]) * math.cos(p["lat_center"])
    y = np.sin(lon) * np.cos(lat) - math.sin(p["lon_center"]) * math.cos(p["lat_center"])
    z = np.sin(lat) - math.sin(p["lat_center"])
    dist2 = x * x + y * y + z * z  # (d/a)^2 with chord distance d
    h = p["h_bar"] + p["amplitude"] * np.exp(-p["sharpness"] * dist2)
    params = ModelParams(
        radius=constants.radius,
        omega=constants.omega,
        gravity=constants.gravity,
        nu=nu,
        h_bar=p["h_bar"],
    )
    phi_prime = plan.analyze(constants.gravity * (h - p["h_bar"]))
    r = plan.truncation
    return (
        PrognosticState(phi_prime, spharm.zeros_coeffs(r), spharm.zeros_coeffs(r)),
        params,
    )


# -- Rossby-Haurwitz wave ----------------------------------------------------

HAURWITZ_DEFAULTS = {
    "omega_wave": 7.848e-6,
    "k_wave": 7.848e-6,
    "wavenumber": 4,
    "h_0": 8000.0,
}


def haurwitz_phase_speed(
    constants: EarthConstants = EARTH,
    omega_wave: float = HAURWITZ_DEFAULTS["omega_wave"],
    wavenumber: int = HAURWITZ_DEFAULTS["wavenumber"],
) -> float:
    """Angular phase speed of the non-divergent Haurwitz wave (rad/s,
    positive eastward)."""
    m = wavenumber
    return (m * (3 + m) * omega_wave - 2.0 * constants.omega) / ((1 + m) * (2 + m))


def init_rossby_haurwitz(
    plan: TransformPlan, constants: EarthConstants = EARTH, nu: float = 1.0e5, **overrides
) -> tuple[PrognosticState, ModelParams]:
    """Non-divergent wavenumber-4 Haurwitz velocity field with the balanced
    geopotential of the standard suite."""
    p = {**HAURWITZ_DEFAULTS, **overrides}
    w, k, m = p["omega_wave"], p["k_wave"], p["wavenumber"]
    a = constants.radius
    grid = plan.grid
    lon = grid.lon[:, None]
    lat = grid.lat[None, :]
    cosl, sinl = np.cos(lat), np.sin(lat)

    u = a * w * cosl + a * k * cosl ** (m - 1) * (
        m * sinl * sinl - cosl * cosl
    ) * np.cos(m * lon)
    v = -a * k * m * cosl ** (m - 1) * sinl * np.sin(m * lon)
    div, curl = plan.analyze_vector_div_curl(u * cosl, v * cosl)
    zeta = curl / a
    delta = div / a

    big_a = 0.5 * w * (2.0 * constants.omega + w) * cosl**2 + 0.25 * k * k * cosl ** (
        2 * m
    ) * ((m + 1) * cosl**2 + (2 * m * m - m - 2) - 2.0 * m * m * cosl ** (-2))
    big_b = (
        2.0
        * (constants.omega + w)
        * k
        / ((m + 1) * (m + 2))
        * cosl**m
        * ((m * m + 2 * m + 2) - (m + 1) ** 2 * cosl**2)
    )
    big_c = 0.25 * k * k * cosl ** (2 * m) * ((m + 1) * cosl**2 - (m + 2))
    gh = constants.gravity * p["h_0"] + a * a * (
        big_a + big_b * np.cos(m * lon) + big_c * np.cos(2 * m * lon)
    )
    phi_bar = grid.quad_mean(gh)
    phi_prime = plan.analyze(gh - phi_bar)
    params = ModelParams(
        radius=constants.radius,
        omega=constants.omega,
        gravity=constants.gravity,
        nu=nu,
        h_bar=phi_bar / constants.gravity,
    )
    return PrognosticState(phi_prime, zeta, delta), params


# -- dispatch ----------------------------------------------------------------

def build_initial_state(
    spec: TestCaseSpec, plan: TransformPlan, constants: EarthConstants = EARTH
) -> tuple[PrognosticState, ModelParams]:
    """Construct the initial state and matching model parameters for a case."""
    if spec.kind == "steady_jet":
        return init_steady_jet(plan, constants, spec.nu, **spec.params)
    if spec.kind == "gaussian_dome":
        return init_gaussian_dome(plan, constants, spec.nu, **spec.params)
    if spec.kind == "rossby_haurwitz":
        return init_rossby_haurwitz(plan, constants, spec.nu, **spec.params)
    if spec.kind == "barotropic_instability":
        jet_keys = set(JET_DEFAULTS)
        jet_over = {k: v for k, v in spec.params.items() if k in jet_keys}
        bump_over = {k: v for k, v in spec.params.items() if k in BUMP_DEFAULTS}
        state, params = init_steady_jet(plan, constants, spec.nu, **jet_over)
        return add_jet_perturbation(state, plan, constants, **bump_over), params
    raise ValueError(f"unknown test case {spec.kind!r}")
