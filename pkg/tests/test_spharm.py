"""Transform engine: quadrature, Legendre tables, transforms, spectral ops."""

import math

import numpy as np
import pytest

from swsdc import spharm
from swsdc.spharm import (
    build_gaussian_grid,
    gauss_legendre_nodes,
    inv_laplacian,
    laplacian,
    next_fast_size,
    pad,
    truncate,
    zeros_coeffs,
)

from conftest import make_plan, random_coeffs


def naive_fourier_column(field, r):
    """O(I^2)-style direct Fourier sum for one zonal wavenumber."""
    n_lon = field.shape[0]
    lam = 2.0 * np.pi * np.arange(n_lon) / n_lon
    return field.T @ np.exp(-1j * r * lam) / n_lon


# -- Gaussian grid -------------------------------------------------------------

def test_single_node_rule():
    mu, w = gauss_legendre_nodes(1)
    assert mu == pytest.approx([0.0], abs=1e-15)
    assert w == pytest.approx([2.0], abs=1e-15)


def test_two_node_rule_closed_form():
    mu, w = gauss_legendre_nodes(2)
    assert mu == pytest.approx([-1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0)], abs=1e-15)
    assert w == pytest.approx([1.0, 1.0], abs=1e-15)


def test_exactness_against_quadrature_oracle():
    """24-point rule integrates monomials up to degree 47 exactly."""
    mu, w = gauss_legendre_nodes(24)
    for k in range(48):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert np.sum(w * mu**k) == pytest.approx(exact, abs=2e-14)
    # independent oracle
    mu_ref, w_ref = np.polynomial.legendre.leggauss(24)
    np.testing.assert_allclose(mu, mu_ref, atol=1e-14)
    np.testing.assert_allclose(w, w_ref, atol=1e-14)


def test_grid_invariants():
    grid = build_gaussian_grid(24)
    assert np.all(np.diff(grid.mu) > 0)
    np.testing.assert_allclose(grid.mu, -grid.mu[::-1], atol=0)
    assert np.all(grid.w > 0)
    assert grid.w.sum() == pytest.approx(2.0, abs=1e-12)


def test_grid_rejects_bad_size():
    with pytest.raises(ValueError):
        gauss_legendre_nodes(0)


def test_next_fast_size():
    assert next_fast_size(190) == 192
    assert next_fast_size(96) == 96
    assert next_fast_size(97) == 100


# -- Legendre tables -----------------------------------------------------------

def test_discrete_orthonormality(plan31):
    """sum_j P_s^r P_s'^r w_j = delta_ss' while s+s' stays under quadrature
    exactness."""
    grid = plan31.grid
    for r in (0, 3, 17):
        table = plan31._p[r, r:, :]
        gram = np.einsum("sj,tj,j->st", table, table, grid.w)
        np.testing.assert_allclose(gram, np.eye(table.shape[0]), atol=1e-10)


def test_mu_derivative_table_against_finite_differences():
    plan = make_plan(10)
    mu = plan.grid.mu
    eps = 1e-6
    p_hi, _ = spharm._legendre_tables(10, mu + eps)
    p_lo, _ = spharm._legendre_tables(10, mu - eps)
    fd = (1.0 - mu * mu) * (p_hi - p_lo) / (2.0 * eps)
    np.testing.assert_allclose(plan._h, fd, atol=1e-8)


# -- transforms ----------------------------------------------------------------

def test_constant_field_projects_onto_mean_mode(plan31):
    grid = plan31.grid
    c = 3.25
    coeffs = plan31.analyze(np.full((grid.n_lon, grid.n_lat), c))
    assert coeffs[0, 0] == pytest.approx(c * math.sqrt(2.0), rel=1e-13)
    coeffs[0, 0] = 0.0
    assert np.max(np.abs(coeffs)) < 1e-13 * c


def test_single_basis_function_projection(plan31):
    """Real part of P_3^2 e^{2i lam} transforms to a lone 1/2 coefficient."""
    grid = plan31.grid
    lam = grid.lon[:, None]
    field = np.real(plan31._p[2, 3][None, :] * np.exp(2j * lam))
    coeffs = plan31.analyze(field)
    assert coeffs[2, 3] == pytest.approx(0.5, abs=1e-13)
    coeffs[2, 3] = 0.0
    assert np.max(np.abs(coeffs)) < 1e-13


def test_roundtrip_band_limited(rng, plan31):
    coeffs = random_coeffs(rng, 31)
    back = plan31.analyze(plan31.synthesize(coeffs))
    assert np.max(np.abs(back - coeffs)) < 1e-11 * np.max(np.abs(coeffs))


def test_zero_and_constant_synthesis(plan31):
    grid_zero = plan31.synthesize(zeros_coeffs(31))
    assert np.all(grid_zero == 0.0)
    c = zeros_coeffs(31)
    c[0, 0] = math.sqrt(2.0)
    field = plan31.synthesize(c)
    np.testing.assert_allclose(field, 1.0, atol=1e-14)


def test_synthesis_of_coarser_coefficients(plan31, rng):
    """Coefficients below the plan truncation synthesize via zero padding."""
    coarse = random_coeffs(rng, 15)
    np.testing.assert_array_equal(
        plan31.synthesize(coarse), plan31.synthesize(pad(coarse, 31))
    )
    with pytest.raises(ValueError):
        plan31.synthesize(random_coeffs(rng, 40))


def test_analyze_rejects_wrong_shape(plan31):
    with pytest.raises(ValueError):
        plan31.analyze(np.zeros((4, 4)))


def test_fourier_step_matches_naive_dft(rng, plan31):
    """One zonal wavenumber of the FFT path against the direct sum."""
    grid = plan31.grid
    field = rng.normal(size=(grid.n_lon, grid.n_lat))
    fourier = plan31._grid_to_fourier(field)
    for r in (0, 1, 7):
        np.testing.assert_allclose(
            fourier[r], naive_fourier_column(field, r), atol=1e-13 * np.max(np.abs(field))
        )


def test_conjugate_symmetry_reconstruction(rng, plan31):
    """The explicit sum over both wavenumber signs, with the negative-r
    coefficients supplied by conjugation, is real and matches synthesize."""
    coeffs = random_coeffs(rng, 31)
    fourier = plan31._contract_synthesis(plan31._p, coeffs)  # (R+1, n_lat)
    grid = plan31.grid
    lam = grid.lon[:, None]
    full = np.zeros((grid.n_lon, grid.n_lat), dtype=complex)
    for r in range(32):
        term = np.exp(1j * r * lam) * fourier[r][None, :]
        full += term if r == 0 else term + np.conj(term)
    scale = np.max(np.abs(full.real))
    assert np.max(np.abs(full.imag)) < 1e-12 * scale
    np.testing.assert_allclose(full.real, plan31.synthesize(coeffs), atol=1e-12 * scale)


def test_parseval(rng, plan31):
    coeffs = random_coeffs(rng, 31)
    field = plan31.synthesize(coeffs)
    grid = plan31.grid
    energy_grid = np.sum(field * field * grid.w) / grid.n_lon
    mult = np.ones((32, 1))
    mult[1:] = 2.0  # conjugate-symmetry multiplicity
    energy_spec = np.sum(np.abs(coeffs) ** 2 * mult)
    assert energy_grid == pytest.approx(energy_spec, rel=1e-10)


# -- spectral operators --------------------------------------------------------

def test_laplacian_eigenvalues():
    c = zeros_coeffs(5)
    c[0, 0] = 1.0
    assert np.all(laplacian(c, radius=2.0) == 0.0)
    c = zeros_coeffs(5)
    c[1, 1] = 1.0
    assert laplacian(c, radius=1.0)[1, 1] == pytest.approx(-2.0, abs=0)


def test_laplacian_matches_analytic_grid_laplacian(plan31):
    """The grid Laplacian of a single harmonic scales by -s(s+1)/a^2."""
    a = 6.37122e6
    for r, s in ((0, 4), (3, 7), (11, 20)):
        c = zeros_coeffs(31)
        c[r, s] = 1.0 - 0.5j if r else 1.0
        field = plan31.synthesize(c)
        lap_grid = plan31.synthesize(laplacian(c, a))
        np.testing.assert_allclose(
            lap_grid, -s * (s + 1) / a**2 * field, atol=1e-10 * np.max(np.abs(lap_grid))
        )


def test_inv_laplacian_gauge_and_roundtrip(rng):
    a = 6.37122e6
    assert np.all(inv_laplacian(zeros_coeffs(8), a) == 0.0)
    c = zeros_coeffs(8)
    c[0, 0] = 2.0
    assert np.all(inv_laplacian(c, a) == 0.0)

    x = random_coeffs(rng, 8)
    x[0, 0] = 0.0
    back = inv_laplacian(laplacian(x, a), a)
    assert np.max(np.abs(back - x)) < 1e-13 * np.max(np.abs(x))
    # with a mean component, the roundtrip removes exactly that component
    y = random_coeffs(rng, 8)
    back = inv_laplacian(laplacian(y, a), a)
    y[0, 0] = 0.0
    assert np.max(np.abs(back - y)) < 1e-13 * np.max(np.abs(y))
    lap_back = laplacian(inv_laplacian(y, a), a)
    assert np.max(np.abs(lap_back - y)) < 1e-13 * np.max(np.abs(y))


def test_truncate_and_pad(rng):
    x = random_coeffs(rng, 12)
    np.testing.assert_array_equal(truncate(x, 12), x)
    only_mean = truncate(x, 0)
    assert only_mean.shape == (1, 1) and only_mean[0, 0] == x[0, 0]

    x5 = random_coeffs(rng, 5)
    np.testing.assert_array_equal(truncate(pad(x5, 12), 5), x5)
    np.testing.assert_array_equal(pad(truncate(pad(x5, 12), 5), 12), pad(x5, 12))
    assert np.all(pad(zeros_coeffs(3), 9) == 0.0)

    # projection property: the difference after truncate-pad lives beyond R_c
    y = pad(truncate(x, 7), 12) - x
    assert np.max(np.abs(y[:8, :8])) == 0.0
    assert np.max(np.abs(y)) > 0.0

    with pytest.raises(ValueError):
        truncate(x, 13)
    with pytest.raises(ValueError):
        pad(x, 11)


def test_pad_is_adjoint_of_truncate(rng):
    x = random_coeffs(rng, 7)
    y = random_coeffs(rng, 15)
    lhs = np.vdot(pad(x, 15), y)
    rhs = np.vdot(x, truncate(y, 7))
    assert lhs == pytest.approx(rhs, rel=1e-13)
