"""Global spherical-harmonics transform on the Gaussian grid.

Scalar fields live on a longitude-latitude grid of shape ``(n_lon, n_lat)``
with equispaced longitudes ``lam_i = 2*pi*i/n_lon`` and Gaussian latitudes
``mu_j = sin(phi_j)`` (roots of the Legendre polynomial of degree ``n_lat``).
Spectral coefficients are stored as complex arrays of shape ``(R+1, R+1)``
indexed ``[r, s]`` where ``r`` is the zonal (Fourier) wavenumber and ``s`` the
total wavenumber, triangularly truncated to ``r <= s <= R``.  Entries with
``s < r`` are structural zeros.  Only ``r >= 0`` is stored; the ``r < 0``
coefficients of a real field are implied by conjugate symmetry.

The associated Legendre functions ``P_s^r`` are normalized to be orthonormal
on ``mu in [-1, 1]`` (so ``P_0^0 = 1/sqrt(2)``), and the forward Fourier step
carries the ``1/n_lon`` factor.  Under this convention the coefficients of a
constant field ``c`` are ``c*sqrt(2)`` in the ``(0, 0)`` mode and zero
elsewhere.
"""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = [
    "GaussianGrid",
    "TransformPlan",
    "build_gaussian_grid",
    "default_grid_shape",
    "gauss_legendre_nodes",
    "inv_laplacian",
    "laplacian",
    "next_fast_size",
    "pad",
    "truncate",
    "zeros_coeffs",
]


def next_fast_size(n: int) -> int:
    """Smallest integer >= n whose prime factors are all in {2, 3, 5}."""
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


def gauss_legendre_nodes(n: int, tol: float = 1e-14, max_iter: int = 100):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Roots of ``P_n`` are located from the Chebyshev-like initial guesses and
    polished with Newton iterations on the Legendre recurrence.  Raises if any
    root fails to converge to ``tol``, which signals defective iteration
    bounds rather than a recoverable condition.
    """
    if n < 1:
        raise ValueError(f"need at least one node, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    converged = np.zeros(n, dtype=bool)
    dpn = np.empty_like(x)
    for _ in range(max_iter):
        # Legendre recurrence for P_n(x) and its derivative.
        p_prev = np.ones_like(x)
        p = x.copy()
        for deg in range(2, n + 1):
            p_prev, p = p, ((2 * deg - 1) * x * p - (deg - 1) * p_prev) / deg
        dpn = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dpn
        x -= dx
        converged = np.abs(dx) <= tol
        if converged.all():
            break
    if not converged.all():
        raise RuntimeError(f"Gauss-Legendre root search failed to converge for n={n}")
    w = 2.0 / ((1.0 - x * x) * dpn * dpn)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # Symmetrize to remove last-ulp asymmetry of the Newton iterates.
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


@dataclasses.dataclass(frozen=True)
class GaussianGrid:
    """Equispaced longitudes and Gaussian latitudes.

    ``mu`` holds the n_lat Gaussian latitudes (strictly increasing, symmetric
    about zero) and ``w`` the corresponding quadrature weights, which sum to 2
    and integrate polynomials in mu up to degree ``2*n_lat - 1`` exactly.
    """

    n_lon: int
    n_lat: int
    mu: np.ndarray
    w: np.ndarray

    @property
    def lon(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_lon) / self.n_lon

    @property
    def lat(self) -> np.ndarray:
        """Latitudes phi_j = arcsin(mu_j) in radians."""
        return np.arcsin(self.mu)

    @property
    def cos_lat(self) -> np.ndarray:
        return np.sqrt(1.0 - self.mu * self.mu)

    def quad_mean(self, field: np.ndarray) -> float:
        """Area-weighted global mean of a grid field of shape (n_lon, n_lat)."""
        return float(np.sum(field * self.w) / (2.0 * self.n_lon))


def build_gaussian_grid(n_lat: int, n_lon: int | None = None) -> GaussianGrid:
    """Gaussian grid with ``n_lat`` latitudes; ``n_lon`` defaults to an
    FFT-friendly size >= 2*n_lat."""
    mu, w = gauss_legendre_nodes(n_lat)
    if n_lon is None:
        n_lon = next_fast_size(2 * n_lat)
    return GaussianGrid(n_lon=n_lon, n_lat=n_lat, mu=mu, w=w)


def default_grid_shape(truncation: int) -> tuple[int, int]:
    """Dealiased grid size (n_lon, n_lat) for triangular truncation R.

    n_lon is the smallest FFT-friendly integer >= 3R+1 and
    n_lat = ceil((3R+1)/2), which removes aliasing of quadratic products.
    """
    n_lon = next_fast_size(3 * truncation + 1)
    n_lat = -(-(3 * truncation + 1) // 2)
    return n_lon, n_lat


def _legendre_tables(trunc: int, mu: np.ndarray):
    """Normalized associated Legendre values and their mu-derivative form.

    Returns ``(P, H)`` with shapes (R+1, R+2, J) and (R+1, R+1, J):
    ``P[r, s, j] = Pbar_s^r(mu_j)`` for r <= s (zero elsewhere) and
    ``H[r, s, j] = (1 - mu_j^2) * d Pbar_s^r / d mu (mu_j)``.

    The recurrence runs upward in degree s at fixed order r, seeded by the
    closed-form sectoral value, which keeps every entry O(1) at all degrees.
    """
    nlat = mu.size
    smax = trunc + 1  # H at degree R needs P at degree R+1
    p = np.zeros((trunc + 1, smax + 1, nlat))
    u = np.sqrt(1.0 - mu * mu)
    sect = np.full(nlat, 1.0 / np.sqrt(2.0))  # Pbar_0^0
    for r in range(trunc + 1):
        p[r, r] = sect
        if r + 1 <= smax:
            p[r, r + 1] = mu * np.sqrt(2.0 * r + 3.0) * sect
        for s in range(r + 2, smax + 1):
            a = np.sqrt((4.0 * s * s - 1.0) / (s * s - r * r))
            b = np.sqrt(
                (2.0 * s + 1.0)
                * (s - 1.0 - r)
                * (s - 1.0 + r)
                / ((2.0 * s - 3.0) * (s * s - r * r))
            )
            p[r, s] = a * mu * p[r, s - 1] - b * p[r, s - 2]
        sect = sect * u * np.sqrt((2.0 * r + 3.0) / (2.0 * r + 2.0))

    h = np.zeros((trunc + 1, trunc + 1, nlat))
    for r in range(trunc + 1):
        for s in range(r, trunc + 1):
            eps_up = np.sqrt(((s + 1.0) ** 2 - r * r) / (4.0 * (s + 1.0) ** 2 - 1.0))
            h[r, s] = -s * eps_up * p[r, s + 1]
            if s > r:
                eps_dn = np.sqrt((s * s - r * r) / (4.0 * s * s - 1.0))
                h[r, s] += (s + 1.0) * eps_dn * p[r, s - 1]
    return p[:, : trunc + 1, :], h


class TransformPlan:
    """Precomputed tables for transforms at a fixed triangular truncation.

    Immutable after construction; safe to share across concurrent workers.
    All transform methods are pure and allocate their own outputs.
    """

    def __init__(self, grid: GaussianGrid, truncation: int):
        if truncation < 0:
            raise ValueError("truncation must be non-negative")
        if grid.n_lon < 2 * truncation + 1:
            raise ValueError(
                f"n_lon={grid.n_lon} cannot carry zonal wavenumbers up to {truncation}"
            )
        self.grid = grid
        self.truncation = truncation
        p, h = _legendre_tables(truncation, grid.mu)
        self._p = p
        self._h = h
        w = grid.w
        w_cos2 = grid.w / (1.0 - grid.mu**2)
        self._pw = p * w
        self._pw_cos2 = p * w_cos2
        self._hw_cos2 = h * w_cos2
        self._r = np.arange(truncation + 1)

    # -- low-level halves of the transform ---------------------------------

    def _grid_to_fourier(self, field: np.ndarray) -> np.ndarray:
        """Zonal Fourier coefficients xi^r(mu_j), shape (R+1, n_lat)."""
        if field.shape != (self.grid.n_lon, self.grid.n_lat):
            raise ValueError(
                f"field shape {field.shape} does not match grid "
                f"({self.grid.n_lon}, {self.grid.n_lat})"
            )
        return np.fft.rfft(field, axis=0)[: self.truncation + 1] / self.grid.n_lon

    def _fourier_to_grid(self, fourier: np.ndarray) -> np.ndarray:
        buf = np.zeros((self.grid.n_lon // 2 + 1, self.grid.n_lat), dtype=complex)
        buf[: self.truncation + 1] = fourier
        return np.fft.irfft(buf * self.grid.n_lon, n=self.grid.n_lon, axis=0)

    @staticmethod
    def _contract_analysis(table: np.ndarray, fourier: np.ndarray) -> np.ndarray:
        """coeffs[r, s] = sum_j table[r, s, j] * fourier[r, j].

        Real and imaginary parts ride through one batched matmul so each
        Legendre table is streamed once per call.
        """
        stacked = np.stack([fourier.real, fourier.imag], axis=-1)
        out = np.matmul(table, stacked)
        return out[..., 0] + 1j * out[..., 1]

    def _contract_synthesis(self, table: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        """fourier[r, j] = sum_s table[r, s, j] * coeffs[r, s]."""
        c = self._at_plan_truncation(coeffs)
        stacked = np.stack([c.real, c.imag], axis=1)
        out = np.matmul(stacked, table)
        return out[:, 0, :] + 1j * out[:, 1, :]

    def _at_plan_truncation(self, coeffs: np.ndarray) -> np.ndarray:
        r_in = coeffs.shape[-1] - 1
        if r_in == self.truncation:
            return coeffs
        if r_in < self.truncation:
            return pad(coeffs, self.truncation)
        raise ValueError(
            f"coefficients at truncation {r_in} exceed plan truncation {self.truncation}"
        )

    # -- public transforms --------------------------------------------------

    def analyze(self, field: np.ndarray) -> np.ndarray:
        """Grid field (n_lon, n_lat) -> spectral coefficients (R+1, R+1)."""
        return self._contract_analysis(self._pw, self._grid_to_fourier(field))

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Spectral coefficients -> real grid field (n_lon, n_lat)."""
        return self._fourier_to_grid(self._contract_synthesis(self._p, coeffs))

    def synthesize_pair_cos_gradient(self, psi: np.ndarray, chi: np.ndarray):
        """Cos-weighted velocity components from stream function / potential.

        Given psi and chi (spectral, dimension m^2/s), returns the grids
        ``U = u*cos(phi)`` and ``V = v*cos(phi)`` in m/s scaled by the unit
        sphere; callers divide by the radius.  Uses

            U = -(1-mu^2) d(psi)/dmu + d(chi)/dlam,
            V =  (1-mu^2) d(chi)/dmu + d(psi)/dlam.
        """
        ir = 1j * self._r[:, None]
        f_u = ir * self._contract_synthesis(self._p, chi) - self._contract_synthesis(
            self._h, psi
        )
        f_v = ir * self._contract_synthesis(self._p, psi) + self._contract_synthesis(
            self._h, chi
        )
        return self._fourier_to_grid(f_u), self._fourier_to_grid(f_v)

    def analyze_vector_div_curl(self, cos_u: np.ndarray, cos_v: np.ndarray):
        """Spectral divergence and curl of a vector field given cos-weighted
        components on the grid, scaled by the unit sphere.

        Takes ``cos_u = w_lambda*cos(phi)`` and ``cos_v = w_phi*cos(phi)`` and
        returns ``(div, curl)`` coefficient arrays; callers divide by the
        radius.  The latitudinal derivative is integrated by parts onto the
        Legendre functions, which is exact under the Gaussian quadrature for
        band-limited vector fields.
        """
        f_a = self._grid_to_fourier(cos_u)
        f_b = self._grid_to_fourier(cos_v)
        ir = 1j * self._r[:, None]
        div = self._contract_analysis(
            self._pw_cos2, ir * f_a
        ) - self._contract_analysis(self._hw_cos2, f_b)
        curl = self._contract_analysis(
            self._pw_cos2, ir * f_b
        ) + self._contract_analysis(self._hw_cos2, f_a)
        return div, curl


def zeros_coeffs(truncation: int) -> np.ndarray:
    return np.zeros((truncation + 1, truncation + 1), dtype=complex)


def laplacian_eigenvalues(truncation: int, radius: float) -> np.ndarray:
    """Per-degree Laplacian eigenvalues -s(s+1)/a^2, shape (R+1,)."""
    s = np.arange(truncation + 1, dtype=float)
    return -s * (s + 1.0) / (radius * radius)


def laplacian(coeffs: np.ndarray, radius: float) -> np.ndarray:
    """Spherical Laplacian in spectral space: multiply by -s(s+1)/a^2."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return coeffs * laplacian_eigenvalues(coeffs.shape[-1] - 1, radius)


def inv_laplacian(coeffs: np.ndarray, radius: float) -> np.ndarray:
    """Inverse Laplacian; the singular s=0 mode is gauged to zero."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    lam = laplacian_eigenvalues(coeffs.shape[-1] - 1, radius)
    lam[0] = 1.0  # placeholder, the s=0 column is zeroed below
    out = coeffs / lam
    out[..., 0] = 0.0
    return out


def truncate(coeffs: np.ndarray, truncation: int) -> np.ndarray:
    """Keep the (r, s) entries with r <= R_c and s <= R_c."""
    r_in = coeffs.shape[-1] - 1
    if truncation > r_in:
        raise ValueError(f"cannot truncate R={r_in} to larger R={truncation}")
    return coeffs[..., : truncation + 1, : truncation + 1].copy()


def pad(coeffs: np.ndarray, truncation: int) -> np.ndarray:
    """Embed coefficients into a larger truncation, zeros elsewhere.

    The transpose of :func:`truncate` as a linear operator.
    """
    r_in = coeffs.shape[-1] - 1
    if truncation < r_in:
        raise ValueError(f"cannot pad R={r_in} to smaller R={truncation}")
    out = np.zeros(coeffs.shape[:-2] + (truncation + 1, truncation + 1), dtype=coeffs.dtype)
    out[..., : r_in + 1, : r_in + 1] = coeffs
    return out
