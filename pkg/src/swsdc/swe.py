"""Shallow-water right-hand sides on the rotating sphere in spectral space.

The prognostic variables are the geopotential perturbation, vorticity and
divergence.  The right-hand side splits into a stiff part treated implicitly
(gravity-wave coupling plus diffusion, diagonal in spectral space) and an
explicitly treated part (Coriolis terms plus the quadratic advection terms,
evaluated pseudo-spectrally on the dealiased Gaussian grid).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import spharm
from .spharm import TransformPlan


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical constants of the shallow-water system.

    ``phi_bar`` is derived as ``g * h_bar`` so the two can never disagree.
    """

    radius: float
    omega: float
    gravity: float
    nu: float
    h_bar: float

    def __post_init__(self):
        if self.radius <= 0 or self.gravity <= 0 or self.h_bar <= 0:
            raise ValueError("radius, gravity and h_bar must be positive")
        if self.nu < 0:
            raise ValueError("diffusion coefficient must be non-negative")

    @property
    def phi_bar(self) -> float:
        return self.gravity * self.h_bar


@dataclasses.dataclass
class PrognosticState:
    """Spectral state (phi_prime, zeta, delta) at a common truncation.

    Supports vector-space algebra (`+`, `-`, scalar `*`) so the time
    integrators can form quadrature combinations directly.
    """

    phi_prime: np.ndarray
    zeta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        if not (self.phi_prime.shape == self.zeta.shape == self.delta.shape):
            raise ValueError("prognostic fields must share one truncation")

    @classmethod
    def zeros(cls, truncation: int) -> "PrognosticState":
        return cls(
            spharm.zeros_coeffs(truncation),
            spharm.zeros_coeffs(truncation),
            spharm.zeros_coeffs(truncation),
        )

    @property
    def truncation(self) -> int:
        return self.phi_prime.shape[-1] - 1

    def copy(self) -> "PrognosticState":
        return PrognosticState(
            self.phi_prime.copy(), self.zeta.copy(), self.delta.copy()
        )

    def __add__(self, other: "PrognosticState") -> "PrognosticState":
        return PrognosticState(
            self.phi_prime + other.phi_prime,
            self.zeta + other.zeta,
            self.delta + other.delta,
        )

    def __sub__(self, other: "PrognosticState") -> "PrognosticState":
        return PrognosticState(
            self.phi_prime - other.phi_prime,
            self.zeta - other.zeta,
            self.delta - other.delta,
        )

    def __mul__(self, scalar: float) -> "PrognosticState":
        return PrognosticState(
            self.phi_prime * scalar, self.zeta * scalar, self.delta * scalar
        )

    __rmul__ = __mul__

    def __iadd__(self, other: "PrognosticState") -> "PrognosticState":
        self.phi_prime += other.phi_prime
        self.zeta += other.zeta
        self.delta += other.delta
        return self

    def fields(self):
        return self.phi_prime, self.zeta, self.delta

    def linf(self) -> float:
        return max(float(np.max(np.abs(f))) for f in self.fields())

    def isfinite(self) -> bool:
        return all(np.isfinite(f).all() for f in self.fields())

    def truncated(self, truncation: int) -> "PrognosticState":
        return PrognosticState(
            spharm.truncate(self.phi_prime, truncation),
            spharm.truncate(self.zeta, truncation),
            spharm.truncate(self.delta, truncation),
        )

    def padded(self, truncation: int) -> "PrognosticState":
        return PrognosticState(
            spharm.pad(self.phi_prime, truncation),
            spharm.pad(self.zeta, truncation),
            spharm.pad(self.delta, truncation),
        )


@dataclasses.dataclass
class DiagnosticVelocities:
    """Grid velocities plus the stream function / velocity potential pair."""

    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    chi: np.ndarray


@dataclasses.dataclass
class EvalCounters:
    """Running totals of implicit solves and right-hand-side evaluations."""

    solves: int = 0
    implicit_evals: int = 0
    explicit_evals: int = 0

    def snapshot(self) -> "EvalCounters":
        return EvalCounters(self.solves, self.implicit_evals, self.explicit_evals)

    def since(self, other: "EvalCounters") -> "EvalCounters":
        return EvalCounters(
            self.solves - other.solves,
            self.implicit_evals - other.implicit_evals,
            self.explicit_evals - other.explicit_evals,
        )


class ShallowWaterRHS:
    """Evaluator for the split right-hand sides at one spatial truncation.

    Instances are cheap views over an immutable transform plan; evaluations
    are pure apart from the call counters.  ``include_nonlinear=False`` drops
    the quadratic terms, which is useful for linearized convergence studies.
    """

    def __init__(
        self,
        plan: TransformPlan,
        params: ModelParams,
        include_nonlinear: bool = True,
    ):
        self.plan = plan
        self.params = params
        self.include_nonlinear = include_nonlinear
        self.counters = EvalCounters()
        self.truncation = plan.truncation
        self.lambdas = spharm.laplacian_eigenvalues(plan.truncation, params.radius)
        # f = 2*Omega*sin(phi) on the grid; its gradient is purely latitudinal.
        self._f_grid = 2.0 * params.omega * plan.grid.mu[None, :]
        self._two_omega_over_a = 2.0 * params.omega / params.radius
        self._inv_cos2 = 1.0 / (1.0 - plan.grid.mu[None, :] ** 2)

    # -- diagnostics --------------------------------------------------------

    def cos_weighted_velocities(self, state: PrognosticState):
        """Grids of u*cos(phi) and v*cos(phi) via the Helmholtz decomposition."""
        psi = spharm.inv_laplacian(state.zeta, self.params.radius)
        chi = spharm.inv_laplacian(state.delta, self.params.radius)
        cu, cv = self.plan.synthesize_pair_cos_gradient(psi, chi)
        scale = 1.0 / self.params.radius
        return cu * scale, cv * scale, psi, chi

    def helmholtz_velocities(self, state: PrognosticState) -> DiagnosticVelocities:
        cu, cv, psi, chi = self.cos_weighted_velocities(state)
        inv_cos = 1.0 / self.plan.grid.cos_lat[None, :]
        return DiagnosticVelocities(u=cu * inv_cos, v=cv * inv_cos, psi=psi, chi=chi)

    def div_curl(self, cos_u: np.ndarray, cos_v: np.ndarray):
        """Spectral divergence and curl of a grid vector field given its
        cos-weighted components."""
        div, curl = self.plan.analyze_vector_div_curl(cos_u, cos_v)
        scale = 1.0 / self.params.radius
        return div * scale, curl * scale

    # -- split right-hand sides ---------------------------------------------

    def eval_l_g(self, state: PrognosticState) -> PrognosticState:
        """Gravity-wave coupling plus diffusion; diagonal in spectral space.

        The implicit geopotential term uses the perturbation only: the
        constant background is annihilated by the Laplacian.
        """
        nu_lam = self.params.nu * self.lambdas
        return PrognosticState(
            -self.params.phi_bar * state.delta + nu_lam * state.phi_prime,
            nu_lam * state.zeta,
            -self.lambdas * state.phi_prime + nu_lam * state.delta,
        )

    def eval_l_f(self, state: PrognosticState) -> PrognosticState:
        """Coriolis terms, evaluated pseudo-spectrally.

        With f a function of latitude only, V.grad(f) reduces to
        v*2*Omega*cos(phi)/a and the rotational term involves u only.
        """
        cu, cv, _, _ = self.cos_weighted_velocities(state)
        zeta_grid = self.plan.synthesize(state.zeta)
        delta_grid = self.plan.synthesize(state.delta)
        tend_zeta = -self._f_grid * delta_grid - self._two_omega_over_a * cv
        tend_delta = self._f_grid * zeta_grid - self._two_omega_over_a * cu
        zero = np.zeros_like(state.phi_prime)
        return PrognosticState(
            zero, self.plan.analyze(tend_zeta), self.plan.analyze(tend_delta)
        )

    def eval_n(self, state: PrognosticState) -> PrognosticState:
        """Quadratic advection terms via products on the dealiased grid."""
        cu, cv, _, _ = self.cos_weighted_velocities(state)
        phi_grid = self.plan.synthesize(state.phi_prime)
        zeta_grid = self.plan.synthesize(state.zeta)
        div_phi, _ = self.div_curl(phi_grid * cu, phi_grid * cv)
        div_zeta, curl_zeta = self.div_curl(zeta_grid * cu, zeta_grid * cv)
        kinetic = 0.5 * (cu * cu + cv * cv) * self._inv_cos2
        lap_kinetic = spharm.laplacian(self.plan.analyze(kinetic), self.params.radius)
        return PrognosticState(-div_phi, -div_zeta, curl_zeta - lap_kinetic)

    def eval_f_i(self, state: PrognosticState) -> PrognosticState:
        """Implicitly treated part of the splitting."""
        self.counters.implicit_evals += 1
        return self.eval_l_g(state)

    def eval_f_e(self, state: PrognosticState) -> PrognosticState:
        """Explicitly treated part of the splitting.

        Slot-wise equal to ``eval_l_f + eval_n``; the velocity reconstruction
        and grid synthesis are shared between the two term groups.
        """
        self.counters.explicit_evals += 1
        cu, cv, _, _ = self.cos_weighted_velocities(state)
        zeta_grid = self.plan.synthesize(state.zeta)
        delta_grid = self.plan.synthesize(state.delta)
        tend_zeta = self.plan.analyze(
            -self._f_grid * delta_grid - self._two_omega_over_a * cv
        )
        tend_delta = self.plan.analyze(
            self._f_grid * zeta_grid - self._two_omega_over_a * cu
        )
        tend_phi = np.zeros_like(state.phi_prime)
        if not self.include_nonlinear:
            return PrognosticState(tend_phi, tend_zeta, tend_delta)
        phi_grid = self.plan.synthesize(state.phi_prime)
        div_phi, _ = self.div_curl(phi_grid * cu, phi_grid * cv)
        div_zeta, curl_zeta = self.div_curl(zeta_grid * cu, zeta_grid * cv)
        kinetic = 0.5 * (cu * cu + cv * cv) * self._inv_cos2
        lap_kinetic = spharm.laplacian(self.plan.analyze(kinetic), self.params.radius)
        return PrognosticState(
            tend_phi - div_phi,
            tend_zeta - div_zeta,
            tend_delta + (curl_zeta - lap_kinetic),
        )

    def solve_implicit(self, b: PrognosticState, beta: float) -> PrognosticState:
        from .implicit import ImplicitSolveContext, solve_implicit

        self.counters.solves += 1
        ctx = ImplicitSolveContext(
            beta=beta, params=self.params, lambdas=self.lambdas
        )
        return solve_implicit(b, ctx)
