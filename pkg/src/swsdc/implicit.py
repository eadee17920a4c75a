"""Closed-form solve of the per-node implicit system.

Each spectral mode of ``theta - beta * F_I(theta) = b`` decouples: the
vorticity update is a scalar division and the geopotential/divergence pair is
a 2x2 system coupled through the mean geopotential and the Laplacian
eigenvalue, solved by the determinant rule.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .swe import ModelParams, PrognosticState


@dataclasses.dataclass(frozen=True)
class ImplicitSolveContext:
    """Effective implicit step ``beta = dt * qI_diag`` plus mode eigenvalues."""

    beta: float
    params: ModelParams
    lambdas: np.ndarray

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("implicit step must be non-negative")


def solve_implicit(b: PrognosticState, ctx: ImplicitSolveContext) -> PrognosticState:
    """Solve ``theta - beta*F_I(theta) = b`` exactly, mode by mode.

    For ``lambda_s <= 0`` and ``nu >= 0`` the 2x2 determinant is bounded below
    by one; a non-positive determinant therefore signals invalid parameters
    and raises.
    """
    beta = ctx.beta
    lam = ctx.lambdas
    nu = ctx.params.nu
    phi_bar = ctx.params.phi_bar
    diag = 1.0 - beta * nu * lam
    det = diag * diag - beta * beta * lam * phi_bar
    if np.any(det <= 0.0):
        raise RuntimeError("implicit system is singular; invalid model parameters")
    phi = (diag * b.phi_prime - beta * phi_bar * b.delta) / det
    delta = (diag * b.delta - beta * lam * b.phi_prime) / det
    zeta = b.zeta / diag
    return PrognosticState(phi, zeta, delta)
