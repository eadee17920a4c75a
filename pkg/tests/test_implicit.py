"""Per-mode implicit solve: closed form, residuals, dense-probe equivalence."""

import numpy as np
import pytest

from swsdc import spharm
from swsdc.implicit import ImplicitSolveContext, solve_implicit
from swsdc.swe import PrognosticState, ShallowWaterRHS

from conftest import make_plan, random_state


def make_context(params, truncation, beta):
    lam = spharm.laplacian_eigenvalues(truncation, params.radius)
    return ImplicitSolveContext(beta=beta, params=params, lambdas=lam)


def test_zero_step_is_identity(rng, params):
    b = random_state(rng, 15)
    out = solve_implicit(b, make_context(params, 15, 0.0))
    assert (out - b).linf() == 0.0


def test_mean_mode_closed_form(rng, params):
    """With a zero eigenvalue the solve reduces to a back-substitution."""
    beta = 140.0
    b = PrognosticState.zeros(7)
    b.phi_prime[0, 0] = 3.0
    b.zeta[0, 0] = -1.0
    b.delta[0, 0] = 2.0
    out = solve_implicit(b, make_context(params, 7, beta))
    assert out.zeta[0, 0] == pytest.approx(-1.0, abs=0)
    assert out.delta[0, 0] == pytest.approx(2.0, abs=0)
    assert out.phi_prime[0, 0] == pytest.approx(3.0 - beta * params.phi_bar * 2.0)


def test_residual_oracle(rng, params):
    """Solution satisfies theta - beta*F_I(theta) = b via the independent
    right-hand-side evaluator."""
    rhs = ShallowWaterRHS(make_plan(31), params)
    beta = 450.0 * 0.25
    for _ in range(5):
        b = random_state(rng, 31)
        theta = rhs.solve_implicit(b, beta)
        res = theta - beta * rhs.eval_f_i(theta) - b
        assert res.linf() < 1e-10 * b.linf()


def test_mode_locality(params):
    """Perturbing one input mode perturbs only that output mode."""
    ctx = make_context(params, 9, 200.0)
    base = solve_implicit(PrognosticState.zeros(9), ctx)
    bumped = PrognosticState.zeros(9)
    bumped.phi_prime[2, 5] = 1.0 + 0.5j
    out = solve_implicit(bumped, ctx)
    delta = out - base
    mask = np.zeros((10, 10), dtype=bool)
    mask[2, 5] = True
    for field in delta.fields():
        assert np.all(field[~mask] == 0.0)


def test_dense_probe_equivalence(rng, params):
    """Assemble the full implicit operator by probing F_I with unit states at
    R=3 and solve densely; outputs must match the closed-form solver."""
    trunc = 3
    rhs = ShallowWaterRHS(make_plan(trunc), params)
    beta = 300.0 * 0.4
    n = (trunc + 1) ** 2 * 3
    matrix = np.zeros((n, n), dtype=complex)
    for k in range(n):
        unit = PrognosticState.zeros(trunc)
        flat = np.concatenate([f.ravel() for f in unit.fields()])
        flat[k] = 1.0
        unit = _unflatten(flat, trunc)
        image = unit - beta * rhs.eval_f_i(unit)
        matrix[:, k] = np.concatenate([f.ravel() for f in image.fields()])
    b = random_state(rng, trunc)
    b_flat = np.concatenate([f.ravel() for f in b.fields()])
    dense = np.linalg.solve(matrix, b_flat)
    closed = rhs.solve_implicit(b, beta)
    closed_flat = np.concatenate([f.ravel() for f in closed.fields()])
    assert np.max(np.abs(dense - closed_flat)) < 1e-12 * np.max(np.abs(closed_flat))


def _unflatten(flat, trunc):
    k = (trunc + 1) ** 2
    shape = (trunc + 1, trunc + 1)
    return PrognosticState(
        flat[:k].reshape(shape).copy(),
        flat[k : 2 * k].reshape(shape).copy(),
        flat[2 * k :].reshape(shape).copy(),
    )


def test_invalid_parameters_raise(rng, params):
    """A fabricated positive eigenvalue drives the determinant negative."""
    lam = np.array([0.0, 1.0e-7])
    ctx = ImplicitSolveContext(beta=1.0e4, params=params, lambdas=lam)
    b = PrognosticState.zeros(1)
    b.phi_prime[0, 0] = 1.0
    with pytest.raises(RuntimeError):
        solve_implicit(b, ctx)
    with pytest.raises(ValueError):
        ImplicitSolveContext(beta=-1.0, params=params, lambdas=lam)
