"""Gauss-Lobatto collocation machinery and the single-level IMEX SDC step.

A time step integrates over ``[t_n, t_n + dt]`` using M+1 Gauss-Lobatto nodes
``tau_m`` on the unit interval.  Each sweep applies one pass of the discrete
correction update over the nodes: explicit differences are propagated with
forward-Euler weights, implicit differences with the lower-triangular weights
obtained from the LU trick, and the previous iterate enters through the full
collocation quadrature.  Node 0 carries the step's initial condition and is
never modified.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .swe import PrognosticState, ShallowWaterRHS

SUPPORTED_NODE_COUNTS = (2, 3, 5)


def lobatto_nodes(n_nodes: int) -> np.ndarray:
    """Gauss-Lobatto nodes on [0, 1] for the supported counts {2, 3, 5}.

    These counts nest (each coarser set is a subset of the finer ones), which
    the multi-level time transfer relies on.
    """
    if n_nodes == 2:
        return np.array([0.0, 1.0])
    if n_nodes == 3:
        return np.array([0.0, 0.5, 1.0])
    if n_nodes == 5:
        c = math.sqrt(3.0 / 7.0)
        return np.array([0.0, 0.5 * (1.0 - c), 0.5, 0.5 * (1.0 + c), 1.0])
    raise ValueError(
        f"unsupported node count {n_nodes}; supported: {SUPPORTED_NODE_COUNTS}"
    )


def lagrange_basis(nodes: np.ndarray) -> list[np.polynomial.Polynomial]:
    """Lagrange basis polynomials through the given nodes."""
    basis = []
    for j, tj in enumerate(nodes):
        others = np.delete(nodes, j)
        denom = np.prod(tj - others)
        basis.append(np.polynomial.Polynomial.fromroots(others) / denom)
    return basis


def build_q(nodes: np.ndarray) -> np.ndarray:
    """Collocation weights ``q[m, j] = integral of L_j over [tau_0, tau_m]``.

    Row 0 is zero and row sums equal ``tau_m`` (integral of the constant 1).
    """
    n = nodes.size
    q = np.zeros((n, n))
    for j, poly in enumerate(lagrange_basis(nodes)):
        anti = poly.integ()
        q[:, j] = anti(nodes) - anti(nodes[0])
    return q


def _lu_nopivot(a: np.ndarray):
    """Doolittle LU factorization without pivoting; raises on a zero pivot."""
    n = a.shape[0]
    lower = np.eye(n)
    upper = a.astype(float).copy()
    for k in range(n - 1):
        if upper[k, k] == 0.0:
            raise RuntimeError("zero pivot in LU factorization of the weight block")
        for i in range(k + 1, n):
            lower[i, k] = upper[i, k] / upper[k, k]
            upper[i, k:] -= lower[i, k] * upper[k, k:]
            upper[i, k] = 0.0
    if upper[n - 1, n - 1] == 0.0:
        raise RuntimeError("zero pivot in LU factorization of the weight block")
    return lower, upper


def build_qdelta_implicit(q: np.ndarray) -> np.ndarray:
    """Implicit sweep weights from the LU trick.

    The full collocation matrix is singular through its zero first row, so the
    trailing MxM block of its transpose is factored (without pivoting) and the
    transposed upper factor is re-embedded with a zero first row and column.
    The result is lower triangular with the diagonal entries used by the
    per-node implicit solves.
    """
    n = q.shape[0]
    _, upper = _lu_nopivot(q[1:, 1:].T)
    out = np.zeros((n, n))
    out[1:, 1:] = upper.T
    return out


def build_qdelta_explicit(nodes: np.ndarray) -> np.ndarray:
    """Forward-Euler sweep weights: entry (m, j) = tau_{j+1} - tau_j for j < m.

    Strictly lower triangular; row sums telescope to tau_m.  The j = 0 column
    is stored even though the sweep's node-0 difference always vanishes.
    """
    n = nodes.size
    out = np.zeros((n, n))
    steps = np.diff(nodes)
    for m in range(1, n):
        out[m, :m] = steps[:m]
    return out


@dataclasses.dataclass(frozen=True)
class QuadratureTables:
    """Nodes plus collocation and low-order sweep weight matrices."""

    nodes: np.ndarray
    q: np.ndarray
    q_delta_i: np.ndarray
    q_delta_e: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.size


def build_tables(n_nodes: int) -> QuadratureTables:
    nodes = lobatto_nodes(n_nodes)
    q = build_q(nodes)
    return QuadratureTables(
        nodes=nodes,
        q=q,
        q_delta_i=build_qdelta_implicit(q),
        q_delta_e=build_qdelta_explicit(nodes),
    )


@dataclasses.dataclass
class SweepState:
    """Node states and cached tendencies for one time step.

    The caches equal fresh evaluations of the stored states after a sweep; the
    multi-level return step deliberately corrects them without re-evaluation,
    so they may be "dirty" at the start of the next iteration.
    """

    theta: list[PrognosticState]
    f_i: list[PrognosticState]
    f_e: list[PrognosticState]
    k: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.theta)


def initialize_nodes(
    theta_0: PrognosticState, rhs: ShallowWaterRHS, n_nodes: int
) -> SweepState:
    """Copy the step's initial state to every node and cache its tendencies.

    The tendencies are evaluated once and shared structurally across nodes;
    the node states are independent copies.
    """
    f_i = rhs.eval_f_i(theta_0)
    f_e = rhs.eval_f_e(theta_0)
    return SweepState(
        theta=[theta_0.copy() for _ in range(n_nodes)],
        f_i=[f_i] + [f_i.copy() for _ in range(n_nodes - 1)],
        f_e=[f_e] + [f_e.copy() for _ in range(n_nodes - 1)],
    )


def sdc_sweep(
    sw: SweepState,
    tables: QuadratureTables,
    dt: float,
    rhs: ShallowWaterRHS,
    fas_tau: list[PrognosticState] | None = None,
) -> SweepState:
    """One pass of the correction update over nodes 1..M, in place.

    When ``fas_tau`` is given (multi-level coarse sweeps), its node-m entry is
    added to the node-m update.
    """
    m_last = sw.n_nodes - 1
    q, q_i, q_e = tables.q, tables.q_delta_i, tables.q_delta_e
    theta_0 = sw.theta[0]
    # Full quadrature of the previous iterate, per node.
    f_old = [sw.f_i[j] + sw.f_e[j] for j in range(sw.n_nodes)]
    quad = [None] + [
        dt * _combine(q[m], f_old) for m in range(1, sw.n_nodes)
    ]
    fi_old = list(sw.f_i)
    fe_old = list(sw.f_e)
    for m in range(1, sw.n_nodes):
        b = theta_0 + quad[m]
        for j in range(1, m):
            b += (dt * q_e[m, j]) * (sw.f_e[j] - fe_old[j])
            b += (dt * q_i[m, j]) * (sw.f_i[j] - fi_old[j])
        b += (-dt * q_i[m, m]) * fi_old[m]
        if fas_tau is not None:
            b += fas_tau[m]
        theta_new = rhs.solve_implicit(b, dt * q_i[m, m])
        sw.theta[m] = theta_new
        sw.f_i[m] = rhs.eval_f_i(theta_new)
        sw.f_e[m] = rhs.eval_f_e(theta_new)
    sw.k += 1
    return sw


def _combine(weights: np.ndarray, states: list[PrognosticState]) -> PrognosticState:
    """Weighted sum of states; skips exactly-zero weights."""
    out = None
    for w, st in zip(weights, states):
        if w == 0.0:
            continue
        out = w * st if out is None else out + w * st
    if out is None:
        out = PrognosticState.zeros(states[0].truncation)
    return out


def collocation_residual(
    sw: SweepState, tables: QuadratureTables, dt: float
) -> np.ndarray:
    """Per-node max-norm residual of the collocation problem at the cached
    iterate."""
    f_all = [sw.f_i[j] + sw.f_e[j] for j in range(sw.n_nodes)]
    norms = np.zeros(sw.n_nodes)
    for m in range(1, sw.n_nodes):
        res = sw.theta[0] + dt * _combine(tables.q[m], f_all) - sw.theta[m]
        norms[m] = res.linf()
    return norms


def sdc_timestep(
    theta_n: PrognosticState,
    dt: float,
    n_sweeps: int,
    tables: QuadratureTables,
    rhs: ShallowWaterRHS,
) -> PrognosticState:
    """Advance one time step with a fixed number of sweeps.

    The sweep count is always exactly ``n_sweeps`` (no convergence-based
    early exit), which keeps the cost accounting deterministic.
    """
    if n_sweeps < 1:
        raise ValueError("at least one sweep is required")
    sw = initialize_nodes(theta_n, rhs, tables.n_nodes)
    for _ in range(n_sweeps):
        sdc_sweep(sw, tables, dt, rhs)
    return sw.theta[-1]
