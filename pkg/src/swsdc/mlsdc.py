"""Two-level MLSDC: space-time transfer operators, FAS coupling, V-cycle.

Each iteration sweeps once on the fine level, restricts the node states to a
coarser truncation and node set, sweeps once on the coarse level with a full
approximation scheme correction, and interpolates the coarse state and
tendency updates back without any fine re-evaluation.  Spatial transfer is
spectral truncation/padding; temporal transfer is Lagrange interpolation
between nested Gauss-Lobatto node sets, which reduces to pointwise injection
on restriction.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import sdc, spharm
from .sdc import QuadratureTables, SweepState, _combine
from .swe import ModelParams, PrognosticState, ShallowWaterRHS


@dataclasses.dataclass(frozen=True)
class Level:
    """One space-time level: a transform plan, quadrature tables and an
    instrumented right-hand-side evaluator."""

    plan: spharm.TransformPlan
    tables: QuadratureTables
    rhs: ShallowWaterRHS

    @property
    def truncation(self) -> int:
        return self.plan.truncation

    @property
    def n_nodes(self) -> int:
        return self.tables.n_nodes


def time_transfer_matrix(
    nodes_from: np.ndarray, nodes_to: np.ndarray
) -> np.ndarray:
    """Lagrange evaluation matrix mapping node values between node sets.

    Entry (i, j) is the j-th Lagrange polynomial of ``nodes_from`` evaluated
    at ``nodes_to[i]``; rows sum to one.  For nested nodes the product form
    yields exact 0/1 selection rows.
    """
    out = np.empty((nodes_to.size, nodes_from.size))
    for j, tj in enumerate(nodes_from):
        others = np.delete(nodes_from, j)
        denom = np.prod(tj - others)
        for i, ti in enumerate(nodes_to):
            out[i, j] = np.prod(ti - others) / denom
    return out


@dataclasses.dataclass(frozen=True)
class TransferOps:
    """Space-time restriction and interpolation between two levels."""

    pi_fc: np.ndarray  # (M_c+1, M_f+1) time restriction
    pi_cf: np.ndarray  # (M_f+1, M_c+1) time interpolation
    r_coarse: int
    r_fine: int

    @classmethod
    def build(
        cls, nodes_fine: np.ndarray, nodes_coarse: np.ndarray, r_fine: int, r_coarse: int
    ) -> "TransferOps":
        if nodes_coarse.size > nodes_fine.size:
            raise ValueError("coarse level cannot have more nodes than fine")
        if r_coarse > r_fine:
            raise ValueError("coarse truncation cannot exceed fine truncation")
        return cls(
            pi_fc=time_transfer_matrix(nodes_fine, nodes_coarse),
            pi_cf=time_transfer_matrix(nodes_coarse, nodes_fine),
            r_coarse=r_coarse,
            r_fine=r_fine,
        )

    def restrict_states(
        self, fine: list[PrognosticState]
    ) -> list[PrognosticState]:
        """Time restriction followed by per-node spectral truncation."""
        combined = [_combine(row, fine) for row in self.pi_fc]
        return [st.truncated(self.r_coarse) for st in combined]

    def interpolate_deltas(
        self, coarse: list[PrognosticState]
    ) -> list[PrognosticState]:
        """Per-node spectral padding followed by time interpolation."""
        padded = [st.padded(self.r_fine) for st in coarse]
        return [_combine(row, padded) for row in self.pi_cf]


def compute_fas(
    sw_fine: SweepState,
    sw_coarse: SweepState,
    tables_fine: QuadratureTables,
    tables_coarse: QuadratureTables,
    dt: float,
    ops: TransferOps,
    tau_fine: list[PrognosticState] | None = None,
) -> list[PrognosticState]:
    """FAS correction at the coarse nodes from the cached tendencies.

    Only the quadrature parts of the collocation operators contribute: the
    identity parts cancel exactly because the coarse operator is evaluated at
    the restricted states.  Row 0 is structurally zero.
    """
    f_fine = [sw_fine.f_i[j] + sw_fine.f_e[j] for j in range(sw_fine.n_nodes)]
    int_fine = [dt * _combine(row, f_fine) for row in tables_fine.q]
    restricted = ops.restrict_states(int_fine)
    f_coarse = [sw_coarse.f_i[j] + sw_coarse.f_e[j] for j in range(sw_coarse.n_nodes)]
    tau = [
        restricted[m] - dt * _combine(tables_coarse.q[m], f_coarse)
        for m in range(sw_coarse.n_nodes)
    ]
    if tau_fine is not None:
        for m, extra in enumerate(ops.restrict_states(tau_fine)):
            tau[m] += extra
    return tau


def coarse_sweep_with_tau(
    sw: SweepState,
    tables: QuadratureTables,
    dt: float,
    rhs: ShallowWaterRHS,
    tau: list[PrognosticState],
) -> SweepState:
    """One modified coarse sweep; the node-m correction is added to each
    node-m update.  Exactly one sweep per call."""
    return sdc.sdc_sweep(sw, tables, dt, rhs, fas_tau=tau)


@dataclasses.dataclass(frozen=True)
class TwoLevelHierarchy:
    fine: Level
    coarse: Level
    ops: TransferOps

    @property
    def alpha(self) -> float:
        """Effective spatial coarsening ratio R_c / R_f."""
        return self.coarse.truncation / self.fine.truncation


def build_level(
    truncation: int,
    n_nodes: int,
    params: ModelParams,
    include_nonlinear: bool = True,
    grid_shape: tuple[int, int] | None = None,
) -> Level:
    n_lon, n_lat = grid_shape if grid_shape else spharm.default_grid_shape(truncation)
    grid = spharm.build_gaussian_grid(n_lat, n_lon)
    plan = spharm.TransformPlan(grid, truncation)
    return Level(
        plan=plan,
        tables=sdc.build_tables(n_nodes),
        rhs=ShallowWaterRHS(plan, params, include_nonlinear=include_nonlinear),
    )


def build_hierarchy(
    params: ModelParams,
    r_fine: int,
    nodes_fine: int,
    r_coarse: int,
    nodes_coarse: int,
    include_nonlinear: bool = True,
) -> TwoLevelHierarchy:
    fine = build_level(r_fine, nodes_fine, params, include_nonlinear)
    coarse = build_level(r_coarse, nodes_coarse, params, include_nonlinear)
    ops = TransferOps.build(
        fine.tables.nodes, coarse.tables.nodes, r_fine, r_coarse
    )
    return TwoLevelHierarchy(fine=fine, coarse=coarse, ops=ops)


def initialize_mlsdc(
    theta_n: PrognosticState, hier: TwoLevelHierarchy
) -> tuple[SweepState, SweepState]:
    """Fine nodes copy the initial state; the coarse node-0 state is its
    spatial truncation, fixed for the whole step."""
    sw_fine = sdc.initialize_nodes(theta_n, hier.fine.rhs, hier.fine.n_nodes)
    theta_c0 = theta_n.truncated(hier.coarse.truncation)
    f_i = hier.coarse.rhs.eval_f_i(theta_c0)
    f_e = hier.coarse.rhs.eval_f_e(theta_c0)
    n = hier.coarse.n_nodes
    sw_coarse = SweepState(
        theta=[theta_c0.copy() for _ in range(n)],
        f_i=[f_i] + [f_i.copy() for _ in range(n - 1)],
        f_e=[f_e] + [f_e.copy() for _ in range(n - 1)],
    )
    return sw_fine, sw_coarse


def mlsdc_iteration(
    sw_fine: SweepState,
    sw_coarse: SweepState,
    hier: TwoLevelHierarchy,
    dt: float,
) -> SweepState:
    """One V-cycle: fine sweep, restrict + re-evaluate, FAS coarse sweep,
    interpolate the coarse state and tendency updates back."""
    fine, coarse, ops = hier.fine, hier.coarse, hier.ops
    # A) fine sweep
    sdc.sdc_sweep(sw_fine, fine.tables, dt, fine.rhs)
    # B) restrict states, re-evaluate coarse tendencies, save the restriction
    restricted = ops.restrict_states(sw_fine.theta)
    for m in range(1, coarse.n_nodes):
        sw_coarse.theta[m] = restricted[m]
        sw_coarse.f_i[m] = coarse.rhs.eval_f_i(restricted[m])
        sw_coarse.f_e[m] = coarse.rhs.eval_f_e(restricted[m])
    saved_theta = [st.copy() for st in sw_coarse.theta]
    saved_f_i = [st.copy() for st in sw_coarse.f_i]
    saved_f_e = [st.copy() for st in sw_coarse.f_e]
    # C) FAS correction and one coarse sweep
    tau = compute_fas(sw_fine, sw_coarse, fine.tables, coarse.tables, dt, ops)
    coarse_sweep_with_tau(sw_coarse, coarse.tables, dt, coarse.rhs, tau)
    # D) return to the fine level without any function evaluation
    d_theta = ops.interpolate_deltas(
        [sw_coarse.theta[m] - saved_theta[m] for m in range(coarse.n_nodes)]
    )
    d_f_i = ops.interpolate_deltas(
        [sw_coarse.f_i[m] - saved_f_i[m] for m in range(coarse.n_nodes)]
    )
    d_f_e = ops.interpolate_deltas(
        [sw_coarse.f_e[m] - saved_f_e[m] for m in range(coarse.n_nodes)]
    )
    for m in range(1, sw_fine.n_nodes):
        sw_fine.theta[m] += d_theta[m]
        sw_fine.f_i[m] += d_f_i[m]
        sw_fine.f_e[m] += d_f_e[m]
    return sw_fine


def mlsdc_timestep(
    theta_n: PrognosticState,
    dt: float,
    n_iterations: int,
    hier: TwoLevelHierarchy,
) -> PrognosticState:
    """Advance one time step with a fixed number of MLSDC iterations."""
    if n_iterations < 1:
        raise ValueError("at least one iteration is required")
    sw_fine, sw_coarse = initialize_mlsdc(theta_n, hier)
    for _ in range(n_iterations):
        mlsdc_iteration(sw_fine, sw_coarse, hier, dt)
    return sw_fine.theta[-1]
