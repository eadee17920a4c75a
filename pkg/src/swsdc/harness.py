"""Simulation driver, error norms, refinement studies, cost model and CSV.

Runs are deterministic for a fixed configuration; wall-clock time is the only
report field that varies between repetitions.  Function-evaluation and solve
counters are split into the per-sweep work covered by the cost model and the
once-per-step initialization evaluations, which the model neglects.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import Any

import numpy as np

from . import mlsdc, sdc, spharm, testcases
from .sdc import QuadratureTables
from .swe import EvalCounters, ModelParams, PrognosticState, ShallowWaterRHS
from .testcases import EARTH, EarthConstants, TestCaseSpec

SCHEMES = ("sdc", "mlsdc", "irk2")
STATE_VARS = ("phi_prime", "zeta", "delta")


class UsageError(ValueError):
    """Invalid configuration or arguments; maps to CLI exit code 2."""


class InstabilityError(RuntimeError):
    """Non-finite state detected during stepping; maps to CLI exit code 3."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")


@dataclasses.dataclass
class RunConfig:
    """One simulation: test case, scheme, resolutions and stepping."""

    testcase: TestCaseSpec
    scheme: str
    r_fine: int
    dt: float
    t_end: float
    iterations: int
    nodes_fine: int = 3
    nodes_coarse: int | None = None
    r_coarse: int | None = None
    alpha: float | None = None
    output_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.dt <= 0:
            raise UsageError("dt must be positive")
        if self.t_end < self.dt:
            raise UsageError("t_end must be at least one time step")
        if self.iterations < 1:
            raise UsageError("at least one iteration is required")
        if self.scheme == "mlsdc":
            if self.r_coarse is None:
                if self.alpha is None:
                    raise UsageError("mlsdc needs r_coarse or alpha")
                self.r_coarse = max(1, round(self.alpha * self.r_fine))
            if self.nodes_coarse is None:
                raise UsageError("mlsdc needs nodes_coarse")
            if self.r_coarse > self.r_fine:
                raise UsageError("coarse truncation cannot exceed fine truncation")
        # Effective ratio; kept consistent with the integer truncations.
        if self.r_coarse is not None:
            self.alpha = self.r_coarse / self.r_fine

    @property
    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise UsageError(
                f"t_end={self.t_end} is not an integer multiple of dt={self.dt}"
            )
        return n

    def label(self) -> str:
        m_f = self.nodes_fine
        if self.scheme == "sdc":
            return f"SDC({m_f},{self.iterations})"
        if self.scheme == "mlsdc":
            return (
                f"MLSDC({m_f},{self.nodes_coarse},{self.iterations},"
                f"{self.r_coarse}/{self.r_fine})"
            )
        return "IMEX-RK2"


# -- cost model ---------------------------------------------------------------

@dataclasses.dataclass
class CostReport:
    """Instrumented solve/evaluation counts against the cost-model predictions.

    ``fine``/``coarse`` hold the per-run sweep-loop totals; ``fine_init`` and
    ``coarse_init`` hold the once-per-step initialization evaluations that the
    model neglects.  ``counted == predicted`` holds exactly for the
    fixed-iteration schemes.
    """

    scheme: str
    n_steps: int
    fine: EvalCounters
    coarse: EvalCounters
    fine_predicted: EvalCounters
    coarse_predicted: EvalCounters
    fine_init: EvalCounters
    coarse_init: EvalCounters
    theoretical_speedup: float | None = None

    def matches_prediction(self) -> bool:
        return self.fine == self.fine_predicted and self.coarse == self.coarse_predicted


def predicted_counts(cfg: RunConfig) -> tuple[EvalCounters, EvalCounters]:
    """Per-run sweep-work predictions for (fine, coarse)."""
    n = cfg.n_steps
    m_f = cfg.nodes_fine - 1
    if cfg.scheme == "sdc":
        k = n * cfg.iterations * m_f
        return EvalCounters(k, k, k), EvalCounters()
    if cfg.scheme == "mlsdc":
        m_c = cfg.nodes_coarse - 1
        k_f = n * cfg.iterations * m_f
        k_c = n * cfg.iterations * m_c
        # Coarse evaluations: one per node per sweep plus one per node after
        # each restriction.
        return (
            EvalCounters(k_f, k_f, k_f),
            EvalCounters(k_c, 2 * k_c, 2 * k_c),
        )
    # IMEX-RK2: two solves, one implicit and two explicit evaluations a step.
    return EvalCounters(2 * n, n, 2 * n), EvalCounters()


def theoretical_speedup(
    m_f: int, m_c: int, n_s: int, n_ml: int, alpha: float, r_f: int
) -> float:
    """Cost-model speedup of the two-level scheme over single-level SDC.

    ``m_f``/``m_c`` are node counts minus one.  Assumes solves and both kinds
    of evaluation cost the same, with work proportional to the number of
    spectral coefficients at each level.
    """
    if alpha <= 0 or alpha > 1:
        raise UsageError("coarsening ratio must lie in (0, 1]")
    coarse_term = alpha * alpha * 5.0 * (r_f + 1.0 / alpha) * m_c / (3.0 * (r_f + 1) * m_f)
    return (n_s / n_ml) / (1.0 + coarse_term)


# -- time steppers ------------------------------------------------------------

ARS_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
ARS_DELTA = 1.0 - 1.0 / (2.0 * ARS_GAMMA)


def irk2_timestep(
    theta_n: PrognosticState, dt: float, rhs: ShallowWaterRHS
) -> PrognosticState:
    """One step of a stiffly accurate two-stage second-order IMEX pair.

    Implicit tableau: stages at (gamma, 1) with weights (1-gamma, gamma);
    explicit tableau: abscissae (0, gamma) with weights (delta, 1-delta),
    gamma = 1 - 1/sqrt(2).  Uses the same split and implicit solver as the
    deferred-correction schemes.
    """
    g = ARS_GAMMA
    f_e0 = rhs.eval_f_e(theta_n)
    u1 = rhs.solve_implicit(theta_n + (dt * g) * f_e0, dt * g)
    f_i1 = rhs.eval_f_i(u1)
    f_e1 = rhs.eval_f_e(u1)
    b = (
        theta_n
        + (dt * ARS_DELTA) * f_e0
        + (dt * (1.0 - ARS_DELTA)) * f_e1
        + (dt * (1.0 - g)) * f_i1
    )
    return rhs.solve_implicit(b, dt * g)


@dataclasses.dataclass
class SimulationResult:
    config: RunConfig
    state: PrognosticState
    params: ModelParams
    plan: spharm.TransformPlan
    cost: CostReport
    wallclock_s: float


def run_simulation(
    cfg: RunConfig, constants: EarthConstants = EARTH
) -> SimulationResult:
    """Step the configured case from 0 to t_end with a fixed dt.

    Raises :class:`InstabilityError` with the failing step index as soon as a
    non-finite value appears; the run is never silently continued.
    """
    n_steps = cfg.n_steps
    n_lon, n_lat = spharm.default_grid_shape(cfg.r_fine)
    plan = spharm.TransformPlan(spharm.build_gaussian_grid(n_lat, n_lon), cfg.r_fine)
    state, params = testcases.build_initial_state(cfg.testcase, plan, constants)
    rhs_fine = ShallowWaterRHS(plan, params)
    rhs_coarse = None
    hier = None
    tables = sdc.build_tables(cfg.nodes_fine)
    if cfg.scheme == "mlsdc":
        fine_level = mlsdc.Level(plan=plan, tables=tables, rhs=rhs_fine)
        coarse_level = mlsdc.build_level(cfg.r_coarse, cfg.nodes_coarse, params)
        ops = mlsdc.TransferOps.build(
            fine_level.tables.nodes,
            coarse_level.tables.nodes,
            cfg.r_fine,
            cfg.r_coarse,
        )
        hier = mlsdc.TwoLevelHierarchy(fine=fine_level, coarse=coarse_level, ops=ops)
        rhs_coarse = coarse_level.rhs

    fine_init = EvalCounters()
    coarse_init = EvalCounters()
    start_fine = rhs_fine.counters.snapshot()
    start_coarse = rhs_coarse.counters.snapshot() if rhs_coarse else EvalCounters()

    t0 = time.perf_counter()
    # Overflow during a blow-up is the instability signal itself; the
    # per-step finiteness check converts it into a typed error.
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for step in range(n_steps):
            if cfg.scheme == "sdc":
                snap = rhs_fine.counters.snapshot()
                sw = sdc.initialize_nodes(state, rhs_fine, cfg.nodes_fine)
                fine_init = _accumulate(fine_init, rhs_fine.counters.since(snap))
                for _ in range(cfg.iterations):
                    sdc.sdc_sweep(sw, tables, cfg.dt, rhs_fine)
                state = sw.theta[-1]
            elif cfg.scheme == "mlsdc":
                snap_f = rhs_fine.counters.snapshot()
                snap_c = rhs_coarse.counters.snapshot()
                sw_f, sw_c = mlsdc.initialize_mlsdc(state, hier)
                fine_init = _accumulate(fine_init, rhs_fine.counters.since(snap_f))
                coarse_init = _accumulate(coarse_init, rhs_coarse.counters.since(snap_c))
                for _ in range(cfg.iterations):
                    mlsdc.mlsdc_iteration(sw_f, sw_c, hier, cfg.dt)
                state = sw_f.theta[-1]
            else:
                state = irk2_timestep(state, cfg.dt, rhs_fine)
            if not state.isfinite():
                raise InstabilityError(step)
    wallclock = time.perf_counter() - t0

    fine_total = rhs_fine.counters.since(start_fine)
    coarse_total = (
        rhs_coarse.counters.since(start_coarse) if rhs_coarse else EvalCounters()
    )
    pred_fine, pred_coarse = predicted_counts(cfg)
    speedup = None
    if cfg.scheme == "mlsdc":
        speedup = theoretical_speedup(
            cfg.nodes_fine - 1,
            cfg.nodes_coarse - 1,
            2 * cfg.iterations,
            cfg.iterations,
            cfg.alpha,
            cfg.r_fine,
        )
    cost = CostReport(
        scheme=cfg.label(),
        n_steps=n_steps,
        fine=fine_total.since(fine_init),
        coarse=coarse_total.since(coarse_init),
        fine_predicted=pred_fine,
        coarse_predicted=pred_coarse,
        fine_init=fine_init,
        coarse_init=coarse_init,
        theoretical_speedup=speedup,
    )
    return SimulationResult(
        config=cfg, state=state, params=params, plan=plan, cost=cost,
        wallclock_s=wallclock,
    )


def _accumulate(total: EvalCounters, delta: EvalCounters) -> EvalCounters:
    return EvalCounters(
        total.solves + delta.solves,
        total.implicit_evals + delta.implicit_evals,
        total.explicit_evals + delta.explicit_evals,
    )


# -- reports ------------------------------------------------------------------

@dataclasses.dataclass
class ErrorReport:
    """Per-variable grid-space error norms against a reference state."""

    dt: float
    scheme: str
    linf: dict[str, float]
    l2: dict[str, float]
    wallclock_s: float = 0.0


def compute_error_norms(
    state: PrognosticState,
    reference: PrognosticState,
    plan: spharm.TransformPlan,
    dt: float = 0.0,
    scheme: str = "",
    wallclock_s: float = 0.0,
) -> ErrorReport:
    """Max and Gaussian-area-weighted RMS difference on the physical grid."""
    if state.truncation != reference.truncation:
        raise UsageError("states must share one truncation for error norms")
    w = plan.grid.w / (2.0 * plan.grid.n_lon)  # normalized area weights
    linf, l2 = {}, {}
    for name, f_s, f_r in zip(STATE_VARS, state.fields(), reference.fields()):
        diff = plan.synthesize(f_s) - plan.synthesize(f_r)
        linf[name] = float(np.max(np.abs(diff)))
        l2[name] = float(np.sqrt(np.sum(w * diff * diff)))
    return ErrorReport(dt=dt, scheme=scheme, linf=linf, l2=l2, wallclock_s=wallclock_s)


@dataclasses.dataclass
class SpectrumReport:
    """Max coefficient modulus per total wavenumber for one variable."""

    variable: str
    time: float
    max_abs: np.ndarray


def max_spectrum(coeffs: np.ndarray) -> np.ndarray:
    """Per total-wavenumber maximum of the coefficient modulus over the
    stored zonal wavenumbers."""
    return np.max(np.abs(coeffs), axis=-2)


# -- refinement studies --------------------------------------------------------

@dataclasses.dataclass
class StudyEntry:
    dt: float
    stable: bool
    report: ErrorReport | None


@dataclasses.dataclass
class StudyResult:
    entries: list[StudyEntry]
    reference_label: str
    reference_dt: float

    def fit_slope(
        self, variable: str = "zeta", norm: str = "linf", dts: list[float] | None = None
    ) -> float:
        """Least-squares slope of log error against log dt over a window.

        Unstable runs are excluded; the window defaults to every stable dt.
        """
        pts = [
            (e.dt, getattr(e.report, norm)[variable])
            for e in self.entries
            if e.stable and (dts is None or any(abs(e.dt - d) < 1e-9 for d in dts))
        ]
        if len(pts) < 2:
            raise UsageError("need at least two stable runs to fit a slope")
        x = np.log([p[0] for p in pts])
        y = np.log([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])

    def errors(self, variable: str = "zeta", norm: str = "linf"):
        return [
            (e.dt, getattr(e.report, norm)[variable]) for e in self.entries if e.stable
        ]


def convergence_study(
    base: RunConfig,
    dts: list[float],
    reference: RunConfig | SimulationResult,
    constants: EarthConstants = EARTH,
) -> StudyResult:
    """One run per dt, all compared against a shared reference run.

    The reference dt must be strictly smaller than every study dt.  Runs that
    blow up are recorded as unstable and excluded from slope fits.  A
    completed :class:`SimulationResult` may be passed as the reference to
    share it across studies.
    """
    ref = (
        reference
        if isinstance(reference, SimulationResult)
        else run_simulation(reference, constants)
    )
    if ref.config.dt >= min(dts):
        raise UsageError("reference dt must be strictly smaller than study dts")
    entries = []
    for dt in dts:
        cfg = dataclasses.replace(base, dt=dt)
        try:
            res = run_simulation(cfg, constants)
        except InstabilityError:
            entries.append(StudyEntry(dt=dt, stable=False, report=None))
            continue
        rep = compute_error_norms(
            res.state,
            ref.state,
            ref.plan,
            dt=dt,
            scheme=cfg.label(),
            wallclock_s=res.wallclock_s,
        )
        entries.append(StudyEntry(dt=dt, stable=True, report=rep))
    return StudyResult(
        entries=entries,
        reference_label=ref.config.label(),
        reference_dt=ref.config.dt,
    )


def observed_speedup(
    curve_base: list[tuple[float, float]],
    curve_fast: list[tuple[float, float]],
    target_error: float,
) -> float:
    """Wall-clock ratio base/fast at a matched error, interpolated log-log on
    the error-vs-time curves."""

    def time_at(curve, err):
        pts = sorted(curve)  # ascending error
        e = np.log([p[0] for p in pts])
        t = np.log([p[1] for p in pts])
        return math.exp(float(np.interp(math.log(err), e, t)))

    return time_at(curve_base, target_error) / time_at(curve_fast, target_error)


# -- CSV serialization ----------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_error_csv(reports: list[ErrorReport], path: str) -> None:
    """Header ``dt,scheme,var,linf,l2,wallclock_s``; one row per variable."""
    lines = ["dt,scheme,var,linf,l2,wallclock_s"]
    for rep in reports:
        for var in STATE_VARS:
            lines.append(
                ",".join(
                    [
                        _fmt(rep.dt),
                        rep.scheme,
                        var,
                        _fmt(rep.linf[var]),
                        _fmt(rep.l2[var]),
                        _fmt(rep.wallclock_s),
                    ]
                )
            )
    _write_lines(path, lines)


def write_spectrum_csv(report: SpectrumReport, path: str) -> None:
    """Header ``n0,max_abs``; R+1 rows."""
    lines = ["n0,max_abs"]
    for n0, value in enumerate(report.max_abs):
        lines.append(f"{n0},{_fmt(float(value))}")
    _write_lines(path, lines)


_COST_FIELDS = ("solves", "implicit_evals", "explicit_evals")


def write_cost_csv(report: CostReport, path: str) -> None:
    """Key-value rows: scheme, steps, per-level counted/predicted/init counts
    and the theoretical speedup when defined."""
    lines = ["key,value", f"scheme,{report.scheme}", f"n_steps,{report.n_steps}"]
    for level, counted, predicted, init in (
        ("fine", report.fine, report.fine_predicted, report.fine_init),
        ("coarse", report.coarse, report.coarse_predicted, report.coarse_init),
    ):
        for field in _COST_FIELDS:
            lines.append(f"{level}_{field},{getattr(counted, field)}")
            lines.append(f"{level}_{field}_predicted,{getattr(predicted, field)}")
            lines.append(f"{level}_{field}_init,{getattr(init, field)}")
    if report.theoretical_speedup is not None:
        lines.append(f"theoretical_speedup,{_fmt(report.theoretical_speedup)}")
    _write_lines(path, lines)


def read_cost_csv(path: str) -> CostReport:
    """Parse a cost CSV back into a report; inverse of :func:`write_cost_csv`."""
    kv: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "key,value":
            raise UsageError(f"not a cost report: {path}")
        for line in fh:
            key, value = line.rstrip("\n").split(",", 1)
            kv[key] = value

    def counters(level: str, suffix: str = "") -> EvalCounters:
        return EvalCounters(
            *(int(kv[f"{level}_{field}{suffix}"]) for field in _COST_FIELDS)
        )

    speedup = kv.get("theoretical_speedup")
    return CostReport(
        scheme=kv["scheme"],
        n_steps=int(kv["n_steps"]),
        fine=counters("fine"),
        coarse=counters("coarse"),
        fine_predicted=counters("fine", "_predicted"),
        coarse_predicted=counters("coarse", "_predicted"),
        fine_init=counters("fine", "_init"),
        coarse_init=counters("coarse", "_init"),
        theoretical_speedup=float(speedup) if speedup is not None else None,
    )


def _write_lines(path: str, lines: list[str]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
