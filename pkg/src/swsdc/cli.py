"""Command-line driver: run, converge, spectrum and speedup subcommands.

Flags can also be supplied through ``--config FILE`` holding ``key = value``
lines whose keys mirror the long flag names; explicit flags win.  Exit codes:
0 on success, 2 on usage errors, 3 when a run goes numerically unstable.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import harness
from .harness import InstabilityError, RunConfig, UsageError
from .testcases import CASE_KINDS, TestCaseSpec

_CONFIG_KEYS = {
    "testcase": str,
    "scheme": str,
    "rf": int,
    "rc": int,
    "alpha": float,
    "nodes_fine": int,
    "nodes_coarse": int,
    "iters": int,
    "dt": float,
    "tend": float,
    "nu": float,
    "out": str,
    "var": str,
    "dts": str,
    "ref_dt": float,
    "ns": int,
    "seed": int,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--testcase", choices=CASE_KINDS, default=None)
    parser.add_argument("--scheme", choices=harness.SCHEMES, default=None)
    parser.add_argument("--rf", type=int, default=None, help="fine truncation")
    parser.add_argument("--rc", type=int, default=None, help="coarse truncation")
    parser.add_argument("--alpha", type=float, default=None, help="coarsening ratio")
    parser.add_argument("--nodes-fine", type=int, default=None)
    parser.add_argument("--nodes-coarse", type=int, default=None)
    parser.add_argument("--iters", type=int, default=None)
    parser.add_argument("--dt", type=float, default=None, help="time step (s)")
    parser.add_argument("--tend", type=float, default=None, help="horizon (s)")
    parser.add_argument("--nu", type=float, default=None, help="diffusion (m^2/s)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", default=None, help="key-value defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swsdc",
        description="Shallow-water solver on the sphere with SDC/MLSDC stepping",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation, emits a cost report")
    _add_common(p_run)

    p_conv = sub.add_parser("converge", help="temporal refinement study")
    _add_common(p_conv)
    p_conv.add_argument("--dts", default=None, help="comma-separated dt list (s)")
    p_conv.add_argument(
        "--ref-dt", type=float, default=None, help="reference dt (default min/4)"
    )

    p_spec = sub.add_parser("spectrum", help="max-spectrum of one variable")
    _add_common(p_spec)
    p_spec.add_argument(
        "--var", choices=harness.STATE_VARS, default=None, help="variable"
    )

    p_speed = sub.add_parser("speedup", help="cost-model speedup evaluation")
    _add_common(p_speed)
    p_speed.add_argument(
        "--ns", type=int, default=None, help="single-level sweep count (default 2*iters)"
    )
    return parser


def _load_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in _CONFIG_KEYS:
                    raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _CONFIG_KEYS[key](value)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


_DEFAULTS = {
    "testcase": "gaussian_dome",
    "scheme": "sdc",
    "rf": 63,
    "nodes_fine": 3,
    "iters": 4,
    "dt": 600.0,
    "tend": 3600.0,
    "nu": 1.0e5,
    "out": ".",
    "var": "zeta",
    "seed": 0,
}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge precedence: explicit flags > config file > built-in defaults."""
    from_file = _load_config_file(args.config) if args.config else {}
    for key, value in {**_DEFAULTS, **from_file}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        testcase=TestCaseSpec(kind=args.testcase, nu=args.nu),
        scheme=args.scheme,
        r_fine=args.rf,
        r_coarse=args.rc,
        alpha=args.alpha,
        nodes_fine=args.nodes_fine,
        nodes_coarse=args.nodes_coarse,
        iterations=args.iters,
        dt=args.dt,
        t_end=args.tend,
        output_dir=args.out,
        seed=args.seed,
    )


def _outpath(args: argparse.Namespace, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    result = harness.run_simulation(cfg)
    path = _outpath(args, "cost.csv")
    harness.write_cost_csv(result.cost, path)
    print(
        f"{cfg.label()}: {cfg.n_steps} steps of dt={cfg.dt:g}s at R={cfg.r_fine}, "
        f"wallclock {result.wallclock_s:.3f}s -> {path}"
    )
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    if not args.dts:
        raise UsageError("converge needs --dts")
    dts = sorted((float(tok) for tok in str(args.dts).split(",")), reverse=True)
    ref_dt = args.ref_dt if args.ref_dt is not None else min(dts) / 4.0
    base = _run_config(args)
    reference = dataclasses.replace(
        base,
        scheme="sdc",
        nodes_fine=5,
        iterations=8,
        nodes_coarse=None,
        r_coarse=None,
        alpha=None,
        dt=ref_dt,
    )
    study = harness.convergence_study(base, dts, reference)
    reports = [e.report for e in study.entries if e.stable]
    path = _outpath(args, "errors.csv")
    harness.write_error_csv(reports, path)
    for var in harness.STATE_VARS:
        try:
            slope = study.fit_slope(variable=var, norm="linf")
        except UsageError:
            continue
        print(f"{base.label()} {var}: fitted L_inf slope {slope:.2f}")
    unstable = [e.dt for e in study.entries if not e.stable]
    if unstable:
        print(f"unstable at dt: {', '.join(f'{d:g}' for d in unstable)}")
    print(f"errors -> {path} (reference {study.reference_label} at dt={ref_dt:g}s)")
    return 0


def cmd_spectrum(args: argparse.Namespace) -> int:
    if args.tend == 0.0:
        from . import spharm, testcases

        n_lon, n_lat = spharm.default_grid_shape(args.rf)
        plan = spharm.TransformPlan(spharm.build_gaussian_grid(n_lat, n_lon), args.rf)
        state, _ = testcases.build_initial_state(
            TestCaseSpec(kind=args.testcase, nu=args.nu), plan
        )
    else:
        state = harness.run_simulation(_run_config(args)).state
    coeffs = getattr(state, args.var)
    report = harness.SpectrumReport(
        variable=args.var, time=args.tend, max_abs=harness.max_spectrum(coeffs)
    )
    path = _outpath(args, "spectrum.csv")
    harness.write_spectrum_csv(report, path)
    print(f"max-spectrum of {args.var} at t={args.tend:g}s -> {path}")
    return 0


def cmd_speedup(args: argparse.Namespace) -> int:
    if args.nodes_coarse is None or args.alpha is None:
        raise UsageError("speedup needs --nodes-coarse and --alpha")
    n_ml = args.iters
    n_s = args.ns if args.ns is not None else 2 * n_ml
    value = harness.theoretical_speedup(
        args.nodes_fine - 1, args.nodes_coarse - 1, n_s, n_ml, args.alpha, args.rf
    )
    print(
        f"theoretical speedup MLSDC({args.nodes_fine},{args.nodes_coarse},{n_ml},"
        f"{args.alpha:g}) vs SDC({args.nodes_fine},{n_s}) at R={args.rf}: {value:.4f}"
    )
    return 0


_COMMANDS = {
    "run": cmd_run,
    "converge": cmd_converge,
    "spectrum": cmd_spectrum,
    "speedup": cmd_speedup,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
