"""Command-line front end.

Exit codes: 0 success, 1 validation or input error, 2 verification failure,
3 numerical divergence in a scenario that does not expect it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report, scenario
from .scenario import SWEEP_AXES, Scenario, ScenarioError

EXIT_OK, EXIT_INVALID, EXIT_SUITE, EXIT_DIVERGED = 0, 1, 2, 3
OUTPUT_ENV = "REDCHO_OUTPUT_DIR"


def output_dir(scn: Scenario, override: str | None) -> Path:
    """--out beats the environment variable, which beats the scenario's own setting."""
    base = override or os.environ.get(OUTPUT_ENV)
    if base:
        return Path(base)
    return Path(scn.output_dir or f"runs/{scn.name}")


def _fmt(x) -> str:
    return "never" if x is None else f"{x:.4g}"


def _check_bound(scn: Scenario, err) -> None:
    if scn.design_L is None:
        return
    L = scn.disturbance_bound()
    if L > scn.design_L:
        print(f"warning: estimated disturbance bound {L:.4g} exceeds design_L = {scn.design_L:.4g}; "
              "exact convergence is not guaranteed", file=err)


def cmd_run(args, out, err) -> int:
    scn = scenario.resolve(args.scenario)
    _check_bound(scn, err)
    traj = scn.run()
    dest = output_dir(scn, args.out)
    dest.mkdir(parents=True, exist_ok=True)
    config = scn.resolved()
    mets = report.compute_metrics(traj, scn.tol, scn.window, scn.terminal_window)
    files = [
        report.write_trajectory_csv(dest / "trajectory.csv", traj, config),
        report.write_metrics_csv(dest / "metrics.csv", mets, config),
    ]
    if scn.plot and not args.no_plot and len(traj.t) > 1:
        files += report.plot_run(traj, dest, scn.name)

    print(f"scenario {scn.name}: n={scn.network.n} m={scn.params.m} theta={scn.params.theta:g} "
          f"h={scn.h:g} t=[{scn.t0:g}, {scn.t1:g}] events={len(scn.events)}", file=out)
    for r in mets:
        print(f"  mu={r.mu}: settling(tol={scn.tol:g})={_fmt(r.settling_time)}  "
              f"terminal 2-norm={r.terminal_error:.3e}  inf-norm={r.terminal_error_inf:.3e}", file=out)
    for ev in traj.events:
        print(f"  event {ev['label']} at t={ev['t']:g}", file=out)
    for f in files:
        print(f"  wrote {f}", file=out)
    if traj.diverged:
        print(f"  state became non-finite at t={traj.diverged_at:g}", file=out if scn.expect_divergence else err)
        if not scn.expect_divergence:
            return EXIT_DIVERGED
    elif scn.expect_divergence:
        print("  note: divergence was expected but the state stayed finite", file=out)
    return EXIT_OK


def cmd_verify(args, out, err) -> int:
    from .verify import run_all

    results = run_all(seed=args.seed, fault=args.self_test_fault)
    for r in results:
        print(r.line(), file=out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} suite(s) failed: {', '.join(failed)}", file=err)
        return EXIT_SUITE
    print(f"all {len(results)} suites passed (seed {args.seed})", file=out)
    return EXIT_OK


def parse_values(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError(f"--values must be a non-empty comma-separated list, got {text!r}")
    vals = []
    for p in parts:
        try:
            v = float(p)
        except ValueError:
            raise ValueError(f"sweep value {p!r} is not a number") from None
        if not math.isfinite(v):
            raise ValueError(f"sweep value {p!r} is not finite")
        vals.append(v)
    return vals


def _sweep_point(source: str, axis: str, value: float):
    scn = scenario.with_axis(scenario.resolve(source), axis, value)
    traj = scn.run()
    return value, report.compute_metrics(traj, scn.tol, scn.window, scn.terminal_window)


def cmd_sweep(args, out, err) -> int:
    base = scenario.resolve(args.scenario)
    values = parse_values(args.values)
    for v in values:
        scenario.with_axis(base, args.axis, v)  # validate every point before running any
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, [args.scenario] * len(values), [args.axis] * len(values), values))
    else:
        rows = [_sweep_point(args.scenario, args.axis, v) for v in values]
    dest = output_dir(base, args.out)
    dest.mkdir(parents=True, exist_ok=True)
    config = {"base": base.resolved(), "axis": args.axis, "values": values}
    path = report.write_sweep_csv(dest / f"sweep-{args.axis}.csv", args.axis, rows, config)
    files = [path]
    if not args.no_plot and base.plot:
        files.append(report.plot_sweep(args.axis, rows, dest / f"sweep-{args.axis}.svg"))
    for value, mets in rows:
        st = " ".join(f"mu{r.mu}={_fmt(r.settling_time)}" for r in mets)
        te = " ".join(f"{r.terminal_error:.2e}" for r in mets)
        print(f"{args.axis}={value:g}: settling {st}; terminal {te}; diverged={int(mets[0].diverged)}", file=out)
    for f in files:
        print(f"wrote {f}", file=out)
    diverged = any(r.diverged for _, mets in rows for r in mets)
    return EXIT_DIVERGED if diverged and not base.expect_divergence else EXIT_OK


def cmd_presets(args, out, err) -> int:
    if args.action == "list":
        for name in scenario.preset_names():
            scn = scenario.load_preset(name)
            print(f"{name:24s} {scn.description}", file=out)
        return EXIT_OK
    if not args.name:
        print("presets show needs a preset name", file=err)
        return EXIT_INVALID
    if args.resolved:
        print(json.dumps(scenario.load_preset(args.name).resolved(), indent=2), file=out)
    else:
        print(scenario.preset_text(args.name), end="", file=out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 1), keeping 2 for suite failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="redcho", description="Robust exact high-order dynamic consensus laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario file or preset")
    p.add_argument("scenario", help="path to a TOML scenario, or a preset name (see 'presets list')")
    p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the scenario)")
    p.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the randomized identity and projection suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--self-test-fault", action="store_true", help="corrupt the companion matrix; the run must fail")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="rerun a scenario over values of one parameter")
    p.add_argument("scenario")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated, e.g. 1,10,100")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("presets", help="list or print the bundled scenarios")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    p.add_argument("--resolved", action="store_true", help="print the expanded configuration as JSON")
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out, err)
    except ScenarioError as exc:
        print(str(exc), file=err)
        return EXIT_INVALID
    except (FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=err)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
