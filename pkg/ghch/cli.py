"""Command line entry point.

Exit codes: 0 success, 2 validation or configuration failure, 3 no
convergence or blow-up, 4 I/O or format error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import closing
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ghch import coefficients, energy_monitor, expr_parser, formats, linear_solver, picard
from ghch.presets import get_preset
from ghch.scenario import OUTPUT_DIR_ENV, ScenarioError, ScenarioIOError, load_scenario
from ghch.spectral_ops import GridError
from ghch.sweep import ScenarioSweep, run_sweep
from ghch.trajectory import BlowUpError, Trajectory, time_grid
from ghch.verification import operator_suite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from ghch.scenario import Scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4


def _open_scenario(args: argparse.Namespace) -> Scenario:
    if args.preset is not None:
        try:
            preset = get_preset(args.preset)
        except KeyError as exc:
            raise ScenarioError(exc.args[0]) from exc
        return preset.scenario()
    if args.scenario is None:
        msg = "give a scenario file or --preset"
        raise ScenarioError(msg)
    return load_scenario(args.scenario)


def _output_dir(args: argparse.Namespace, scenario: Scenario | None = None) -> Path:
    if args.output is not None:
        return Path(args.output)
    if scenario is not None:
        return scenario.output_directory()
    return Path(os.environ.get(OUTPUT_DIR_ENV) or "output")


def _write_run(
    scenario: Scenario,
    traj: Trajectory,
    distances: Sequence[float],
    directory: Path,
    progress: bool,
) -> energy_monitor.EnergyTrace:
    c = scenario.coefficient_set()
    try:
        trace = energy_monitor.trace(
            traj,
            c,
            c.s,
            scenario.weight.variant(),
            scenario.output.snapshot_stride(),
            progress=progress,
        )
    except coefficients.DegenerateWeightError as exc:
        # a5 vanishes somewhere: no weight, so no energy trace
        log.warning("no energy trace: %s", exc)
        trace = _empty_trace()
    formats.write_trace(trace, distances, directory / "trace.csv")
    formats.write_snapshot(traj.snapshot(0), traj.t0, c.m, c.s, directory / "u_initial.ghch")
    formats.write_snapshot(traj.snapshot(traj.K), traj.T, c.m, c.s, directory / "u_final.ghch")
    if scenario.output.write_snapshots():
        for k in range(0, traj.K + 1, scenario.output.snapshot_stride()):
            formats.write_snapshot(
                traj.snapshot(k),
                traj.t0 + k * traj.dt,
                c.m,
                c.s,
                directory / "snapshots" / f"u_{k:06d}.ghch",
            )
    scenario.save_snapshot(directory)
    if len(trace):
        log.info(
            "lambda = %.6g, bound_ok = %s, sandwich_ok = %s",
            trace.lambda_fit,
            trace.bound_ok,
            trace.sandwich_ok(),
        )
    return trace


def cmd_verify_ops(args: argparse.Namespace) -> int:
    records = operator_suite(args.N, args.m, args.s, args.fields, args.L, progress=args.progress)
    directory = _output_dir(args)
    formats.write_operator_bounds(directory / "operators.csv", records)
    failed = [r for r in records if not r.ok]
    for record in failed:
        log.error("operator bound violated: %s", record)
    log.info("%d of %d configurations passed", len(records) - len(failed), len(records))
    return EXIT_INVALID if failed else EXIT_OK


def cmd_weight(args: argparse.Namespace) -> int:
    with closing(_open_scenario(args)) as scenario:
        c = scenario.coefficient_set()
        grid = scenario.make_grid()
        coefficients.validate(c, grid, [args.t]).raise_for_failures()
        wf = coefficients.compute_weight(
            c, args.t, grid, scenario.weight.variant(), horizon=scenario.run.T()
        )
        residual = coefficients.weight_residual_field(c, wf, args.t, grid)
        directory = _output_dir(args, scenario)
        formats.write_weight(directory / "weight.csv", grid, wf, wf.g, residual)
        scenario.save_snapshot(directory)
        max_g = float(np.max(np.abs(wf.g.values)))
        log.info(
            "%s weight: w1 = %.6g, w2 = %.6g, residual = %.3e (%.3e relative)",
            wf.variant,
            wf.w1,
            wf.w2,
            float(np.max(np.abs(residual.values))),
            float(np.max(np.abs(residual.values))) / max_g,
        )
    return EXIT_OK


def cmd_run_linear(args: argparse.Namespace) -> int:
    with closing(_open_scenario(args)) as scenario:
        c = scenario.coefficient_set()
        grid = scenario.make_grid()
        cfg = scenario.integrator_config()
        T = scenario.run.T()
        coefficients.validate(c, grid, np.linspace(0, T, 5)).raise_for_failures()

        v_ast = expr_parser.parse(args.v, {"t", "x"})
        K, dt = time_grid(0.0, T, cfg.dt)
        times = dt * np.arange(K + 1)
        v_values = np.stack(
            [expr_parser.evaluate_on(v_ast, {"t": t, "x": grid.x}, (grid.N,)) for t in times]
        )
        v = Trajectory(grid, 0.0, dt, v_values, integrator="expression")

        frozen = coefficients.freeze(c, v, grid)
        traj = linear_solver.solve_linear(
            frozen, c.initial_field(grid), T, cfg, progress=args.progress
        )
        directory = _output_dir(args, scenario)
        if traj.blowup_time is not None:
            log.error("blow-up at t = %.6g", traj.blowup_time)
            return EXIT_NO_CONVERGENCE
        _write_run(scenario, traj, [], directory, args.progress)
    return EXIT_OK


def cmd_picard(args: argparse.Namespace) -> int:
    with closing(_open_scenario(args)) as scenario:
        c = scenario.coefficient_set()
        grid = scenario.make_grid()
        result = picard.run(
            c, grid, scenario.picard_config(), strict=not args.lenient, progress=args.progress
        )
        directory = _output_dir(args, scenario)
        if result.blowup_time is not None:
            formats.write_trace(_empty_trace(), result.distances, directory / "trace.csv")
            log.error("blow-up at t = %.6g", result.blowup_time)
            return EXIT_NO_CONVERGENCE
        _write_run(scenario, result.limit, result.distances, directory, args.progress)
        if not result.converged:
            log.error("no convergence after %d iterations", result.n_final)
            return EXIT_NO_CONVERGENCE
        log.info("converged after %d iterations, ratios %s", result.n_final, result.ratios)
    return EXIT_OK


def cmd_direct(args: argparse.Namespace) -> int:
    with closing(_open_scenario(args)) as scenario:
        c = scenario.coefficient_set()
        grid = scenario.make_grid()
        traj = picard.solve_direct(
            c, grid, scenario.picard_config(), strict=not args.lenient, progress=args.progress
        )
        traj.raise_for_blowup()
        _write_run(scenario, traj, [], _output_dir(args, scenario), args.progress)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    with closing(_open_scenario(args)) as scenario:
        sweep = ScenarioSweep(scenario.problem.u0_scale, args.scales)
        report = run_sweep(scenario, sweep, max_workers=args.workers, progress=args.progress)
        directory = _output_dir(args, scenario)
        formats.write_sweep(directory / "sweep.csv", report)
        scenario.save_snapshot(directory)
        log.info(
            "blow-up nonincreasing: %s, lambda nondecreasing: %s",
            report.blowup_nonincreasing,
            report.lambda_nondecreasing,
        )
    return EXIT_OK


def _empty_trace() -> energy_monitor.EnergyTrace:
    empty = np.array([])
    return energy_monitor.EnergyTrace(empty, empty, empty, float("nan"), False, 0.0, 0.0)


def _floats(text: str) -> list[float]:
    return [float(expr_parser.parse(item).evaluate({})) for item in text.split(",") if item.strip()]


def _ints(text: str) -> list[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghch",
        description="Pseudospectral solver and verification checks for higher order Camassa-Holm type equations.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    parser.add_argument("-o", "--output", help="output directory (overrides the scenario)")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="accepted for compatibility; every run is deterministic and ignores it",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ops = sub.add_parser("verify-ops", help="check the Lambda_m operator bounds")
    ops.add_argument("--N", type=_ints, default=[64, 256], help="comma separated grid sizes")
    ops.add_argument("--m", type=_floats, default=[0.1, 0.25, 1, 2, 10], help="comma separated m values")
    ops.add_argument("--s", type=_floats, default=[0, 1, 2.7], help="comma separated Sobolev indices")
    ops.add_argument("--fields", type=int, default=100, help="random fields per configuration")
    ops.add_argument("--L", type=lambda text: _floats(text)[0], default=2 * np.pi, help="period")
    ops.set_defaults(func=cmd_verify_ops)

    def scenario_command(name: str, help_text: str, func) -> argparse.ArgumentParser:
        command = sub.add_parser(name, help=help_text)
        command.add_argument("scenario", nargs="?", help="scenario file")
        command.add_argument("--preset", help="use a shipped preset instead of a file")
        command.set_defaults(func=func)
        return command

    weight = scenario_command("weight", "write w, g and the cancellation residual", cmd_weight)
    weight.add_argument("--t", type=float, default=0.0, help="time at which to build the weight")

    linear = scenario_command("run-linear", "solve the linear problem about a given v", cmd_run_linear)
    linear.add_argument("--v", default="0", help="frozen state v(t, x) as an expression")

    for name, help_text, func in (
        ("picard", "run the Picard iteration", cmd_picard),
        ("direct", "solve the nonlinear equation directly", cmd_direct),
    ):
        command = scenario_command(name, help_text, func)
        command.add_argument(
            "--lenient", action="store_true", help="run even when validation fails"
        )

    sweep = scenario_command("sweep", "sweep the amplitude of u0", cmd_sweep)
    sweep.add_argument("--scales", type=_floats, default=[0.5, 1, 2, 4], help="comma separated u0 scale factors")
    sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ScenarioIOError, formats.FormatError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (
        ScenarioError,
        coefficients.ValidationError,
        coefficients.PeriodicityError,
        coefficients.DegenerateWeightError,
        linear_solver.StabilityError,
        expr_parser.ExpressionError,
        GridError,
    ) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except BlowUpError as exc:
        log.error("%s", exc)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
