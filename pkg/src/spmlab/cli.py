"""Command line interface.

Subcommands map onto the scenario suite: single-route solves with CSV and
figure dumps, the cross-route comparison, the sweep/uniqueness/mollification
studies and the full diagnostic validation.  The exit code reports pass/fail
for CI use.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenarios import ScenarioError, list_suite, resolve_scenario, run_scenario

_SUBCOMMAND_DIAGNOSTICS = {
    "compare": ["cross_validation"],
    "kappa-sweep": ["kappa_sweep"],
    "fp-uniqueness": ["fp_uniqueness"],
    "mollify-sde": ["mollified_sde"],
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="shipped scenario name or path to a scenario file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seeds (noise and particles)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for realization ensembles")
    parser.add_argument("--out-dir", default="out",
                        help="root directory for reports, dumps and figures")
    parser.add_argument("--strict", action="store_true",
                        help="fail on any warning, including clipped-mass and boundary-mass")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spmlab",
        description="Numerical laboratory for stochastic porous-media-type diffusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list the shipped scenario suite")

    for name, help_text in [
        ("solve-spde", "run the grid solver for one noise realization and dump the trajectory"),
        ("run-particles", "run the weighted particle system and dump the density trajectory"),
        ("compare", "run both routes and report their distances"),
        ("kappa-sweep", "run the regularization sweep"),
        ("fp-uniqueness", "run the uniqueness echo and refinement study"),
        ("mollify-sde", "run the mollified-coefficient convergence experiment"),
        ("validate", "run the scenario's full diagnostic suite"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))
    return parser


def _run_single_route(scenario, args, route: str) -> int:
    from .noise import sample_noise
    from .particles import run_dsnld
    from .report import OutputSink
    from .spde import solve_spde

    scenario = scenario.with_overrides(noise_seed=args.seed)
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    w = scenario.noise(0)
    sink = OutputSink(Path(args.out_dir) / f"{scenario.name}-{scenario.fingerprint}")
    if route == "grid":
        traj = solve_spde(
            scenario.initial_condition().density(grid), spec, modes, w,
            scenario.dt, scenario.steps, record_stride=scenario.record_stride,
            picard_iterations=scenario.data["solver"]["picard_iterations"],
        )
        sink.dump_trajectory("solve_spde", traj)
        print(f"grid solve: {scenario.steps} steps, terminal mass "
              f"{traj.mass_series()[-1]:.6f}, clipped fraction "
              f"{traj.meta['clipped_mass_fraction']:.2e}")
    else:
        pcfg = scenario.data["particles"]
        traj, ens = run_dsnld(
            scenario.initial_condition(), spec, modes, w, scenario.dt, scenario.steps,
            pcfg["count"], pcfg["seed"], grid, bandwidth=pcfg["bandwidth"],
            bandwidth_factor=pcfg["bandwidth_factor"],
            record_stride=scenario.record_stride, picard=pcfg["picard"],
        )
        sink.dump_trajectory("run_particles", traj)
        sink.dump_ensemble("final_ensemble", ens)
        print(f"particle run: {pcfg['count']} particles, terminal weighted mass "
              f"{traj.meta['weighted_mass'][-1]:.6f}")
    sink.dump_noise("noise", w)
    print(f"outputs under {sink.root}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for entry in list_suite():
            print(f"{entry['name']}  [{entry['fingerprint']}]")
            print(f"    {entry['description']}")
            print(f"    exercises: {entry['exercises']}")
        return 0

    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command in ("solve-spde", "run-particles"):
        route = "grid" if args.command == "solve-spde" else "particles"
        return _run_single_route(scenario, args, route)

    if args.command in _SUBCOMMAND_DIAGNOSTICS:
        wanted = _SUBCOMMAND_DIAGNOSTICS[args.command]
        missing = [d for d in wanted if d not in scenario.diagnostics]
        if missing:
            import json

            data = json.loads(json.dumps(scenario.data))
            data["diagnostics"] = wanted
            from .scenarios import Scenario, validate_scenario

            scenario = Scenario(validate_scenario(data, scenario.name))
    report = run_scenario(
        scenario,
        out_dir=args.out_dir,
        threads=args.threads,
        strict=args.strict,
        noise_seed=args.seed,
    )
    for check in report.checks:
        print(check.describe())
    for warning in report.warnings:
        print(f"warning: {warning}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'} "
          f"({scenario.name}-{scenario.fingerprint})")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
