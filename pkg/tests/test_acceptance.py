"""Acceptance gate: every shipped criterion at its stated tolerance.

Each test prints one pass/fail line.  Scenario runs are cached per module at
one worker thread; the determinism criterion replays every scenario on eight
threads and demands byte-identical report records.
"""

import json
import time

from spmlab.scenarios import builtin_names, load_builtin, run_scenario

_CACHE: dict = {}


def suite_run(name: str):
    """Run (once) and cache a shipped scenario at threads=1."""
    if name not in _CACHE:
        scenario = load_builtin(name)
        start = time.monotonic()
        report = run_scenario(scenario, threads=1)
        _CACHE[name] = (report, time.monotonic() - start)
    return _CACHE[name]


def check(report, name):
    for c in report.checks:
        if c.name == name:
            return c
    raise AssertionError(f"check {name!r} missing from report {report.scenario}")


def announce(criterion: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"{criterion}: {detail}"


def test_criterion_01_heat_reduction():
    report, seconds = suite_run("heat_baseline")
    var = check(report, "heat_variance_rel_error")
    l1 = check(report, "heat_particle_l1")
    ok = var.value <= 0.01 and l1.value <= 0.05 and seconds <= 60.0
    announce(
        "1 heat reduction",
        ok,
        f"variance rel err {var.value:.2e} <= 0.01, particle L1 {l1.value:.4f} <= 0.05, "
        f"runtime {seconds:.0f}s <= 60s",
    )


def test_criterion_02_barenblatt():
    report, _ = suite_run("barenblatt_m2")
    grid_l1 = check(report, "barenblatt_grid_l1")
    part_l1 = check(report, "barenblatt_particle_l1")
    ok = grid_l1.value <= 5e-3 and part_l1.value <= 0.08
    announce(
        "2 self-similar profile",
        ok,
        f"grid L1 {grid_l1.value:.2e} <= 5e-3, particle L1 {part_l1.value:.4f} <= 0.08 "
        f"at {part_l1.samples} particles",
    )


def test_criterion_03_linear_factorization():
    report, _ = suite_run("linear_factorization")
    grid_l1 = check(report, "factorization_grid_l1")
    part_l1 = check(report, "factorization_particle_l1")
    ok = grid_l1.value <= 0.02 and part_l1.value <= 0.08
    announce(
        "3 pathwise factorization",
        ok,
        f"grid L1 {grid_l1.value:.4f} <= 0.02, particle L1 {part_l1.value:.4f} <= 0.08 "
        "on the shared noise path",
    )


def test_criterion_04_doleans_moments():
    report, seconds = suite_run("doleans_moments")
    mean = check(report, "weight_mean_unit")
    moment = check(report, "weight_second_moment_bound")
    ok = (
        mean.value <= 4.0
        and moment.value <= 0.0
        and mean.samples == 10000
        and seconds <= 120.0
    )
    announce(
        "4 weight moments",
        ok,
        f"mean z-score {mean.value:.2f} <= 4, second-moment excess {moment.value:.2e} <= 0 "
        f"vs exp(0.75), {mean.samples} paths, runtime {seconds:.0f}s <= 120s",
    )


def test_criterion_05_mass_in_expectation():
    report, _ = suite_run("pme_m2_noise")
    grid_z = check(report, "grid_mass_expectation")
    part_z = check(report, "particle_mass_expectation")
    ok = grid_z.value <= 3.0 and part_z.value <= 3.0 and grid_z.samples == 200
    announce(
        "5 mass in expectation",
        ok,
        f"grid z {grid_z.value:.2f} <= 3, particle z {part_z.value:.2f} <= 3 "
        f"over {grid_z.samples} realizations",
    )


def test_criterion_06_multiplier_inequality():
    report, _ = suite_run("multiplier_catalog")
    violations = check(report, "multiplier_inequality_violations")
    ok = violations.value == 0.0 and violations.samples == 400
    announce(
        "6 multiplier inequality",
        ok,
        f"{int(violations.value)} violations over {violations.samples} mode/field pairs",
    )


def test_criterion_07_fp_uniqueness_echo():
    report, _ = suite_run("fp_uniqueness")
    order = check(report, "fp_refinement_order_256_512")
    echo = check(report, "fp_identical_zero_gap")
    ok = order.value >= 1.0 and echo.value <= 1e-24
    announce(
        "7 linear-form uniqueness echo",
        ok,
        f"refinement order {order.value:.2f} >= 1, identical-run gap {echo.value:.1e} "
        "at round-off",
    )


def test_criterion_08_kappa_sweep():
    report, seconds = suite_run("kappa_sweep_pme")
    names = [
        "kappa_gap_monotone",
        "kappa_flux_gap_monotone",
        "kappa_state_gap_monotone",
        "kappa_bound_holds",
    ]
    all_ok = all(check(report, n).passed for n in names)
    slope = check(report, "kappa_distance_slope_low").value
    ok = all_ok and 0.6 <= slope <= 1.2 and seconds <= 600.0
    announce(
        "8 regularization sweep",
        ok,
        f"columns monotone and bounded, distance slope {slope:.3f} in [0.6, 1.2], "
        f"runtime {seconds:.0f}s <= 600s",
    )


def test_criterion_09_cross_validation():
    heat, _ = suite_run("crossval_heat")
    pme, _ = suite_run("crossval_pme_noise")
    heat_terminal = check(heat, "crossval_terminal_h_minus1")
    ok = heat_terminal.value <= 0.05
    details = [f"heat terminal H^-1 {heat_terminal.value:.4f} <= 0.05"]
    for label, rep in (("heat", heat), ("pme", pme)):
        for variant in ("particle", "dt"):
            c = check(rep, f"crossval_{variant}_refinement")
            ok = ok and c.passed
            details.append(f"{label} {variant} refinement {c.value:.4f} <= {c.threshold:.4f}")
    announce("9 cross-validation convergence", ok, "; ".join(details))


def test_criterion_10_mollified_coefficient():
    report, _ = suite_run("mollified_sde")
    decreasing = check(report, "mollified_ks_strictly_decreasing")
    final = check(report, "mollified_ks_final")
    ok = decreasing.value == 0.0 and final.value <= 0.02 and final.samples == 100000
    announce(
        "10 mollified-coefficient convergence",
        ok,
        f"KS strictly decreasing, final {final.value:.4f} <= 0.02 "
        f"at {final.samples} samples",
    )


def test_criterion_11_determinism_across_threads():
    mismatched = []
    for name in builtin_names():
        base, _ = suite_run(name)
        threaded = run_scenario(load_builtin(name), threads=8)
        a = json.dumps(base.to_jsonl_records(), sort_keys=True)
        b = json.dumps(threaded.to_jsonl_records(), sort_keys=True)
        if a != b:
            mismatched.append(name)
    announce(
        "11 determinism",
        not mismatched,
        f"{len(builtin_names())} scenarios byte-identical at 1 and 8 threads"
        if not mismatched
        else f"mismatch in: {', '.join(mismatched)}",
    )


def test_full_suite_reports_pass():
    # every shipped scenario's own checks must be green as configured
    failures = []
    for name in builtin_names():
        report, _ = suite_run(name)
        for c in report.checks:
            if not c.passed:
                failures.append(f"{name}:{c.name}")
    assert not failures, f"failing scenario checks: {failures}"
