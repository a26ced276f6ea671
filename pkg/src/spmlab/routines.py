"""Diagnostic routines wired into scenarios.

Each routine runs the solvers it needs, appends series/tables/checks to the
report and hands trajectories to the output sink for CSV and figure dumps.
Every check records its measured value, threshold and sample size.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import (
    cross_validate,
    h_minus1_distance,
    kappa_sweep,
    mollified_coefficient_experiment,
)
from .grid import GridField, bump_field, integral, make_grid
from .noise import MODE_CATALOG, coarsen_noise, mode_field, sample_noise
from .particles import run_dsnld, second_moment_check, weight_paths
from .reference import barenblatt_density, heat_density, stochastic_exponential_path
from .spde import (
    CLIPPED_MASS_LIMIT,
    solve_fokker_planck,
    solve_spde,
    weak_form_residual,
)


def _grid_solve(scenario, grid, spec, modes, w, stride=None, dt=None, steps=None):
    return solve_spde(
        scenario.initial_condition().density(grid),
        spec,
        modes,
        w,
        dt if dt is not None else scenario.dt,
        steps if steps is not None else scenario.steps,
        record_stride=stride if stride is not None else scenario.record_stride,
        picard_iterations=scenario.data["solver"]["picard_iterations"],
    )


def _particle_run(scenario, grid, spec, modes, w, count=None, stride=None, dt=None,
                  steps=None, seed=None):
    pcfg = scenario.data["particles"]
    return run_dsnld(
        scenario.initial_condition(),
        spec,
        modes,
        w,
        dt if dt is not None else scenario.dt,
        steps if steps is not None else scenario.steps,
        count if count is not None else pcfg["count"],
        seed if seed is not None else pcfg["seed"],
        grid,
        bandwidth=pcfg["bandwidth"],
        bandwidth_factor=pcfg["bandwidth_factor"],
        record_stride=stride if stride is not None else scenario.record_stride,
        picard=pcfg["picard"],
    )


def _clipping_check(report, label, traj):
    report.check(
        f"{label}_clipped_mass_fraction",
        traj.meta["clipped_mass_fraction"],
        CLIPPED_MASS_LIMIT,
        detail="mass removed by negative-undershoot clipping, relative to total",
    )


def _field_moments(grid, values):
    mass = grid.spacing * values.sum()
    mean = grid.spacing * (grid.nodes * values).sum() / mass
    var = grid.spacing * ((grid.nodes - mean) ** 2 * values).sum() / mass
    return mass, mean, var


def grid_heat_oracle(scenario, report, sink, threads):
    """Deterministic linear diffusion against the exact Gaussian evolution."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    traj = _grid_solve(scenario, grid, spec, modes, scenario.noise(0))
    var0 = scenario.data["x0"]["params"].get("variance", 1.0)
    variances = np.array([_field_moments(grid, traj.fields[m])[2]
                          for m in range(traj.record_count)])
    report.add_series("grid_variance", traj.times, variances)
    report.add_series("grid_mass", traj.times, traj.mass_series())
    target = var0 + scenario.horizon
    report.check(
        "heat_variance_rel_error",
        abs(variances[-1] - target) / target,
        scenario.tolerance("heat_variance_rel"),
        detail=f"terminal variance {variances[-1]:.6f} vs {target:.6f}",
    )
    _clipping_check(report, "grid_heat", traj)
    if sink:
        sink.dump_trajectory("grid_heat", traj)


def particle_heat_oracle(scenario, report, sink, threads):
    """Particle density against the exact Gaussian evolution."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    traj, ens = _particle_run(scenario, grid, spec, modes, scenario.noise(0))
    var0 = scenario.data["x0"]["params"].get("variance", 1.0)
    l1 = np.array([
        grid.spacing * np.abs(traj.fields[m] - heat_density(grid.nodes, t, var0)).sum()
        for m, t in enumerate(traj.times)
    ])
    report.add_series("particle_heat_l1", traj.times, l1)
    report.check(
        "heat_particle_l1",
        float(l1[-1]),
        scenario.tolerance("heat_particle_l1"),
        samples=scenario.particle_count,
        detail="terminal L1 distance to the exact Gaussian density",
    )
    report.check(
        "particle_density_l2_integral_finite",
        0.0 if np.isfinite(traj.meta["density_l2_time_integral"]) else 1.0,
        0.0,
        detail=f"time-integrated squared L2 mass {traj.meta['density_l2_time_integral']:.6g}",
    )
    if sink:
        sink.dump_trajectory("particle_heat", traj)
        sink.dump_ensemble("particle_heat_final", ens)


def grid_barenblatt_oracle(scenario, report, sink, threads):
    """Quadratic diffusion against the self-similar source solution."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    traj = _grid_solve(scenario, grid, spec, modes, scenario.noise(0))
    t0 = scenario.data["x0"]["params"].get("time", 0.1)
    mass = scenario.data["x0"]["params"].get("mass", 1.0)
    l1 = np.array([
        grid.spacing * np.abs(traj.fields[m] - barenblatt_density(grid.nodes, t0 + t, mass)).sum()
        for m, t in enumerate(traj.times)
    ])
    report.add_series("grid_barenblatt_l1", traj.times, l1)
    report.check(
        "barenblatt_grid_l1",
        float(l1[-1]),
        scenario.tolerance("barenblatt_grid_l1"),
        detail=f"terminal L1 distance to the profile at t = {t0 + scenario.horizon:g}",
    )
    _clipping_check(report, "grid_barenblatt", traj)
    if sink:
        sink.dump_trajectory("grid_barenblatt", traj)


def particle_barenblatt_oracle(scenario, report, sink, threads):
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    traj, ens = _particle_run(scenario, grid, spec, modes, scenario.noise(0))
    t0 = scenario.data["x0"]["params"].get("time", 0.1)
    mass = scenario.data["x0"]["params"].get("mass", 1.0)
    l1 = np.array([
        grid.spacing * np.abs(traj.fields[m] - barenblatt_density(grid.nodes, t0 + t, mass)).sum()
        for m, t in enumerate(traj.times)
    ])
    report.add_series("particle_barenblatt_l1", traj.times, l1)
    report.check(
        "barenblatt_particle_l1",
        float(l1[-1]),
        scenario.tolerance("barenblatt_particle_l1"),
        samples=scenario.particle_count,
    )
    if sink:
        sink.dump_trajectory("particle_barenblatt", traj)
        sink.dump_ensemble("particle_barenblatt_final", ens)


def factorization(scenario, report, sink, threads):
    """Pathwise check of both solvers against the product of the realized
    stochastic exponential and the deterministic heat evolution (linear flux,
    one constant mode)."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    mode_cfg = scenario.data["modes"]
    if len(mode_cfg) != 1 or mode_cfg[0]["name"] != "constant":
        raise ValueError("factorization diagnostic needs exactly one constant mode")
    gain = mode_cfg[0]["amplitude"]
    var0 = scenario.data["x0"]["params"].get("variance", 1.0)
    w = scenario.noise(0)
    factor = stochastic_exponential_path(w.increments[:, 0], scenario.dt, gain)

    def exact(t):
        k = int(round(t / scenario.dt))
        return factor[k] * heat_density(grid.nodes, t, var0)

    traj_grid = _grid_solve(scenario, grid, spec, modes, w)
    l1_grid = np.array([
        grid.spacing * np.abs(traj_grid.fields[m] - exact(t)).sum()
        for m, t in enumerate(traj_grid.times)
    ])
    report.add_series("factorization_grid_l1", traj_grid.times, l1_grid)
    report.check(
        "factorization_grid_l1",
        float(l1_grid.max()),
        scenario.tolerance("factorization_grid_l1"),
        detail=f"max over recorded times; realized terminal factor {factor[-1]:.4f}",
    )
    _clipping_check(report, "factorization_grid", traj_grid)

    traj_part, _ = _particle_run(scenario, grid, spec, modes, w)
    l1_part = np.array([
        grid.spacing * np.abs(traj_part.fields[m] - exact(t)).sum()
        for m, t in enumerate(traj_part.times)
    ])
    report.add_series("factorization_particle_l1", traj_part.times, l1_part)
    report.check(
        "factorization_particle_l1",
        float(l1_part.max()),
        scenario.tolerance("factorization_particle_l1"),
        samples=scenario.particle_count,
    )
    if sink:
        sink.dump_trajectory("factorization_grid", traj_grid)
        sink.dump_trajectory("factorization_particle", traj_part)
        sink.dump_noise("factorization_noise", w)


def doleans_moments(scenario, report, sink, threads):
    """First- and second-moment contracts of the exponential weights over an
    ensemble of noise paths: mean 1, second moment below exp(3 t sum sup^2),
    and mean below exp(t sup|drift|) when a drift channel is present."""
    grid = scenario.build_grid()
    modes = scenario.build_modes(grid)
    n_paths = scenario.realizations
    sigma = scenario.tolerance("moment_sigma")
    times, m_mat, z_mat = weight_paths(
        modes, scenario.horizon, scenario.dt, n_paths,
        noise_seed=scenario.noise_seed, carrier_seed=scenario.particle_seed,
    )
    mean = z_mat.mean(axis=0)
    se = z_mat.std(axis=0, ddof=1) / np.sqrt(n_paths)
    report.add_series("weight_mean", times, mean)
    if modes.drift is None:
        z_terminal = abs(mean[-1] - 1.0) / se[-1]
        report.check(
            "weight_mean_unit",
            float(z_terminal),
            sigma,
            samples=n_paths,
            detail=f"terminal mean {mean[-1]:.5f} (se {se[-1]:.2g}); z-score vs 1",
        )
    else:
        bound = np.exp(times * modes.drift_sup)
        excess = float(np.max(mean - sigma * se - bound))
        report.check(
            "weight_mean_drift_bound",
            excess,
            0.0,
            samples=n_paths,
            detail="mean minus margin stays below exp(t sup|drift|)",
        )
    moment = second_moment_check(times, m_mat, modes, n_sigma=sigma)
    report.add_series("weight_second_moment", times, moment["second_moment"])
    report.add_series("weight_second_moment_bound", times, moment["bound"])
    excess = float(np.max(
        moment["second_moment"] - sigma * moment["standard_error"] - moment["bound"]
    ))
    report.check(
        "weight_second_moment_bound",
        excess,
        0.0,
        samples=n_paths,
        detail=f"max over recorded times of mean - {sigma:g} se - bound",
    )


def mass_expectation(scenario, report, sink, threads):
    """Expected total mass 1 for both solution routes over the realization
    ensemble (no drift channel)."""
    from .scenarios import run_many

    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    sigma = scenario.tolerance("mass_sigma")
    count = scenario.realizations

    def grid_mass(r):
        traj = _grid_solve(scenario, grid, spec, modes, scenario.noise(r),
                           stride=scenario.steps)
        return integral(traj.terminal())

    def particle_mass(r):
        traj, _ = _particle_run(scenario, grid, spec, modes, scenario.noise(r),
                                stride=scenario.steps,
                                seed=scenario.particle_seed + r)
        return float(traj.meta["weighted_mass"][-1])

    masses = np.array(run_many(grid_mass, range(count), threads))
    z = abs(masses.mean() - 1.0) / (masses.std(ddof=1) / np.sqrt(count))
    report.check(
        "grid_mass_expectation",
        float(z),
        sigma,
        samples=count,
        detail=f"mean terminal mass {masses.mean():.5f}; z-score vs 1",
    )
    pmasses = np.array(run_many(particle_mass, range(count), threads))
    zp = abs(pmasses.mean() - 1.0) / (pmasses.std(ddof=1) / np.sqrt(count))
    report.check(
        "particle_mass_expectation",
        float(zp),
        sigma,
        samples=count,
        detail=f"mean terminal weighted mass {pmasses.mean():.5f}; z-score vs 1",
    )
    report.add_table("terminal_masses", [
        {"route": "grid", "mean": float(masses.mean()),
         "standard_error": float(masses.std(ddof=1) / np.sqrt(count))},
        {"route": "particles", "mean": float(pmasses.mean()),
         "standard_error": float(pmasses.std(ddof=1) / np.sqrt(count))},
    ])


def multiplier_inequality(scenario, report, sink, threads):
    """Operator bound sqrt(2)(sup|e|^2 + sup|e'|^2)^(1/2) dominates the
    measured H^-1 ratio for every catalog mode over rough random fields."""
    from .grid import multiplier_norm_bound, sobolev_norm

    grid = scenario.build_grid()
    n_fields = int(scenario.tolerance("multiplier_fields"))
    rng = np.random.default_rng(scenario.noise_seed)
    violations = 0
    rows = []
    for name in MODE_CATALOG:
        e = mode_field(grid, name)
        bound = multiplier_norm_bound(e)
        worst = 0.0
        for _ in range(n_fields):
            f = GridField(grid, rng.standard_normal(grid.point_count))
            ratio = sobolev_norm(GridField(grid, e.values * f.values), -1) / sobolev_norm(f, -1)
            worst = max(worst, ratio)
            violations += ratio > bound
        rows.append({"mode": name, "bound": bound, "worst_ratio": worst,
                     "headroom": worst / bound})
    report.add_table("multiplier_bounds", rows)
    report.check(
        "multiplier_inequality_violations",
        float(violations),
        0.0,
        samples=n_fields * len(MODE_CATALOG),
        detail="count of sampled fields violating the operator bound",
    )


def fp_uniqueness(scenario, report, sink, threads):
    """Uniqueness echo for the linear equation with the coefficient inside the
    Laplacian: identical discretizations agree to round-off, and consecutive
    resolutions converge with order at least one in the H^-1 gap."""
    from .scenarios import coefficient_field, run_many

    if scenario.data["fp"] is None:
        raise ValueError(f"scenario {scenario.name!r} has no 'fp' section")
    resolutions = scenario.data["fp"]["resolutions"]
    coef_cfg = scenario.data["fp"]["coefficient"]
    bc = scenario.data["grid"]["boundary"]
    half_width = scenario.data["grid"]["half_width"]

    def one_realization(r):
        w = scenario.noise(r)
        trajs = []
        for n in resolutions:
            grid_n = make_grid(half_width, n, bc)
            coef = coefficient_field(grid_n, coef_cfg)
            if np.min(coef.values) < 0:
                raise ValueError("Fokker-Planck coefficient must be nonnegative")
            z0 = scenario.initial_condition().density(grid_n)
            modes_n = scenario.build_modes(grid_n)
            trajs.append(
                solve_fokker_planck(coef, z0, modes_n, w, scenario.dt, scenario.steps,
                                    record_stride=scenario.record_stride)
            )
        gaps = []
        for a, b in zip(trajs, trajs[1:]):
            _, g = h_minus1_distance(a, b)
            gaps.append(float(np.sqrt(g.max())))
        return gaps

    gaps = np.array(run_many(one_realization, range(scenario.realizations), threads))
    mean_gaps = gaps.mean(axis=0)
    rows = []
    for i in range(len(resolutions) - 1):
        rows.append({
            "resolution_coarse": resolutions[i],
            "resolution_fine": resolutions[i + 1],
            "mean_sup_h1_gap": float(mean_gaps[i]),
        })
    report.add_table("fp_refinement", rows)
    for i in range(len(mean_gaps) - 1):
        order = float(np.log2(mean_gaps[i] / mean_gaps[i + 1]))
        report.check(
            f"fp_refinement_order_{resolutions[i + 1]}_{resolutions[i + 2]}",
            order,
            scenario.tolerance("fp_order_min"),
            ">=",
            samples=scenario.realizations,
            detail="empirical order from consecutive-resolution sup-t H^-1 gaps",
        )

    # identical-discretization echo: same coefficient, data and noise twice
    grid_n = make_grid(half_width, resolutions[-1], bc)
    coef = coefficient_field(grid_n, coef_cfg)
    z0 = scenario.initial_condition().density(grid_n)
    modes_n = scenario.build_modes(grid_n)
    w = scenario.noise(0)
    first = solve_fokker_planck(coef, z0, modes_n, w, scenario.dt, scenario.steps,
                                record_stride=scenario.record_stride)
    second = solve_fokker_planck(coef, z0, modes_n, w, scenario.dt, scenario.steps,
                                 record_stride=scenario.record_stride)
    times, g = h_minus1_distance(first, second)
    report.add_series("fp_identical_gap", times, g)
    report.check(
        "fp_identical_zero_gap",
        float(g.max()),
        1e-24,
        detail="squared H^-1 gap between identical solves (round-off scale)",
    )
    if sink:
        sink.dump_trajectory("fp_finest", first)


def kappa_regularization_sweep(scenario, report, sink, threads):
    """Sweep of the additive regularization against a shared small-kappa
    reference run with common random numbers, checked against the analytic
    linear-in-kappa envelope and the expected distance slope."""
    from .scenarios import run_many

    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    x0 = scenario.initial_condition().density(grid)
    cfg = scenario.data["kappa"]
    if cfg is None:
        raise ValueError(f"scenario {scenario.name!r} has no 'kappa' section")
    result = kappa_sweep(
        grid, spec, modes, x0,
        scenario.dt, scenario.steps,
        cfg["values"], scenario.realizations, scenario.noise_seed,
        reference_kappa=cfg["reference"],
        record_stride=scenario.record_stride,
        run_many=lambda fn, items: run_many(fn, items, threads),
    )
    report.add_table("kappa_sweep", result["rows"])
    report.add_table("kappa_cauchy", result["cauchy"])

    sup_gaps = [row["sup_mean_h1_gap_sq"] for row in result["rows"]]
    flux_gaps = [row["flux_gap_l2"] for row in result["rows"]]
    state_gaps = [row["scaled_state_gap"] for row in result["rows"]]
    report.check(
        "kappa_gap_monotone",
        float(sum(b >= a for a, b in zip(sup_gaps, sup_gaps[1:]))),
        0.0,
        samples=scenario.realizations,
        detail="count of non-decreasing consecutive sup-gap pairs (kappa decreasing)",
    )
    report.check(
        "kappa_flux_gap_monotone",
        float(sum(b >= a for a, b in zip(flux_gaps, flux_gaps[1:]))),
        0.0,
        detail="count of non-decreasing flux-gap pairs",
    )
    report.check(
        "kappa_state_gap_monotone",
        float(sum(b >= a for a, b in zip(state_gaps, state_gaps[1:]))),
        0.0,
        detail="count of non-decreasing scaled state-gap pairs",
    )
    report.check(
        "kappa_columns_nonnegative",
        float(min(min(sup_gaps), min(flux_gaps), min(state_gaps))),
        0.0,
        ">=",
    )
    # the analytic envelope is linear in kappa for the squared gap, so the
    # fitted slope band applies to the H^-1 distance (half the squared slope)
    distance_slope = 0.5 * result["slope"]
    report.check(
        "kappa_distance_slope_low",
        distance_slope,
        scenario.tolerance("kappa_slope_low"),
        ">=",
        detail=f"squared-gap slope {result['slope']:.3f}",
    )
    report.check(
        "kappa_distance_slope_high",
        distance_slope,
        scenario.tolerance("kappa_slope_high"),
        "<=",
    )
    report.check(
        "kappa_bound_holds",
        float(sum(not row["bound_holds"] for row in result["rows"])),
        0.0,
        samples=scenario.realizations,
        detail="count of kappa values violating the analytic envelope + 4 se",
    )


def cross_validation(scenario, report, sink, threads):
    """Grid-vs-particle agreement for one shared noise path, with particle
    count and time-step refinement (shared Brownian path across step sizes)."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    channels = len(scenario.data["modes"])
    stride = scenario.record_stride
    fine = sample_noise(scenario.noise_seed, channels, scenario.dt / 2, 2 * scenario.steps)
    base_w = coarsen_noise(fine, 2)
    margin = 1.0 + scenario.tolerance("crossval_margin_rel")

    def distances(w, dt, steps, count, stride_):
        tg = _grid_solve(scenario, grid, spec, modes, w, stride=stride_, dt=dt, steps=steps)
        tg.meta["scenario_fingerprint"] = scenario.fingerprint
        tp, _ = _particle_run(scenario, grid, spec, modes, w, count=count,
                              stride=stride_, dt=dt, steps=steps)
        tp.meta["scenario_fingerprint"] = scenario.fingerprint
        return cross_validate(tg, tp), tg, tp

    base, tg, tp = distances(base_w, scenario.dt, scenario.steps, scenario.particle_count, stride)
    _clipping_check(report, "crossval_grid", tg)
    report.add_series("crossval_h_minus1", base["times"], base["h_minus1"])
    report.add_series("crossval_l1", base["times"], base["l1"])
    quad, _, _ = distances(base_w, scenario.dt, scenario.steps,
                           4 * scenario.particle_count, stride)
    half, _, _ = distances(fine, scenario.dt / 2, 2 * scenario.steps,
                           scenario.particle_count, 2 * stride)
    report.add_table("crossval_refinement", [
        {"variant": "base", "terminal_h_minus1": base["terminal_h_minus1"],
         "terminal_l1": base["terminal_l1"]},
        {"variant": "particles_x4", "terminal_h_minus1": quad["terminal_h_minus1"],
         "terminal_l1": quad["terminal_l1"]},
        {"variant": "dt_half", "terminal_h_minus1": half["terminal_h_minus1"],
         "terminal_l1": half["terminal_l1"]},
    ])
    report.check(
        "crossval_terminal_h_minus1",
        base["terminal_h_minus1"],
        scenario.tolerance("crossval_h1"),
        samples=scenario.particle_count,
    )
    report.check(
        "crossval_particle_refinement",
        quad["terminal_h_minus1"],
        base["terminal_h_minus1"] * margin,
        detail="terminal H^-1 distance with 4x particles vs base (with margin)",
    )
    report.check(
        "crossval_dt_refinement",
        half["terminal_h_minus1"],
        base["terminal_h_minus1"] * margin,
        detail="terminal H^-1 distance at dt/2 on the shared Brownian path",
    )
    if sink:
        sink.dump_trajectory("crossval_grid", tg)
        sink.dump_trajectory("crossval_particles", tp)


def mollified_sde(scenario, report, sink, threads):
    """Convergence in law of the plain SDE with mollified coefficient."""
    from .scenarios import coefficient_field

    cfg = scenario.data["mollified"]
    if cfg is None:
        raise ValueError(f"scenario {scenario.name!r} has no 'mollified' section")
    fine_grid = make_grid(cfg["half_width"], cfg["fine_points"], "neumann")
    coef = coefficient_field(fine_grid, cfg["coefficient"])
    result = mollified_coefficient_experiment(
        coef, cfg["scales"], cfg["samples"], cfg["horizon"], cfg["dt"],
        seed=scenario.noise_seed,
    )
    report.add_table("mollified_ks", result["rows"])
    ks = [row["ks_distance"] for row in result["rows"]]
    report.check(
        "mollified_ks_strictly_decreasing",
        float(sum(b >= a for a, b in zip(ks, ks[1:]))),
        0.0,
        samples=cfg["samples"],
        detail="count of non-decreasing consecutive KS distances",
    )
    report.check(
        "mollified_ks_final",
        ks[-1],
        scenario.tolerance("ks_final"),
        samples=cfg["samples"],
    )


def weak_residual(scenario, report, sink, threads):
    """Weak-form residual of a stride-1 solve against compact test bumps."""
    grid = scenario.build_grid()
    spec = scenario.build_nonlinearity()
    modes = scenario.build_modes(grid)
    w = scenario.noise(0)
    x0 = scenario.initial_condition().density(grid)
    traj = solve_spde(x0, spec, modes, w, scenario.dt, scenario.steps, record_stride=1,
                      picard_iterations=scenario.data["solver"]["picard_iterations"])
    width = 0.3 * grid.half_width
    phis = [bump_field(grid, 0.0, width), bump_field(grid, 0.2 * grid.half_width, width)]
    out = weak_form_residual(traj, spec, modes, w, phis, initial=x0)
    report.add_series("weak_residual_max_over_tests", out["times"],
                      out["residuals"].max(axis=0))
    report.check(
        "weak_residual_max",
        float(out["residuals"].max()),
        scenario.tolerance("weak_residual_max"),
        detail="max over recorded times and test functions, L2-normalized",
    )


DIAGNOSTIC_ROUTINES = {
    "grid_heat_oracle": grid_heat_oracle,
    "particle_heat_oracle": particle_heat_oracle,
    "grid_barenblatt_oracle": grid_barenblatt_oracle,
    "particle_barenblatt_oracle": particle_barenblatt_oracle,
    "factorization": factorization,
    "doleans_moments": doleans_moments,
    "mass_expectation": mass_expectation,
    "multiplier_inequality": multiplier_inequality,
    "fp_uniqueness": fp_uniqueness,
    "kappa_sweep": kappa_regularization_sweep,
    "cross_validation": cross_validation,
    "mollified_sde": mollified_sde,
    "weak_residual": weak_residual,
}
