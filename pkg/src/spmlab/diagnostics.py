"""Cross-solver comparison, energy-decay checks, the regularization sweep and
the mollified-coefficient convergence experiment.

Every pass/fail flag carries the measured value, the threshold it was held
against and the sample size, so reports are auditable without rerunning.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Callable

import numpy as np
from scipy.stats import ks_2samp

from .grid import (
    Grid,
    GridField,
    Mollifier,
    interp_values,
    mollify,
    sobolev_norm_values,
)
from .noise import ModeSet, NoiseRealization, PURPOSE_SCRATCH, counter_normals, sample_noise
from .nonlinearity import NonlinearitySpec, monotonicity_constant, regularize
from .spde import SpdeTrajectory, solve_spde


class DiagnosticsError(ValueError):
    """Invalid diagnostic configuration."""


@dataclass(frozen=True)
class CheckResult:
    """One auditable pass/fail flag."""

    name: str
    passed: bool
    value: float
    threshold: float
    comparison: str = "<="
    samples: int | None = None
    detail: str = ""

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        size = f" n={self.samples}" if self.samples is not None else ""
        extra = f" ({self.detail})" if self.detail else ""
        return (
            f"[{status}] {self.name}: value={self.value:.6g} "
            f"{self.comparison} {self.threshold:.6g}{size}{extra}"
        )


@dataclass
class DiagnosticsReport:
    """Structured record of one scenario run: metric series, sweep tables and
    pass/fail flags, together with the seeds that produced them."""

    scenario: str
    fingerprint: str
    seeds: dict = dataclass_field(default_factory=dict)
    series: dict = dataclass_field(default_factory=dict)
    tables: dict = dataclass_field(default_factory=dict)
    checks: list = dataclass_field(default_factory=list)
    warnings: list = dataclass_field(default_factory=list)

    def add_series(self, name: str, times, values) -> None:
        self.series[name] = (np.asarray(times, dtype=float), np.asarray(values, dtype=float))

    def add_table(self, name: str, rows: list[dict]) -> None:
        self.tables[name] = rows

    def add_check(self, check: CheckResult) -> None:
        self.checks.append(check)

    def check(
        self,
        name: str,
        value: float,
        threshold: float,
        comparison: str = "<=",
        samples: int | None = None,
        detail: str = "",
    ) -> CheckResult:
        ops: dict[str, Callable[[float, float], bool]] = {
            "<=": lambda a, b: a <= b,
            ">=": lambda a, b: a >= b,
            "==": lambda a, b: a == b,
        }
        result = CheckResult(
            name, bool(ops[comparison](value, threshold)), float(value), float(threshold),
            comparison, samples, detail,
        )
        self.checks.append(result)
        return result

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_jsonl_records(self) -> list[dict]:
        stamp = {"scenario": self.scenario, "fingerprint": self.fingerprint}
        records: list[dict] = [
            {"record": "header", "seeds": self.seeds, "passed": self.passed, **stamp}
        ]
        for name, (times, values) in self.series.items():
            for t, v in zip(times, values):
                records.append(
                    {"record": "series", "metric": name, "t": float(t), "value": float(v), **stamp}
                )
        for name, rows in self.tables.items():
            for row in rows:
                records.append({"record": "table", "table": name, "row": row, **stamp})
        for c in self.checks:
            records.append(
                {
                    "record": "check",
                    "name": c.name,
                    "passed": c.passed,
                    "value": c.value,
                    "threshold": c.threshold,
                    "comparison": c.comparison,
                    "samples": c.samples,
                    "detail": c.detail,
                    **stamp,
                }
            )
        for w in self.warnings:
            records.append({"record": "warning", "message": w, **stamp})
        return records


def _align_fields(traj_a: SpdeTrajectory, traj_b: SpdeTrajectory):
    """Interpolate the coarser trajectory onto the finer grid, per time slice."""
    if traj_a.times.shape != traj_b.times.shape or not np.allclose(traj_a.times, traj_b.times):
        raise DiagnosticsError("trajectories were recorded on different time grids")
    fine, coarse = (traj_a, traj_b) if traj_a.grid.point_count >= traj_b.grid.point_count else (traj_b, traj_a)
    if fine.grid == coarse.grid:
        return fine.grid, traj_a.fields, traj_b.fields
    mapped = np.empty_like(fine.fields)
    for m in range(coarse.fields.shape[0]):
        mapped[m] = interp_values(coarse.grid, coarse.fields[m], fine.grid.nodes)
    if traj_a is fine:
        return fine.grid, fine.fields, mapped
    return fine.grid, mapped, fine.fields


def h_minus1_distance(traj_a: SpdeTrajectory, traj_b: SpdeTrajectory) -> tuple[np.ndarray, np.ndarray]:
    """Squared discrete H^-1 distance per recorded time.

    Grids may differ in resolution; the coarser one is linearly interpolated
    onto the finer before the norm is taken.
    """
    grid, fa, fb = _align_fields(traj_a, traj_b)
    g = np.array(
        [sobolev_norm_values(grid, fa[m] - fb[m], -1) ** 2 for m in range(fa.shape[0])]
    )
    return traj_a.times.copy(), g


def l1_distance_series(traj_a: SpdeTrajectory, traj_b: SpdeTrajectory) -> tuple[np.ndarray, np.ndarray]:
    grid, fa, fb = _align_fields(traj_a, traj_b)
    d = grid.spacing * np.abs(fa - fb).sum(axis=1)
    return traj_a.times.copy(), d


def gronwall_constant(modes: ModeSet) -> float:
    """The exponential-envelope constant 2 + sum_i multiplier_bound(e_i)^2."""
    return 2.0 + sum(b * b for b in modes.multiplier_bounds)


def gronwall_check(
    times: np.ndarray,
    g_matrix: np.ndarray,
    constant: float,
    n_sigma: float = 4.0,
    atol: float = 1e-24,
) -> dict:
    """Test the realization-averaged energy inequality
    mean g(t) <= g(0) exp(C t) + statistical margin.

    Needs at least 100 realizations; also reports a fitted exponential rate
    when the averaged series is strictly positive.
    """
    g = np.atleast_2d(np.asarray(g_matrix, dtype=np.float64))
    if g.shape[0] < 100:
        raise DiagnosticsError(f"need at least 100 realizations, got {g.shape[0]}")
    times = np.asarray(times, dtype=np.float64)
    mean = g.mean(axis=0)
    se = g.std(axis=0, ddof=1) / np.sqrt(g.shape[0])
    envelope = mean[0] * np.exp(constant * times)
    margin = n_sigma * se + atol
    passed = bool(np.all(mean <= envelope + margin))
    fitted_rate = float("nan")
    if np.all(mean > 0):
        coeffs = np.polyfit(times, np.log(mean), 1)
        fitted_rate = float(coeffs[0])
    return {
        "times": times,
        "mean": mean,
        "standard_error": se,
        "envelope": envelope,
        "constant": constant,
        "fitted_rate": fitted_rate,
        "samples": int(g.shape[0]),
        "passed": passed,
    }


def _trajectory_l2_time_integral(traj: SpdeTrajectory) -> float:
    h = traj.grid.spacing
    dt_rec = np.diff(traj.times)
    sq = (traj.fields ** 2).sum(axis=1) * h
    return float((sq[:-1] * dt_rec).sum())


def kappa_sweep(
    grid: Grid,
    spec: NonlinearitySpec,
    modes: ModeSet,
    x0: GridField,
    dt: float,
    steps: int,
    kappas,
    realizations: int,
    noise_seed: int,
    reference_kappa: float | None = None,
    record_stride: int = 1,
    run_many: Callable | None = None,
) -> dict:
    """Regularization sweep with common random numbers across kappa.

    For every kappa the regularized solve is compared against a shared
    reference run (kappa_min / 10 for degenerate nonlinearities, exact 0
    otherwise), reporting per kappa: (a) sup_t mean squared H^-1 gap,
    (b) the time-integrated squared L2 gap of the base flux, (c) kappa times
    the time-integrated squared L2 state gap, the analytic envelope
    2 kappa E[int ||X||^2] exp((C(e) + alpha + 3 kappa) T) and a Cauchy table
    of consecutive-kappa gaps.
    """
    kappas = [float(k) for k in kappas]
    if len(kappas) < 4:
        raise DiagnosticsError(f"need at least 4 kappa values, got {len(kappas)}")
    if any(b >= a for a, b in zip(kappas, kappas[1:])):
        raise DiagnosticsError("kappa list must be strictly decreasing")
    if kappas[0] / kappas[-1] < 100.0:
        raise DiagnosticsError("kappa list must span at least two decades")
    if reference_kappa is None:
        reference_kappa = 0.0 if spec.amplitude_at_zero > 0 else kappas[-1] / 10.0

    specs = [regularize(spec, k) for k in kappas]
    ref_spec = regularize(spec, reference_kappa)
    h = grid.spacing

    def one_realization(r: int) -> dict:
        w = sample_noise(noise_seed + r, modes.channel_count, dt, steps)
        ref = solve_spde(x0, ref_spec, modes, w, dt, steps, record_stride=record_stride)
        out = {
            "ref_l2": _trajectory_l2_time_integral(ref),
            "g": [],
            "flux_gap": [],
            "state_gap": [],
            "fields_terminal": None,
        }
        dt_rec = np.diff(ref.times)
        prev_fields = None
        cauchy = []
        for sp in specs:
            traj = solve_spde(x0, sp, modes, w, dt, steps, record_stride=record_stride)
            diff = traj.fields - ref.fields
            g = np.array(
                [sobolev_norm_values(grid, diff[m], -1) ** 2 for m in range(diff.shape[0])]
            )
            flux_diff = spec.flux(traj.fields) - spec.flux(ref.fields)
            flux_sq = (flux_diff ** 2).sum(axis=1) * h
            state_sq = (diff ** 2).sum(axis=1) * h
            out["g"].append(g)
            out["flux_gap"].append(float((flux_sq[:-1] * dt_rec).sum()))
            out["state_gap"].append(float((state_sq[:-1] * dt_rec).sum()))
            if prev_fields is not None:
                pair = traj.fields - prev_fields
                pg = max(
                    sobolev_norm_values(grid, pair[m], -1) ** 2 for m in range(pair.shape[0])
                )
                cauchy.append(pg)
            prev_fields = traj.fields
        out["cauchy"] = cauchy
        return out

    indices = list(range(realizations))
    if run_many is None:
        results = [one_realization(r) for r in indices]
    else:
        results = run_many(one_realization, indices)

    horizon = steps * dt
    alpha = monotonicity_constant(spec)
    c_e = sum(b * b for b in modes.multiplier_bounds) + 2.0 * modes.drift_multiplier_bound
    ref_l2_mean = float(np.mean([res["ref_l2"] for res in results]))

    rows = []
    sup_means = []
    for i, kappa in enumerate(kappas):
        g_stack = np.stack([res["g"][i] for res in results])  # (R, T)
        mean_g = g_stack.mean(axis=0)
        peak = int(np.argmax(mean_g))
        se_peak = float(g_stack[:, peak].std(ddof=1) / np.sqrt(realizations)) if realizations > 1 else 0.0
        bound = 2.0 * kappa * ref_l2_mean * np.exp((c_e + alpha + 3.0 * kappa) * horizon)
        rows.append(
            {
                "kappa": kappa,
                "sup_mean_h1_gap_sq": float(mean_g[peak]),
                "standard_error": se_peak,
                "flux_gap_l2": float(np.mean([res["flux_gap"][i] for res in results])),
                "scaled_state_gap": kappa * float(np.mean([res["state_gap"][i] for res in results])),
                "analytic_bound": float(bound),
                "bound_holds": bool(mean_g[peak] <= bound + 4.0 * se_peak),
            }
        )
        sup_means.append(float(mean_g[peak]))

    cauchy_rows = [
        {
            "kappa_high": kappas[i],
            "kappa_low": kappas[i + 1],
            "sup_mean_h1_gap_sq": float(np.mean([res["cauchy"][i] for res in results])),
        }
        for i in range(len(kappas) - 1)
    ]

    log_k = np.log(kappas)
    log_g = np.log(sup_means)
    slope = float(np.polyfit(log_k, log_g, 1)[0]) if np.all(np.asarray(sup_means) > 0) else float("nan")
    return {
        "rows": rows,
        "cauchy": cauchy_rows,
        "slope": slope,
        "reference_kappa": reference_kappa,
        "constant": c_e,
        "alpha": alpha,
        "reference_l2_time_integral": ref_l2_mean,
        "samples": realizations,
    }


def cross_validate(grid_traj: SpdeTrajectory, particle_traj: SpdeTrajectory) -> dict:
    """Time series of H^-1 and L1 distances between the two solution routes.

    Both trajectories must stem from the same configuration: matching
    scenario fingerprints (when stamped), the same noise seed and the same
    recorded time grid.
    """
    fp_a = grid_traj.meta.get("scenario_fingerprint")
    fp_b = particle_traj.meta.get("scenario_fingerprint")
    if fp_a is not None and fp_b is not None and fp_a != fp_b:
        raise DiagnosticsError(f"scenario fingerprints differ: {fp_a} vs {fp_b}")
    if grid_traj.noise_seed != particle_traj.noise_seed:
        raise DiagnosticsError("trajectories were driven by different noise realizations")
    times, h1_sq = h_minus1_distance(grid_traj, particle_traj)
    _, l1 = l1_distance_series(grid_traj, particle_traj)
    return {
        "times": times,
        "h_minus1": np.sqrt(h1_sq),
        "l1": l1,
        "terminal_h_minus1": float(np.sqrt(h1_sq[-1])),
        "terminal_l1": float(l1[-1]),
    }


def ks_statistic(sample_a: np.ndarray, sample_b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(ks_2samp(sample_a, sample_b, method="asymp").statistic)


def mollified_coefficient_experiment(
    coefficient: GridField,
    scales: list[int],
    samples: int,
    horizon: float,
    dt: float,
    seed: int,
    start: float = 0.0,
) -> dict:
    """Convergence in law of plain Euler SDE samples as the diffusion
    coefficient is mollified at scale 1/n for increasing n.

    The coefficient must be bounded away from zero.  All n share the same
    driving increments (common random numbers), and consecutive terminal laws
    are compared with the Kolmogorov-Smirnov statistic.
    """
    if min(scales) < 1 or any(b <= a for a, b in zip(scales, scales[1:])):
        raise DiagnosticsError("mollification scales must be increasing positive integers")
    low = float(np.min(coefficient.values))
    if low <= 0:
        raise DiagnosticsError(
            f"coefficient must be bounded away from zero (min {low:g}); degenerate "
            "coefficients are outside this experiment's contract"
        )
    steps = int(round(horizon / dt))
    grid = coefficient.grid
    terminals = []
    sqrt_dt = np.sqrt(dt)
    for n in scales:
        smooth = mollify(coefficient, Mollifier(1.0 / n))
        y = np.full(samples, float(start))
        for k in range(steps):
            xi = counter_normals(seed, PURPOSE_SCRATCH, k + 1, samples)
            y = y + interp_values(grid, smooth.values, y) * sqrt_dt * xi
        terminals.append(y)
    rows = []
    for i in range(len(scales) - 1):
        rows.append(
            {
                "scale_coarse": scales[i],
                "scale_fine": scales[i + 1],
                "ks_distance": ks_statistic(terminals[i], terminals[i + 1]),
            }
        )
    return {"rows": rows, "samples": samples, "scales": list(scales)}
