"""Weighted particle representation of the stochastic diffusion.

M particles carry positions driven by an idiosyncratic Brownian motion with
state-dependent amplitude, and strictly positive stochastic-exponential
weights accumulated along the shared noise path.  The weighted kernel-density
estimate of the ensemble is the particle-side counterpart of the grid
solution for the same noise realization.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import Grid, GridField, bump_kernel, interp_values
from .noise import (
    ModeSet,
    NoiseRealization,
    PURPOSE_PARTICLE_STEP,
    PURPOSE_SCRATCH,
    counter_normals,
    sample_noise,
)
from .nonlinearity import NonlinearitySpec
from .reference import InitialCondition
from .spde import SpdeTrajectory


class ParticleError(RuntimeError):
    """Invalid ensemble configuration or runtime failure."""


class ParticleEscapeError(ParticleError):
    """A particle left the trusted interior of the truncated domain."""


@dataclass(frozen=True)
class ParticleEnsemble:
    """Immutable snapshot of the weighted ensemble.

    log_weights is the accumulated stochastic-exponential ledger (weights are
    exp of it, hence strictly positive); drift_integrals accumulates the
    time integral of the deterministic channel along each path, which lets
    diagnostics split the weight into martingale and drift parts.
    """

    positions: np.ndarray
    log_weights: np.ndarray
    drift_integrals: np.ndarray
    time: float
    seed: int
    step_index: int = 0

    def __post_init__(self) -> None:
        for name in ("positions", "log_weights", "drift_integrals"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.count,):
                raise ParticleError(f"{name} has shape {arr.shape}, expected ({self.count},)")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def count(self) -> int:
        return int(np.asarray(self.positions).shape[0])

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def martingale_weights(self) -> np.ndarray:
        """Weights with the deterministic drift channel divided out."""
        return np.exp(self.log_weights - self.drift_integrals)

    def total_weighted_mass(self) -> float:
        return float(np.mean(self.weights))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,position,weight\n")
            w = self.weights
            for j in range(self.count):
                fh.write(f"{j},{float(self.positions[j])!r},{float(w[j])!r}\n")


def init_ensemble(x0: InitialCondition, count: int, seed: int) -> ParticleEnsemble:
    """Draw positions i.i.d. from the initial density via its inverse CDF.

    All weights start at exactly 1, so the initial weighted mass is exactly 1.
    """
    if count < 100:
        raise ParticleError(f"need at least 100 particles, got {count}")
    positions = x0.sample(count, seed)
    zeros = np.zeros(count)
    return ParticleEnsemble(positions, zeros.copy(), zeros.copy(), 0.0, int(seed))


@dataclass(frozen=True)
class WeightedDensity:
    """Kernel-density estimate of the weighted ensemble on a grid."""

    field: GridField
    total_mass: float


def weighted_density(ens: ParticleEnsemble, bandwidth: float, grid: Grid) -> WeightedDensity:
    """Deposit each particle's weight through a compactly supported kernel.

    Each particle's kernel is renormalised over the grid nodes it touches
    (wrapping under periodic boundaries), so the discrete integral of the
    estimate equals the mean weight exactly up to round-off.
    """
    h = grid.spacing
    if bandwidth < h:
        raise ParticleError(f"bandwidth {bandwidth:g} below grid spacing {h:g}")
    n = grid.point_count
    y = ens.positions
    base = np.floor((y + grid.half_width) / h).astype(np.int64)
    reach = int(np.ceil(bandwidth / h))
    offsets = np.arange(-reach, reach + 2)
    # distances from candidate nodes to each particle (offsets x particles)
    frac = (y + grid.half_width) / h - base
    dist = (offsets[:, None] - frac[None, :]) * h
    kernel = bump_kernel(dist / bandwidth)
    norms = kernel.sum(axis=0)
    kernel /= norms[None, :]
    deposit = kernel * (ens.weights[None, :] / (ens.count * h))
    out = np.zeros(n)
    if grid.boundary == "periodic":
        idx = (base[None, :] + offsets[:, None]) % n
        np.add.at(out, idx.ravel(), deposit.ravel())
    else:
        idx = base[None, :] + offsets[:, None]
        valid = (idx >= 0) & (idx < n)
        # renormalise over in-domain nodes so no mass is lost at the edges
        weight_in = np.where(valid, kernel, 0.0).sum(axis=0)
        if np.any(weight_in <= 0):
            raise ParticleError("particle kernel support fell outside the grid")
        deposit = np.where(valid, deposit / weight_in[None, :], 0.0)
        np.add.at(out, idx[valid], deposit[valid])
    return WeightedDensity(GridField(grid, out), ens.total_weighted_mass())


def normalize_density(d: WeightedDensity) -> GridField:
    """Rescale a weighted density to a probability density."""
    if d.total_mass <= 0:
        raise ParticleError(f"total weighted mass must be positive, got {d.total_mass}")
    return GridField(d.field.grid, d.field.values / d.total_mass)


def step_particles(
    ens: ParticleEnsemble,
    density: GridField,
    spec: NonlinearitySpec,
    modes: ModeSet,
    w: NoiseRealization,
    k: int,
    dt: float,
) -> ParticleEnsemble:
    """Advance positions and weights over step k.

    Positions move by amplitude(X_hat(Y)) sqrt(dt) * xi with xi drawn from the
    ensemble's own counter stream (independent of the noise channels); weights
    accumulate the stochastic-exponential increment evaluated at the
    start-of-step positions.
    """
    if not 0 <= k < w.step_count:
        raise ParticleError(f"step index {k} out of range [0, {w.step_count})")
    y = ens.positions
    xi = counter_normals(ens.seed, PURPOSE_PARTICLE_STEP, k, ens.count)
    local = np.maximum(interp_values(density.grid, density.values, y), 0.0)
    moved = y + spec.amplitude(local) * np.sqrt(dt) * xi

    mode_vals = modes.eval_modes_at(y)  # (N, M)
    dm = np.zeros(ens.count)
    dqv = np.zeros(ens.count)
    if modes.channel_count:
        dm += mode_vals.T @ w.increments[k]
        dqv += (mode_vals * mode_vals).sum(axis=0) * dt
    drift_inc = modes.eval_drift_at(y) * dt
    dm += drift_inc
    return ParticleEnsemble(
        positions=moved,
        log_weights=ens.log_weights + dm - 0.5 * dqv,
        drift_integrals=ens.drift_integrals + drift_inc,
        time=ens.time + dt,
        seed=ens.seed,
        step_index=ens.step_index + 1,
    )


def scott_bandwidth(ens: ParticleEnsemble, grid: Grid, factor: float = 1.06) -> float:
    """Weight-aware Scott rule max(h, factor * weighted std * M^(-1/5))."""
    w = ens.weights
    total = w.sum()
    mean = float((w * ens.positions).sum() / total)
    var = float((w * (ens.positions - mean) ** 2).sum() / total)
    return max(grid.spacing, factor * np.sqrt(max(var, 0.0)) * ens.count ** -0.2)


def run_dsnld(
    x0: InitialCondition,
    spec: NonlinearitySpec,
    modes: ModeSet,
    w: NoiseRealization,
    dt: float,
    steps: int,
    count: int,
    seed: int,
    grid: Grid,
    bandwidth: float | None = None,
    bandwidth_factor: float = 1.06,
    record_stride: int = 1,
    picard: bool = False,
    escape_fraction: float = 0.9,
) -> tuple[SpdeTrajectory, ParticleEnsemble]:
    """Self-consistent loop: estimate the weighted density, then move.

    At each step the current density estimate supplies the diffusion
    amplitude (explicit coupling); with ``picard`` a trial move re-estimates
    the density once and the final move reuses the refined amplitude.  The
    density trajectory is recorded in the same format as grid trajectories.
    """
    if abs(w.dt - dt) > 1e-12 * max(dt, w.dt):
        raise ParticleError(f"noise table dt {w.dt} does not match dt {dt}")
    if steps > w.step_count:
        raise ParticleError(f"requested {steps} steps but noise table has {w.step_count}")
    ens = init_ensemble(x0, count, seed)
    record_idx = list(range(0, steps + 1, record_stride))
    if record_idx[-1] != steps:
        record_idx.append(steps)
    recorded = np.empty((len(record_idx), grid.point_count))
    masses = np.empty(len(record_idx))
    pos = 0
    l2_accum = 0.0
    limit = escape_fraction * grid.half_width
    for k in range(steps):
        eps = bandwidth if bandwidth is not None else scott_bandwidth(ens, grid, bandwidth_factor)
        est = weighted_density(ens, eps, grid)
        l2_accum += dt * grid.spacing * float((est.field.values ** 2).sum())
        if k == record_idx[pos]:
            recorded[pos] = est.field.values
            masses[pos] = est.total_mass
            pos += 1
        density = est.field
        if picard:
            trial = step_particles(ens, density, spec, modes, w, k, dt)
            density = weighted_density(trial, eps, grid).field
        ens = step_particles(ens, density, spec, modes, w, k, dt)
        worst = float(np.max(np.abs(ens.positions)))
        if worst > limit:
            raise ParticleEscapeError(
                f"particle reached |y| = {worst:.3g} beyond {escape_fraction:.0%} of the "
                f"half-width {grid.half_width:g} at step {k + 1}"
            )
    eps = bandwidth if bandwidth is not None else scott_bandwidth(ens, grid, bandwidth_factor)
    est = weighted_density(ens, eps, grid)
    recorded[pos] = est.field.values
    masses[pos] = est.total_mass
    traj = SpdeTrajectory(
        grid=grid,
        times=dt * np.asarray(record_idx, dtype=np.float64),
        fields=recorded,
        dt=dt,
        record_stride=record_stride,
        noise_seed=w.seed,
        source="particles",
        meta={
            "particle_seed": seed,
            "particle_count": count,
            "weighted_mass": masses,
            "density_l2_time_integral": l2_accum,
        },
    )
    return traj, ens


def weight_paths(
    modes: ModeSet,
    horizon: float,
    dt: float,
    n_paths: int,
    noise_seed: int,
    carrier_seed: int | None = None,
    record_stride: int | None = None,
    carrier_amplitude: float = 1.0,
    start: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Independent stochastic-exponential weight paths, one noise path each.

    Path r uses the noise realization seeded noise_seed + r and a carrier
    position evolving as a Brownian motion of fixed amplitude (the martingale
    property of the weight holds for any adapted carrier).  Returns (times,
    martingale part M_t, full weight Z_t) with matrices of shape
    (n_paths, n_recorded).
    """
    steps = int(round(horizon / dt))
    if abs(steps * dt - horizon) > 1e-9 * horizon:
        raise ParticleError(f"horizon {horizon} is not a multiple of dt {dt}")
    if record_stride is None:
        record_stride = max(1, steps // 20)
    if carrier_seed is None:
        carrier_seed = noise_seed + 986_527
    record_idx = list(range(0, steps + 1, record_stride))
    if record_idx[-1] != steps:
        record_idx.append(steps)

    increments = np.empty((n_paths, steps, max(modes.channel_count, 1)))
    for r in range(n_paths):
        w = sample_noise(noise_seed + r, modes.channel_count, dt, steps)
        if modes.channel_count:
            increments[r] = w.increments
    carrier_inc = np.empty((n_paths, steps))
    for r in range(n_paths):
        carrier_inc[r] = counter_normals(carrier_seed + r, PURPOSE_SCRATCH, 0, steps)
    carrier_inc *= carrier_amplitude * np.sqrt(dt)

    y = np.full(n_paths, float(start))
    log_m = np.zeros(n_paths)
    drift_int = np.zeros(n_paths)
    m_out = np.empty((n_paths, len(record_idx)))
    z_out = np.empty((n_paths, len(record_idx)))
    pos = 0
    for k in range(steps + 1):
        if pos < len(record_idx) and k == record_idx[pos]:
            m_out[:, pos] = np.exp(log_m)
            z_out[:, pos] = np.exp(log_m + drift_int)
            pos += 1
        if k == steps:
            break
        if modes.channel_count:
            vals = modes.eval_modes_at(y)  # (N, R)
            log_m += np.einsum("ir,ri->r", vals, increments[:, k, : modes.channel_count])
            log_m -= 0.5 * dt * (vals * vals).sum(axis=0)
        drift_int += modes.eval_drift_at(y) * dt
        y = y + carrier_inc[:, k]
    times = dt * np.asarray(record_idx, dtype=np.float64)
    return times, m_out, z_out


def second_moment_check(
    times: np.ndarray,
    martingale_matrix: np.ndarray,
    modes: ModeSet,
    n_sigma: float = 4.0,
) -> dict:
    """Compare empirical second moments of the martingale weight part against
    the exponential bound exp(3 t sum_i sup|e_i|^2) at every recorded time.

    Passes when mean - n_sigma * SE stays at or below the bound throughout.
    """
    m = np.asarray(martingale_matrix, dtype=np.float64)
    if m.shape[0] < 1000:
        raise ParticleError(f"need at least 1000 realizations, got {m.shape[0]}")
    sq = m * m
    mean = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / np.sqrt(m.shape[0])
    bound = np.exp(3.0 * np.asarray(times) * modes.sup_square_sum)
    passed = bool(np.all(mean - n_sigma * se <= bound))
    return {
        "times": np.asarray(times, dtype=np.float64),
        "second_moment": mean,
        "standard_error": se,
        "bound": bound,
        "samples": int(m.shape[0]),
        "passed": passed,
    }
