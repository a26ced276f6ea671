"""Colored noise drivers and Doléans-exponential arithmetic.

The driving field mu(t, x) = sum_i e_i(x) W^i_t + e_0(x) t combines finitely
many bounded spatial modes with independent Brownian channels plus one
deterministic drift channel.  Increments come from a counter-based generator
(Philox) keyed on (seed, purpose, index): regeneration is bit-identical and
independent of evaluation order or thread count, and the particle streams
never overlap the noise streams.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtri

from .grid import Grid, GridField, interp_values, multiplier_norm_bound

# purpose tags carving the Philox key space into disjoint stream families
PURPOSE_CHANNEL = 1        # Brownian channels of the driving field
PURPOSE_PARTICLE_STEP = 2  # per-step idiosyncratic particle increments
PURPOSE_PARTICLE_INIT = 3  # initial-condition sampling
PURPOSE_SCRATCH = 4        # auxiliary studies (plain SDE sampling etc.)

_MASK64 = (1 << 64) - 1


class NoiseError(ValueError):
    """Invalid noise construction or lookup."""


def _philox_key(seed: int, purpose: int, index: int) -> np.ndarray:
    key = np.empty(2, dtype=np.uint64)
    key[0] = np.uint64(int(seed) & _MASK64)
    key[1] = np.uint64(((int(purpose) & 0xFFFF) << 48) | (int(index) & ((1 << 48) - 1)))
    return key


def counter_normals(seed: int, purpose: int, index: int, count: int) -> np.ndarray:
    """Standard normals from the (seed, purpose, index) Philox stream.

    Word k of the stream maps to draw k through the inverse normal CDF, so
    every draw is addressable by its counter position.
    """
    raw = np.random.Philox(key=_philox_key(seed, purpose, index)).random_raw(count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def counter_uniforms(seed: int, purpose: int, index: int, count: int) -> np.ndarray:
    """Uniforms in (0, 1) from the (seed, purpose, index) Philox stream."""
    raw = np.random.Philox(key=_philox_key(seed, purpose, index)).random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


@dataclass(frozen=True)
class NoiseRealization:
    """Seeded table of Brownian increments, one column per channel.

    increments[k, i] ~ Normal(0, dt) is the step-k increment of channel i+1.
    Regeneration from (seed, channel_count, dt, step_count) via sample_noise
    is bit-identical.
    """

    seed: int
    dt: float
    step_count: int
    increments: np.ndarray

    def __post_init__(self) -> None:
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.shape[0] != self.step_count:
            raise NoiseError("increment table length does not match step_count")
        inc = inc.copy()
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    @property
    def channel_count(self) -> int:
        return int(self.increments.shape[1])

    def path(self, channel: int) -> np.ndarray:
        """Brownian path W_{t_k} of one channel at t_k = k dt (length K+1)."""
        w = np.zeros(self.step_count + 1)
        np.cumsum(self.increments[:, channel], out=w[1:])
        return w

    def save_npz(self, path) -> None:
        np.savez(
            path,
            seed=np.int64(self.seed),
            dt=np.float64(self.dt),
            increments=self.increments,
        )

    @staticmethod
    def load_npz(path) -> "NoiseRealization":
        data = np.load(path)
        inc = data["increments"]
        return NoiseRealization(int(data["seed"]), float(data["dt"]), inc.shape[0], inc)

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# seed={self.seed} dt={self.dt!r} steps={self.step_count} channels={self.channel_count}\n")
            fh.write("step,channel,increment\n")
            for k in range(self.step_count):
                for i in range(self.channel_count):
                    fh.write(f"{k},{i},{float(self.increments[k, i])!r}\n")

    @staticmethod
    def load_csv(path) -> "NoiseRealization":
        with open(path) as fh:
            header = fh.readline().strip().lstrip("# ")
            meta = dict(part.split("=") for part in header.split())
            fh.readline()
            steps = int(meta["steps"])
            channels = int(meta["channels"])
            inc = np.zeros((steps, channels))
            for line in fh:
                k, i, val = line.strip().split(",")
                inc[int(k), int(i)] = float(val)
        return NoiseRealization(int(meta["seed"]), float(meta["dt"]), steps, inc)


def sample_noise(seed: int, channels: int, dt: float, steps: int) -> NoiseRealization:
    """Generate the seeded increment table for `channels` Brownian drivers.

    Channel i draws from its own counter-based sub-stream, so tables are
    reproducible regardless of generation order or parallelism.
    """
    if dt <= 0:
        raise NoiseError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise NoiseError(f"need at least one step, got {steps}")
    if channels < 0:
        raise NoiseError(f"channel count must be nonnegative, got {channels}")
    scale = np.sqrt(dt)
    table = np.empty((steps, channels))
    for i in range(channels):
        table[:, i] = scale * counter_normals(seed, PURPOSE_CHANNEL, i + 1, steps)
    return NoiseRealization(int(seed), float(dt), int(steps), table)


def coarsen_noise(w: NoiseRealization, factor: int) -> NoiseRealization:
    """Aggregate consecutive increments so both tables drive the same Brownian
    path at two step sizes (used by common-path refinement studies).

    The result is a derived table: it is not regenerable from its nominal
    (seed, dt, steps) via sample_noise.
    """
    if factor < 1 or w.step_count % factor:
        raise NoiseError(f"factor {factor} does not divide step count {w.step_count}")
    coarse = w.increments.reshape(w.step_count // factor, factor, w.channel_count).sum(axis=1)
    return NoiseRealization(w.seed, w.dt * factor, w.step_count // factor, coarse)


@dataclass(frozen=True)
class ModeSet:
    """The spatial modes of the driving field on a grid.

    ``fields`` are the stochastic modes e_1..e_N; ``drift`` is the
    deterministic channel e_0 (None means zero).  Sup norms, derivative sup
    norms and multiplier bounds are cached at construction.
    """

    grid: Grid
    fields: tuple[GridField, ...]
    drift: GridField | None = None

    def __post_init__(self) -> None:
        for f in self.fields:
            if f.grid != self.grid:
                raise NoiseError("mode field lives on a different grid")
        if self.drift is not None and self.drift.grid != self.grid:
            raise NoiseError("drift field lives on a different grid")

    @property
    def channel_count(self) -> int:
        return len(self.fields)

    @cached_property
    def sup_norms(self) -> tuple[float, ...]:
        return tuple(float(np.max(np.abs(f.values))) for f in self.fields)

    @cached_property
    def multiplier_bounds(self) -> tuple[float, ...]:
        return tuple(multiplier_norm_bound(f) for f in self.fields)

    @cached_property
    def drift_sup(self) -> float:
        return 0.0 if self.drift is None else float(np.max(np.abs(self.drift.values)))

    @cached_property
    def drift_multiplier_bound(self) -> float:
        return 0.0 if self.drift is None else multiplier_norm_bound(self.drift)

    @cached_property
    def sup_square_sum(self) -> float:
        """sum_i sup|e_i|^2, the exponent driver of the second-moment bound."""
        return float(sum(s * s for s in self.sup_norms))

    @cached_property
    def _mode_matrix(self) -> np.ndarray:
        if not self.fields:
            return np.zeros((0, self.grid.point_count))
        return np.stack([f.values for f in self.fields])

    def increment_values(self, w: NoiseRealization, k: int) -> np.ndarray:
        """Node values of the field increment sum_i e_i dW^i_k + e_0 dt."""
        if w.channel_count != self.channel_count:
            raise NoiseError(
                f"noise has {w.channel_count} channels, mode set has {self.channel_count}"
            )
        if not 0 <= k < w.step_count:
            raise NoiseError(f"step index {k} out of range [0, {w.step_count})")
        out = np.zeros(self.grid.point_count)
        if self.fields:
            out += self._mode_matrix.T @ w.increments[k]
        if self.drift is not None:
            out += self.drift.values * w.dt
        return out

    def eval_modes_at(self, x: np.ndarray) -> np.ndarray:
        """Stochastic mode values at off-grid positions, shape (N, len(x))."""
        if not self.fields:
            return np.zeros((0, np.asarray(x).shape[0]))
        return np.stack([interp_values(self.grid, f.values, x) for f in self.fields])

    def eval_drift_at(self, x: np.ndarray) -> np.ndarray:
        if self.drift is None:
            return np.zeros(np.asarray(x).shape[0])
        return interp_values(self.grid, self.drift.values, x)


def noise_increment_field(modes: ModeSet, w: NoiseRealization, k: int) -> GridField:
    """The field increment sum_i e_i(.) dW^i_k + e_0(.) dt over step k."""
    return GridField(modes.grid, modes.increment_values(w, k))


def mode_field(grid: Grid, name: str, amplitude: float = 1.0, **params) -> GridField:
    """Built-in mode shapes: constant, gaussian_bump, tanh, sine."""
    x = grid.nodes
    if name == "constant":
        vals = np.ones_like(x)
    elif name == "gaussian_bump":
        center = params.pop("center", 0.0)
        width = params.pop("width", 1.0)
        vals = np.exp(-0.5 * ((x - center) / width) ** 2)
    elif name == "tanh":
        scale = params.pop("scale", 1.0)
        vals = np.tanh(x / scale)
    elif name == "sine":
        cycles = params.pop("cycles", 1)
        vals = np.sin(np.pi * cycles * x / grid.half_width)
    else:
        raise NoiseError(f"unknown mode shape {name!r}")
    if params:
        raise NoiseError(f"unused parameters for mode {name!r}: {sorted(params)}")
    return GridField(grid, amplitude * vals)


MODE_CATALOG = ("constant", "gaussian_bump", "tanh", "sine")


@dataclass(frozen=True)
class DoleansWeight:
    """Strictly positive stochastic exponential weight.

    The accumulated log increment is the state; the value exp(log) is derived,
    which keeps positivity structural.
    """

    log_value: float = 0.0

    @property
    def value(self) -> float:
        return float(np.exp(self.log_value))


def doleans_step(z: DoleansWeight, dm: float, dqv: float) -> DoleansWeight:
    """One discrete stochastic-exponential update z * exp(dm - dqv/2).

    dm is the martingale-plus-drift increment, dqv >= 0 its quadratic
    variation contribution.  Overflow of the value is reported, not hidden.
    """
    if dqv < 0:
        raise NoiseError(f"quadratic variation increment must be nonnegative, got {dqv}")
    log_value = z.log_value + dm - 0.5 * dqv
    if log_value > 700.0:
        warnings.warn(
            f"Doléans weight overflow: accumulated log increment {log_value:.1f}",
            RuntimeWarning,
            stacklevel=2,
        )
    return DoleansWeight(log_value)


def path_line_integral(
    positions: np.ndarray, modes: ModeSet, w: NoiseRealization
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step weight increments along a discretized trajectory.

    positions[k] is the trajectory value at the start of step k (length K).
    Returns (dm, dqv) with dm_k = sum_i e_i(y_k) dW^i_k + e_0(y_k) dt and
    dqv_k = sum_i e_i(y_k)^2 dt, ready to feed doleans_step.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape[0] != w.step_count:
        raise NoiseError(
            f"path length {positions.shape[0]} does not match step count {w.step_count}"
        )
    vals = modes.eval_modes_at(positions)  # (N, K)
    dm = np.zeros(w.step_count)
    dqv = np.zeros(w.step_count)
    if modes.channel_count:
        dm += np.einsum("ik,ki->k", vals, w.increments)
        dqv += (vals * vals).sum(axis=0) * w.dt
    dm += modes.eval_drift_at(positions) * w.dt
    return dm, dqv
