"""Closed-form reference solutions and the initial-condition catalog.

These profiles are independent of every solver in the package; they exist so
that grid and particle runs can be checked against exact formulas (Gaussian
heat evolution, the self-similar source solution of the quadratic diffusion,
and the pathwise stochastic-exponential factorisation of the linear case).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.special import ndtri

from .grid import Grid, GridField, Mollifier, mollify
from .noise import PURPOSE_PARTICLE_INIT, counter_uniforms


class InitialConditionError(ValueError):
    """Unsupported initial-condition descriptor."""


def gaussian_density(x, variance: float, center: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * (x - center) ** 2 / variance) / np.sqrt(2.0 * np.pi * variance)


def heat_density(x, t: float, variance0: float, center: float = 0.0) -> np.ndarray:
    """Solution of d/dt u = (1/2) u'' from a Gaussian of variance variance0."""
    return gaussian_density(x, variance0 + t, center)


def heat_variance(t: float, variance0: float) -> float:
    return variance0 + t


# Self-similar source solution of d/dt u = (1/2) d2/dx2 (u^2).  The standard
# profile for d/dt v = d2/dx2 (v^2) is v(tau, x) = tau^(-1/3) (C - x^2 /
# (12 tau^(2/3)))_+ with C fixed by the mass; the half factor is absorbed by
# evaluating it at tau = t/2.

def _barenblatt_constant(mass: float) -> float:
    # integral of (C - y^2/12)_+ dy equals (8 sqrt(3) / 3) C^(3/2)
    return (mass * np.sqrt(3.0) / 8.0) ** (2.0 / 3.0)


def barenblatt_density(x, t: float, mass: float = 1.0) -> np.ndarray:
    """Compactly supported source solution of d/dt u = (1/2) (u^2)'' at time t > 0."""
    if t <= 0:
        raise ValueError(f"profile time must be positive, got {t}")
    tau = 0.5 * t
    x = np.asarray(x, dtype=np.float64)
    c = _barenblatt_constant(mass)
    profile = c - x * x / (12.0 * tau ** (2.0 / 3.0))
    return np.maximum(profile, 0.0) / tau ** (1.0 / 3.0)


def barenblatt_support_radius(t: float, mass: float = 1.0) -> float:
    tau = 0.5 * t
    c = _barenblatt_constant(mass)
    return float(np.sqrt(12.0 * c) * tau ** (1.0 / 3.0))


def stochastic_exponential_path(increments: np.ndarray, dt: float, gain: float) -> np.ndarray:
    """exp(c W_t - c^2 t / 2) along one Brownian channel, at t_k = k dt.

    Exact at the step boundaries because W_{t_k} is the partial sum of the
    realized increments.
    """
    w_path = np.concatenate([[0.0], np.cumsum(increments)])
    times = dt * np.arange(w_path.shape[0])
    return np.exp(gain * w_path - 0.5 * gain * gain * times)


@dataclass(frozen=True)
class InitialCondition:
    """Declarative initial measure: gaussian, uniform, point or barenblatt.

    Supplies both the grid density (point masses are mollified at scale 2h
    before gridding) and the inverse CDF used to seed particle ensembles.
    """

    kind: str
    params: dict = dataclass_field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "uniform", "point", "barenblatt"):
            raise InitialConditionError(f"unsupported initial condition {self.kind!r}")

    def density(self, grid: Grid) -> GridField:
        """Grid projection of the density, renormalised to exact unit mass."""
        x = grid.nodes
        if self.kind == "gaussian":
            v = gaussian_density(x, self.params.get("variance", 1.0), self.params.get("center", 0.0))
        elif self.kind == "uniform":
            lo = self.params.get("low", -1.0)
            hi = self.params.get("high", 1.0)
            v = np.where((x >= lo) & (x < hi), 1.0 / (hi - lo), 0.0)
        elif self.kind == "point":
            center = self.params.get("center", 0.0)
            j = int(np.argmin(np.abs(x - center)))
            spike = np.zeros_like(x)
            spike[j] = 1.0 / grid.spacing
            v = mollify(GridField(grid, spike), Mollifier(2.0 * grid.spacing)).values
        else:
            t0 = self.params.get("time", 0.1)
            mass = self.params.get("mass", 1.0)
            v = barenblatt_density(x, t0, mass)
        return GridField(grid, v / (grid.spacing * v.sum()))

    def inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "gaussian":
            sd = np.sqrt(self.params.get("variance", 1.0))
            return self.params.get("center", 0.0) + sd * ndtri(u)
        if self.kind == "uniform":
            lo = self.params.get("low", -1.0)
            hi = self.params.get("high", 1.0)
            return lo + (hi - lo) * u
        if self.kind == "point":
            return np.full_like(u, self.params.get("center", 0.0))
        t0 = self.params.get("time", 0.1)
        mass = self.params.get("mass", 1.0)
        radius = barenblatt_support_radius(t0, mass)
        xs = np.linspace(-radius, radius, 4001)
        dens = barenblatt_density(xs, t0, mass)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
        cdf /= cdf[-1]
        # strip flat segments so the inverse is well defined
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(u, cdf[keep], xs[keep])

    def sample(self, count: int, seed: int) -> np.ndarray:
        """Reproducible i.i.d. sample via the inverse CDF and a counter stream."""
        u = counter_uniforms(seed, PURPOSE_PARTICLE_INIT, 0, count)
        return self.inverse_cdf(u)
