"""Closed-form reference profiles: these are the oracles the solvers are held
against, so they get verified independently (finite differences, quadrature,
moment identities) before anything trusts them."""

import numpy as np
import pytest

from spmlab.grid import integral, make_grid
from spmlab.reference import (
    InitialCondition,
    InitialConditionError,
    barenblatt_density,
    barenblatt_support_radius,
    heat_density,
    heat_variance,
    stochastic_exponential_path,
)


class TestHeatProfile:
    def test_unit_mass(self):
        x = np.linspace(-30, 30, 20001)
        dens = heat_density(x, 0.7, 0.25)
        assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-10)

    def test_satisfies_half_laplacian_equation(self):
        # finite-difference audit of d/dt u = (1/2) u'' at scattered points
        x = np.linspace(-2, 2, 9)
        t, dt, dx = 0.4, 1e-6, 1e-4
        du_dt = (heat_density(x, t + dt, 0.25) - heat_density(x, t - dt, 0.25)) / (2 * dt)
        d2u = (
            heat_density(x + dx, t, 0.25)
            - 2 * heat_density(x, t, 0.25)
            + heat_density(x - dx, t, 0.25)
        ) / dx ** 2
        assert np.allclose(du_dt, 0.5 * d2u, rtol=1e-4, atol=1e-8)

    def test_variance_growth(self):
        assert heat_variance(0.5, 0.25) == 0.75


class TestBarenblattProfile:
    def test_unit_mass(self):
        for t in (0.1, 0.5, 2.0):
            r = barenblatt_support_radius(t)
            x = np.linspace(-r, r, 40001)
            assert np.trapezoid(barenblatt_density(x, t), x) == pytest.approx(1.0, abs=1e-6)

    def test_satisfies_quadratic_diffusion_equation(self):
        # finite-difference audit of d/dt u = (1/2) (u^2)'' inside the support
        t, dt, dx = 0.5, 1e-7, 1e-5
        r = barenblatt_support_radius(t)
        x = np.linspace(-0.7 * r, 0.7 * r, 11)
        du_dt = (barenblatt_density(x, t + dt) - barenblatt_density(x, t - dt)) / (2 * dt)
        flux = lambda y: barenblatt_density(y, t) ** 2
        d2f = (flux(x + dx) - 2 * flux(x) + flux(x - dx)) / dx ** 2
        assert np.allclose(du_dt, 0.5 * d2f, rtol=1e-3, atol=1e-6)

    def test_compact_support(self):
        t = 0.3
        r = barenblatt_support_radius(t)
        assert barenblatt_density(np.array([1.01 * r, -1.2 * r]), t).max() == 0.0
        assert barenblatt_density(np.array([0.0]), t)[0] > 0.0

    def test_mass_parameter(self):
        r = barenblatt_support_radius(0.4, mass=2.0)
        x = np.linspace(-r, r, 40001)
        assert np.trapezoid(barenblatt_density(x, 0.4, mass=2.0), x) == pytest.approx(2.0, abs=1e-5)

    def test_rejects_non_positive_time(self):
        with pytest.raises(ValueError):
            barenblatt_density(np.zeros(3), 0.0)


class TestStochasticExponentialPath:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(8)
        dt = 0.01
        inc = rng.normal(0, np.sqrt(dt), 50)
        path = stochastic_exponential_path(inc, dt, 0.7)
        w = np.concatenate([[0.0], np.cumsum(inc)])
        t = dt * np.arange(51)
        assert np.allclose(path, np.exp(0.7 * w - 0.245 * t), rtol=1e-13)
        assert path[0] == 1.0


class TestInitialConditions:
    @pytest.mark.parametrize("kind,params", [
        ("gaussian", {"variance": 0.25}),
        ("uniform", {"low": -1.0, "high": 1.0}),
        ("point", {"center": 0.0}),
        ("barenblatt", {"time": 0.1}),
    ])
    def test_density_unit_mass(self, kind, params):
        g = make_grid(6, 256)
        dens = InitialCondition(kind, params).density(g)
        assert integral(dens) == pytest.approx(1.0, abs=1e-12)
        assert np.min(dens.values) >= 0.0

    def test_gaussian_inverse_cdf(self):
        ic = InitialCondition("gaussian", {"variance": 4.0, "center": 1.0})
        qs = ic.inverse_cdf(np.array([0.5, 0.84134474606854293]))
        assert qs[0] == pytest.approx(1.0, abs=1e-12)
        assert qs[1] == pytest.approx(3.0, abs=1e-9)

    def test_point_sample_is_constant(self):
        ic = InitialCondition("point", {"center": 0.3})
        assert np.all(ic.sample(500, seed=4) == 0.3)

    def test_uniform_sample_moments(self):
        ic = InitialCondition("uniform", {"low": -1.0, "high": 1.0})
        ys = ic.sample(100000, seed=12)
        se = ys.std(ddof=1) / np.sqrt(ys.size)
        assert abs(ys.mean()) <= 4.0 * se

    def test_barenblatt_sample_against_profile(self):
        t0 = 0.1
        ic = InitialCondition("barenblatt", {"time": t0})
        ys = ic.sample(200000, seed=3)
        r = barenblatt_support_radius(t0)
        assert np.max(np.abs(ys)) <= r + 1e-9
        hist, edges = np.histogram(ys, bins=60, range=(-r, r), density=True)
        centers = 0.5 * (edges[1:] + edges[:-1])
        l1 = np.sum(np.abs(hist - barenblatt_density(centers, t0))) * (edges[1] - edges[0])
        assert l1 <= 0.02

    def test_sampling_reproducible(self):
        ic = InitialCondition("gaussian", {"variance": 1.0})
        assert np.array_equal(ic.sample(1000, seed=9), ic.sample(1000, seed=9))

    def test_unknown_kind_rejected(self):
        with pytest.raises(InitialConditionError):
            InitialCondition("cauchy", {})
