"""Noise drivers: reproducibility, increment statistics, mode fields,
Doléans-exponential arithmetic and the path line integral."""

import numpy as np
import pytest

from spmlab.grid import GridField, make_grid
from spmlab.noise import (
    DoleansWeight,
    ModeSet,
    NoiseError,
    coarsen_noise,
    doleans_step,
    mode_field,
    noise_increment_field,
    path_line_integral,
    sample_noise,
)
from spmlab.particles import weight_paths


class TestSampleNoise:
    def test_bit_identical_regeneration(self):
        a = sample_noise(42, 2, 1e-3, 500)
        b = sample_noise(42, 2, 1e-3, 500)
        assert np.array_equal(a.increments, b.increments)

    def test_zero_channels_accepted(self):
        w = sample_noise(7, 0, 1e-3, 10)
        assert w.increments.shape == (10, 0)

    def test_channels_differ(self):
        w = sample_noise(42, 2, 1e-3, 100)
        assert not np.array_equal(w.increments[:, 0], w.increments[:, 1])

    def test_seed_changes_table(self):
        assert not np.array_equal(
            sample_noise(1, 1, 1e-3, 64).increments,
            sample_noise(2, 1, 1e-3, 64).increments,
        )

    def test_increment_statistics(self):
        w = sample_noise(2024, 1, 1e-3, 100000)
        scaled = w.increments[:, 0] / np.sqrt(w.dt)
        assert 0.99 <= scaled.var(ddof=1) <= 1.01
        assert abs(scaled.mean()) <= 5.0 / np.sqrt(scaled.size)

    def test_rejects_bad_parameters(self):
        with pytest.raises(NoiseError):
            sample_noise(1, 1, 0.0, 10)
        with pytest.raises(NoiseError):
            sample_noise(1, 1, 1e-3, 0)

    def test_npz_round_trip(self, tmp_path):
        w = sample_noise(5, 2, 1e-3, 50)
        w.save_npz(tmp_path / "w.npz")
        back = w.load_npz(tmp_path / "w.npz")
        assert np.array_equal(back.increments, w.increments)
        assert back.dt == w.dt and back.seed == w.seed

    def test_csv_round_trip_exact(self, tmp_path):
        w = sample_noise(5, 2, 1e-3, 20)
        w.save_csv(tmp_path / "w.csv")
        back = w.load_csv(tmp_path / "w.csv")
        assert np.array_equal(back.increments, w.increments)

    def test_coarsen_preserves_path(self):
        w = sample_noise(9, 1, 5e-4, 100)
        coarse = coarsen_noise(w, 2)
        assert coarse.step_count == 50 and coarse.dt == pytest.approx(1e-3)
        assert np.allclose(coarse.path(0)[-1], w.path(0)[-1])
        with pytest.raises(NoiseError):
            coarsen_noise(w, 3)


class TestIncrementField:
    def test_zero_modes(self):
        g = make_grid(5, 16)
        modes = ModeSet(g, ())
        w = sample_noise(1, 0, 1e-3, 4)
        out = noise_increment_field(modes, w, 0)
        assert np.all(out.values == 0.0)

    def test_constant_mode(self):
        g = make_grid(5, 16)
        c = 0.7
        modes = ModeSet(g, (mode_field(g, "constant", amplitude=c),))
        w = sample_noise(3, 1, 1e-3, 8)
        out = noise_increment_field(modes, w, 5)
        assert np.allclose(out.values, c * w.increments[5, 0])

    def test_generic_modes_match_hand_summation(self):
        g = make_grid(1, 8)
        e1 = GridField(g, np.linspace(-1, 1, 8))
        e2 = GridField(g, np.cos(g.nodes))
        drift = GridField(g, 0.3 * np.ones(8))
        modes = ModeSet(g, (e1, e2), drift)
        w = sample_noise(11, 2, 1e-3, 6)
        k = 2
        expected = np.array([
            e1.values[j] * w.increments[k, 0]
            + e2.values[j] * w.increments[k, 1]
            + drift.values[j] * w.dt
            for j in range(8)
        ])
        assert np.allclose(noise_increment_field(modes, w, k).values, expected, atol=1e-15)

    def test_index_out_of_range(self):
        g = make_grid(5, 16)
        modes = ModeSet(g, (mode_field(g, "constant"),))
        w = sample_noise(1, 1, 1e-3, 4)
        with pytest.raises(NoiseError):
            noise_increment_field(modes, w, 4)

    def test_mode_catalog_validation(self):
        g = make_grid(5, 16)
        with pytest.raises(NoiseError):
            mode_field(g, "sawtooth")
        with pytest.raises(NoiseError):
            mode_field(g, "tanh", wrong=1.0)


class TestDoleansStep:
    def test_unit_exponential(self):
        assert doleans_step(DoleansWeight(), 0.0, 0.0).value == 1.0

    def test_closed_form(self):
        c = 0.8
        out = doleans_step(DoleansWeight(), c, c * c)
        assert out.value == pytest.approx(np.exp(c - c * c / 2.0), rel=1e-14)

    def test_positivity_under_random_increments(self):
        rng = np.random.default_rng(12)
        z = DoleansWeight()
        for _ in range(500):
            z = doleans_step(z, rng.normal(0, 0.3), abs(rng.normal(0, 0.05)))
            assert z.value > 0.0

    def test_rejects_negative_quadratic_variation(self):
        with pytest.raises(NoiseError):
            doleans_step(DoleansWeight(), 0.0, -1e-9)

    def test_overflow_reported(self):
        with pytest.warns(RuntimeWarning, match="overflow"):
            doleans_step(DoleansWeight(log_value=650.0), 100.0, 0.0)

    def test_martingale_mean_monte_carlo(self):
        # constant mode of size 0.5: terminal weight mean stays at 1
        g = make_grid(5, 32)
        modes = ModeSet(g, (mode_field(g, "constant", amplitude=0.5),))
        _, m, _ = weight_paths(modes, 1.0, 1.0 / 16, 100000, noise_seed=77)
        terminal = m[:, -1]
        se = terminal.std(ddof=1) / np.sqrt(terminal.size)
        assert abs(terminal.mean() - 1.0) <= 3.0 * se


class TestVariationBound:
    def test_drift_channel_bound(self):
        # with a drift channel the weight mean obeys exp(t sup|drift|)
        g = make_grid(5, 64)
        drift = mode_field(g, "tanh", amplitude=0.4)
        modes = ModeSet(g, (mode_field(g, "gaussian_bump", amplitude=0.5),), drift)
        times, _, z = weight_paths(modes, 0.5, 1e-2, 12000, noise_seed=31)
        mean = z.mean(axis=0)
        se = z.std(axis=0, ddof=1) / np.sqrt(z.shape[0])
        bound = np.exp(times * 0.4)
        assert np.all(mean - 4.0 * se <= bound)


class TestPathLineIntegral:
    def test_zero_modes(self):
        g = make_grid(5, 16)
        modes = ModeSet(g, ())
        w = sample_noise(1, 0, 1e-3, 5)
        dm, dqv = path_line_integral(np.zeros(5), modes, w)
        assert np.all(dm == 0.0) and np.all(dqv == 0.0)

    def test_constant_mode_frozen_path(self):
        g = make_grid(5, 16)
        c = 0.6
        modes = ModeSet(g, (mode_field(g, "constant", amplitude=c),))
        w = sample_noise(4, 1, 1e-3, 10)
        dm, dqv = path_line_integral(np.full(10, 1.7), modes, w)
        assert np.allclose(dm, c * w.increments[:, 0])
        assert np.allclose(dqv, c * c * w.dt)

    def test_generic_mode_hand_computation(self):
        g = make_grid(2, 16)
        e1 = GridField(g, np.sin(np.pi * g.nodes / 2.0))
        drift = GridField(g, np.full(16, 0.2))
        modes = ModeSet(g, (e1,), drift)
        w = sample_noise(6, 1, 0.05, 4)
        path = np.array([-1.0, -0.3, 0.4, 1.1])
        dm, dqv = path_line_integral(path, modes, w)
        from spmlab.grid import interp_values

        for k in range(4):
            e_at = interp_values(g, e1.values, np.array([path[k]]))[0]
            d_at = interp_values(g, drift.values, np.array([path[k]]))[0]
            assert dm[k] == pytest.approx(e_at * w.increments[k, 0] + d_at * w.dt, rel=1e-12)
            assert dqv[k] == pytest.approx(e_at * e_at * w.dt, rel=1e-12)

    def test_length_mismatch(self):
        g = make_grid(5, 16)
        modes = ModeSet(g, ())
        w = sample_noise(1, 0, 1e-3, 5)
        with pytest.raises(NoiseError):
            path_line_integral(np.zeros(4), modes, w)


class TestSecondMomentInvariant:
    def test_constant_mode_bound(self):
        from spmlab.particles import second_moment_check

        g = make_grid(5, 32)
        modes = ModeSet(g, (mode_field(g, "constant", amplitude=0.5),))
        times, m, _ = weight_paths(modes, 1.0, 1.0 / 32, 10000, noise_seed=55)
        out = second_moment_check(times, m, modes)
        assert out["passed"]
        # exact second moment of the exponential is exp(c^2 t), well inside
        assert out["second_moment"][-1] == pytest.approx(np.exp(0.25), rel=0.1)
