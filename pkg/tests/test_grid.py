"""Grid toolbox: Laplacian resolvent, negative-order norms, mollification and
the multiplier bound."""

import numpy as np
import pytest

from spmlab.grid import (
    Grid,
    GridError,
    GridField,
    Mollifier,
    MollifierError,
    bump_field,
    helmholtz_inverse,
    integral,
    laplacian_values,
    make_grid,
    mollify,
    multiplier_norm_bound,
    sobolev_norm,
)
from spmlab.noise import MODE_CATALOG, mode_field


def laplacian_eigenvalue(grid, wavenumber):
    # analytic eigenvalue of the three-point second difference on a uniform grid
    return (2.0 - 2.0 * np.cos(wavenumber * grid.spacing)) / grid.spacing ** 2


def dense_helmholtz_matrix(grid):
    """Independent dense assembly of I - D2 for the oracle solve."""
    n = grid.point_count
    c = 1.0 / grid.spacing ** 2
    a = np.zeros((n, n))
    for j in range(n):
        a[j, j] = 1.0 + 2.0 * c
        if grid.boundary == "periodic":
            a[j, (j - 1) % n] -= c
            a[j, (j + 1) % n] -= c
        else:
            if j > 0:
                a[j, j - 1] -= c
            else:
                a[j, j] -= c
            if j < n - 1:
                a[j, j + 1] -= c
            else:
                a[j, j] -= c
    return a


class TestMakeGrid:
    def test_spacing(self):
        assert make_grid(10, 512, "periodic").spacing == 0.0390625

    def test_node_layout(self):
        g = make_grid(1, 8, "neumann")
        assert np.allclose(g.nodes, [-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75])

    def test_rejects_bad_parameters(self):
        with pytest.raises(GridError):
            make_grid(0, 16)
        with pytest.raises(GridError):
            make_grid(1, 7)
        with pytest.raises(GridError):
            Grid(1.0, 16, "dirichlet")

    def test_field_validation(self):
        g = make_grid(1, 8)
        with pytest.raises(GridError):
            GridField(g, np.zeros(9))
        with pytest.raises(GridError):
            GridField(g, [np.nan] * 8)


class TestHelmholtzInverse:
    def test_zero(self):
        g = make_grid(5, 32)
        out = helmholtz_inverse(GridField(g, np.zeros(32)))
        assert np.all(out.values == 0.0)

    def test_constant_periodic(self):
        g = make_grid(5, 32)
        out = helmholtz_inverse(GridField(g, np.full(32, 3.7)))
        assert np.allclose(out.values, 3.7, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("boundary", ["periodic", "neumann"])
    def test_matches_dense_solve(self, boundary):
        g = make_grid(2, 64, boundary)
        rng = np.random.default_rng(11)
        a = dense_helmholtz_matrix(g)
        for _ in range(5):
            f = rng.standard_normal(64)
            expected = np.linalg.solve(a, f)
            got = helmholtz_inverse(GridField(g, f)).values
            assert np.allclose(got, expected, rtol=0, atol=1e-11)

    def test_sine_eigenmode(self):
        g = make_grid(10, 64)
        k = 3 * np.pi / g.half_width
        f = np.sin(k * g.nodes)
        expected = f / (1.0 + laplacian_eigenvalue(g, k))
        got = helmholtz_inverse(GridField(g, f)).values
        assert np.allclose(got, expected, atol=1e-12)

    @pytest.mark.parametrize("boundary", ["periodic", "neumann"])
    def test_residual_bound(self, boundary):
        g = make_grid(10, 512, boundary)
        rng = np.random.default_rng(3)
        f = rng.standard_normal(512)
        got = helmholtz_inverse(GridField(g, f)).values
        residual = got - laplacian_values(g, got) - f
        assert np.max(np.abs(residual)) <= 1e-10 * np.max(np.abs(f))

    @pytest.mark.parametrize("boundary", ["periodic", "neumann"])
    def test_positive_definite(self, boundary):
        g = make_grid(4, 128, boundary)
        rng = np.random.default_rng(7)
        for _ in range(20):
            f = rng.standard_normal(128)
            quad = np.dot(f, helmholtz_inverse(GridField(g, f)).values)
            assert quad > 0.0


class TestSobolevNorm:
    def test_zero_field(self):
        g = make_grid(5, 32)
        z = GridField(g, np.zeros(32))
        assert all(sobolev_norm(z, s) == 0.0 for s in (0, -1, -2))

    @pytest.mark.parametrize("boundary", ["periodic", "neumann"])
    def test_norm_ordering(self, boundary):
        g = make_grid(5, 64, boundary)
        rng = np.random.default_rng(21)
        for _ in range(50):
            f = GridField(g, rng.standard_normal(64))
            assert sobolev_norm(f, -2) <= sobolev_norm(f, -1) <= sobolev_norm(f, 0)

    def test_sine_eigen_value(self):
        g = make_grid(10, 128)
        k = 2 * np.pi / g.half_width
        f = GridField(g, np.sin(k * g.nodes))
        lam = laplacian_eigenvalue(g, k)
        assert sobolev_norm(f, -1) == pytest.approx(sobolev_norm(f, 0) / np.sqrt(1 + lam), rel=1e-12)
        assert sobolev_norm(f, -2) == pytest.approx(sobolev_norm(f, 0) / (1 + lam), rel=1e-12)

    def test_rejects_unsupported_order(self):
        g = make_grid(5, 32)
        with pytest.raises(GridError):
            sobolev_norm(GridField(g, np.ones(32)), 1)


class TestMollify:
    def test_constant_preserved(self):
        g = make_grid(5, 64)
        out = mollify(GridField(g, np.full(64, 2.5)), Mollifier(0.5))
        assert np.allclose(out.values, 2.5, atol=1e-13)

    def test_point_mass_profile(self):
        g = make_grid(5, 64)
        spike = np.zeros(64)
        spike[30] = 1.0 / g.spacing
        out = mollify(GridField(g, spike), Mollifier(0.5))
        assert integral(out) == pytest.approx(1.0, abs=1e-12)
        assert np.argmax(out.values) == 30
        assert np.all(out.values >= 0.0)

    def test_mass_conserved_periodic(self):
        g = make_grid(5, 64)
        rng = np.random.default_rng(2)
        f = GridField(g, rng.random(64))
        out = mollify(f, Mollifier(0.8))
        assert integral(out) == pytest.approx(integral(f), rel=1e-10)

    def test_refinement_to_identity(self):
        # smoothing scale shrinking toward the spacing: L2 distance drops below 1e-3
        from spmlab.reference import gaussian_density

        g = make_grid(10, 512)
        f = GridField(g, gaussian_density(g.nodes, 1.0))
        distances = []
        for mult in (8, 4, 2):
            out = mollify(f, Mollifier(mult * g.spacing))
            distances.append(sobolev_norm(GridField(g, out.values - f.values), 0))
        assert distances[0] > distances[1] > distances[2]
        assert distances[-1] < 1e-3

    def test_commutes_with_constant_shift(self):
        g = make_grid(5, 64)
        rng = np.random.default_rng(4)
        f = rng.random(64)
        m = Mollifier(0.4)
        shifted = mollify(GridField(g, f + 1.5), m).values
        assert np.allclose(shifted, mollify(GridField(g, f), m).values + 1.5, atol=1e-12)

    def test_kernel_weight_sum(self):
        g = make_grid(5, 64)
        _, w = Mollifier(0.7).discrete_weights(g)
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_support_overflow_errors(self):
        g = make_grid(1, 16, "neumann")
        with pytest.raises(MollifierError):
            mollify(GridField(g, np.ones(16)), Mollifier(3.0))
        with pytest.raises(MollifierError):
            Mollifier(0.0)


class TestMultiplierBound:
    def test_zero(self):
        g = make_grid(5, 64)
        assert multiplier_norm_bound(GridField(g, np.zeros(64))) == 0.0

    def test_constant(self):
        g = make_grid(5, 64)
        assert multiplier_norm_bound(GridField(g, np.full(64, -1.3))) == pytest.approx(
            np.sqrt(2.0) * 1.3, rel=1e-12
        )

    def test_tanh_dominates_operator_ratio(self):
        g = make_grid(10, 256)
        e = GridField(g, np.tanh(g.nodes))
        bound = multiplier_norm_bound(e)
        rng = np.random.default_rng(17)
        for _ in range(100):
            f = GridField(g, rng.standard_normal(256))
            ratio = sobolev_norm(GridField(g, e.values * f.values), -1) / sobolev_norm(f, -1)
            assert ratio <= bound

    def test_catalog_modes_satisfy_inequality(self):
        g = make_grid(10, 256)
        rng = np.random.default_rng(23)
        for name in MODE_CATALOG:
            e = mode_field(g, name, amplitude=0.8)
            bound = multiplier_norm_bound(e)
            for _ in range(25):
                f = GridField(g, rng.standard_normal(256))
                product = GridField(g, e.values * f.values)
                assert sobolev_norm(product, -1) <= bound * sobolev_norm(f, -1)


def test_bump_field_compact_support():
    g = make_grid(10, 128)
    phi = bump_field(g, center=1.0, width=2.0)
    assert phi.values[np.abs(g.nodes - 1.0) >= 2.0].max() == 0.0
    assert phi.values[np.abs(g.nodes - 1.0) < 1.0].min() > 0.0
