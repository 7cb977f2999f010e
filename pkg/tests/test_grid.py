"""Grids, masks, discrete operators, quadrature and norms."""

import numpy as np
import pytest
from scipy.ndimage import binary_erosion

from heisground.errors import ConfigurationError, DomainError
from heisground.grid import (
    Grid3,
    ScalarField,
    apply_Xh,
    apply_Yh,
    ball_mask,
    build_ball_grid,
    e_norm_sq,
    embedding_ratio,
    energy_and_sublaplacian,
    inner,
    integrate,
    l2_norm,
    lq_norm,
    sublaplacian_values,
    zero_extend,
)


def deep_interior(mask, cells=2):
    return binary_erosion(mask, iterations=cells)


class TestGridConstruction:
    def test_box_extents(self):
        grid, mask = build_ball_grid(1.0, 16)
        xs = grid.axis_coords(0)
        ts = grid.axis_coords(2)
        assert xs[0] == pytest.approx(-1.0 + grid.spacing[0] / 2)
        assert ts[0] > -1.0 and ts[-1] < 1.0
        center = tuple(n // 2 for n in grid.shape)
        assert mask[center]

    def test_mask_nesting(self):
        grid, _ = build_ball_grid(2.0, 16)
        m1 = ball_mask(grid, 1.0)
        m2 = ball_mask(grid, 2.0)
        assert m1.sum() < m2.sum()
        assert np.all(m2 | ~m1)

    def test_volume_fraction_stabilizes(self):
        fracs = []
        for n in (24, 48):
            grid, mask = build_ball_grid(1.0, n)
            fracs.append(mask.mean())
        assert abs(fracs[1] - fracs[0]) / fracs[0] < 0.05

    def test_rejects_small_grid(self):
        with pytest.raises(ConfigurationError):
            build_ball_grid(1.0, 4)
        with pytest.raises(DomainError):
            build_ball_grid(-1.0, 16)


class TestOperators:
    def test_zero_field(self):
        grid, mask = build_ball_grid(2.0, 12)
        u = ScalarField(grid, np.zeros(grid.shape), mask)
        assert np.all(apply_Xh(u).values == 0.0)
        assert np.all(apply_Yh(u).values == 0.0)
        assert np.all(sublaplacian_values(u) == 0.0)

    def test_X_of_linear(self):
        grid, mask = build_ball_grid(2.0, 16)
        xs, _, _ = grid.coordinate_arrays()
        u = ScalarField(grid, np.broadcast_to(xs, grid.shape).copy(), mask)
        gx = apply_Xh(u).values
        deep = deep_interior(mask, 2)
        assert np.allclose(gx[deep], 1.0, atol=1e-12)

    def test_X_of_t_is_2y(self):
        grid, mask = build_ball_grid(2.0, 16)
        _, ys, ts = grid.coordinate_arrays()
        u = ScalarField(grid, np.broadcast_to(ts, grid.shape).copy(), mask)
        gx = apply_Xh(u).values
        target = np.broadcast_to(2.0 * ys, grid.shape)
        deep = deep_interior(mask, 2)
        assert np.allclose(gx[deep], target[deep], atol=1e-10)

    def test_sublaplacian_of_horizontal_square(self):
        grid, mask = build_ball_grid(2.0, 20)
        xs, ys, _ = grid.coordinate_arrays()
        u = ScalarField(grid, np.broadcast_to(xs**2 + ys**2, grid.shape).copy(), mask)
        lap = sublaplacian_values(u)
        deep = deep_interior(mask, 2)
        assert np.allclose(lap[deep], 4.0, atol=1e-9)

    def test_sublaplacian_of_t_vanishes(self):
        grid, mask = build_ball_grid(2.0, 20)
        _, _, ts = grid.coordinate_arrays()
        u = ScalarField(grid, np.broadcast_to(ts, grid.shape).copy(), mask)
        lap = sublaplacian_values(u)
        deep = deep_interior(mask, 2)
        assert np.allclose(lap[deep], 0.0, atol=1e-9)

    def test_convergence_under_halving(self):
        # deep-interior error vs analytic oracle shrinks roughly 4x
        def max_err(n):
            grid, mask = build_ball_grid(2.0, n)
            xs, ys, ts = grid.coordinate_arrays()
            a, b = 1.0, 0.25
            f = np.exp(-(xs**2 + ys**2) - b * ts**2)
            u = ScalarField(grid, f, mask)
            num = sublaplacian_values(u)
            ana = (
                (-2 * a + 4 * a * a * xs**2)
                + (-2 * a + 4 * a * a * ys**2)
                + 4 * (xs**2 + ys**2) * (-2 * b + 4 * b * b * ts**2)
            ) * f
            deep = np.broadcast_to(grid.gauge_array() < 1.2, num.shape)
            return np.abs(num - ana)[deep].max()

        e1, e2 = max_err(16), max_err(32)
        assert 2.5 < e1 / e2 < 5.5

    def test_summation_by_parts_exact(self):
        rng = np.random.default_rng(12)
        grid, mask = build_ball_grid(1.5, 12)
        u = ScalarField(grid, rng.standard_normal(grid.shape), mask)
        quad = inner(ScalarField(grid, -sublaplacian_values(u), mask), u)
        gx, gy = apply_Xh(u), apply_Yh(u)
        direct = inner(gx, gx) + inner(gy, gy)
        assert quad == pytest.approx(direct, rel=1e-12)

    def test_energy_and_sublaplacian_consistent(self):
        rng = np.random.default_rng(13)
        grid, mask = build_ball_grid(1.5, 12)
        u = ScalarField(grid, rng.standard_normal(grid.shape), mask)
        nsq, lap = energy_and_sublaplacian(u)
        assert nsq == pytest.approx(e_norm_sq(u), rel=1e-13)
        assert np.allclose(lap, sublaplacian_values(u), atol=1e-12)


class TestQuadrature:
    def test_zero_norms(self):
        grid, mask = build_ball_grid(1.0, 12)
        u = ScalarField(grid, np.zeros(grid.shape), mask)
        assert integrate(u) == 0.0
        assert l2_norm(u) == 0.0

    def test_plateau_integral(self):
        grid, mask = build_ball_grid(1.0, 12)
        u = ScalarField(grid, np.ones(grid.shape), mask)
        assert integrate(u) == pytest.approx(mask.sum() * grid.cell_volume, rel=1e-13)

    def test_gaussian_l2_closed_form(self):
        grid, mask = build_ball_grid(3.0, 40)
        xs, ys, ts = grid.coordinate_arrays()
        u = ScalarField(
            grid, np.exp(-(xs**2 + ys**2 + ts**2)), np.ones(grid.shape, dtype=bool)
        )
        # int exp(-2(x^2+y^2+t^2)) = (pi/2)^(3/2)
        assert l2_norm(u) == pytest.approx((np.pi / 2.0) ** 0.75, rel=5e-3)

    def test_lq_rejects_bad_exponent(self):
        grid, mask = build_ball_grid(1.0, 12)
        u = ScalarField(grid, np.ones(grid.shape), mask)
        with pytest.raises(DomainError):
            lq_norm(u, 0.5)


class TestEmbeddingAndExtension:
    def test_embedding_ratio_scale_invariant(self):
        rng = np.random.default_rng(14)
        grid, mask = build_ball_grid(2.0, 12)
        u = ScalarField(grid, rng.standard_normal(grid.shape), mask)
        r1 = embedding_ratio(u, 3.0)
        r2 = embedding_ratio(u.with_values(7.5 * u.values), 3.0)
        assert r1 > 0
        assert r1 == pytest.approx(r2, rel=1e-12)

    def test_embedding_ratio_domain_errors(self):
        grid, mask = build_ball_grid(2.0, 12)
        u = ScalarField(grid, np.ones(grid.shape), mask)
        with pytest.raises(DomainError):
            embedding_ratio(u, 10.0)
        z = ScalarField(grid, np.zeros(grid.shape), mask)
        with pytest.raises(DomainError):
            embedding_ratio(z, 3.0)

    def test_zero_extension_preserves_norms(self):
        rng = np.random.default_rng(15)
        grid, _ = build_ball_grid(2.0, 16)
        m1 = ball_mask(grid, 1.0)
        m2 = ball_mask(grid, 2.0)
        u = ScalarField(grid, rng.standard_normal(grid.shape), m1)
        v = zero_extend(u, m2)
        assert l2_norm(u) == l2_norm(v)
        assert e_norm_sq(u) == e_norm_sq(v)

    def test_zero_extension_rejects_shrinking(self):
        grid, _ = build_ball_grid(2.0, 16)
        m1 = ball_mask(grid, 1.0)
        m2 = ball_mask(grid, 2.0)
        u = ScalarField(grid, np.ones(grid.shape), m2)
        with pytest.raises(DomainError):
            zero_extend(u, m1)


def test_dirichlet_invariant():
    grid, mask = build_ball_grid(1.5, 12)
    u = ScalarField(grid, np.ones(grid.shape), mask)
    assert np.all(u.values[~mask] == 0.0)
    with pytest.raises(ConfigurationError):
        ScalarField(grid, np.full(grid.shape, np.inf), mask)
