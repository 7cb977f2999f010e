"""Concentration-compactness diagnostics."""

import numpy as np
import pytest

from heisground.cc_diag import (
    ball_mass,
    classify_sequence,
    concentration,
    concentration_profile,
    cutoff,
    dilate_field,
    dilation_normalize,
    energy_split,
    group_translate_field,
    normalize_mass,
)
from heisground.errors import DomainError
from heisground.grid import Grid3, ScalarField, build_ball_grid, full_mask
from heisground.heis_core import GroupPoint

Q_EXP = 3.0  # L^q exponent used throughout (p + 1 with p = 2)


def flat_grid(k=3.5, n=20):
    """Box grid with t-spacing equal to h_x (fine enough for ball masses)."""
    hx = 2.0 * k / n
    nt = int(round(2.0 * k * k / hx))
    grid = Grid3((n, n, nt), (hx, hx, hx), (-k, -k, -k * k))
    return grid, full_mask(grid)


def gauge_bump(grid, cx, cy, ct, w):
    """exp(-d(z, c)^2 / w^2) in the gauge distance."""
    from heisground.cc_diag import _gauge_dist_sq4

    d4 = _gauge_dist_sq4(grid, GroupPoint.of(cx, cy, ct))
    return np.exp(-np.sqrt(d4 + 1e-300) / w**2)


@pytest.fixture(scope="module")
def box():
    return flat_grid()


@pytest.fixture(scope="module")
def centered_density(box):
    grid, mask = box
    u = ScalarField(grid, gauge_bump(grid, 0.0, 0.0, 0.0, 0.6), mask)
    return normalize_mass(u, Q_EXP)


class TestNormalizeMass:
    def test_unit_total(self, box):
        grid, mask = box
        rng = np.random.default_rng(31)
        u = ScalarField(grid, rng.standard_normal(grid.shape), mask)
        d = normalize_mass(u, Q_EXP)
        assert d.total_mass == pytest.approx(1.0, abs=1e-10)
        assert d.field.values.min() >= 0.0

    def test_scale_invariant(self, box):
        grid, mask = box
        u = ScalarField(grid, gauge_bump(grid, 0.5, 0.0, 0.0, 0.5), mask)
        d1 = normalize_mass(u, Q_EXP)
        d2 = normalize_mass(u.with_values(2.0 * u.values), Q_EXP)
        assert np.allclose(d1.field.values, d2.field.values, atol=1e-13)

    def test_rejects_zero(self, box):
        grid, mask = box
        with pytest.raises(DomainError):
            normalize_mass(ScalarField(grid, np.zeros(grid.shape), mask), Q_EXP)


class TestConcentration:
    def test_whole_box_captured(self, centered_density):
        m = ball_mass(centered_density, 50.0, GroupPoint.of(0.0, 0.0, 0.0))
        assert m == pytest.approx(1.0, abs=1e-10)

    def test_monotone_in_R(self, centered_density):
        prof = concentration_profile(centered_density, [0.5, 1.0, 1.5, 2.0, 3.0])
        qs = [q for _, q, _ in prof.samples]
        assert all(b >= a - 1e-12 for a, b in zip(qs, qs[1:]))
        assert all(0.0 <= q <= 1.0 + 1e-12 for q in qs)

    def test_centered_bump_mostly_inside(self, centered_density):
        q, center = concentration(centered_density, 1.8)
        assert q > 0.99
        # argmax center stays near the origin
        assert abs(center.x[0]) < 0.5 and abs(center.y[0]) < 0.5

    def test_translation_moves_witness(self, box):
        grid, mask = box
        u = ScalarField(grid, gauge_bump(grid, -1.0, 0.5, 0.0, 0.5), mask)
        d = normalize_mass(u, Q_EXP)
        q, center = concentration(d, 1.5)
        assert q > 0.9
        assert center.x[0] == pytest.approx(-1.0, abs=0.5)


class TestDilation:
    def test_scaling_exponent_exact(self, box):
        # compare against the analytically dilated field at the nodes;
        # only interpolation error remains, so the lam prefactor is pinned
        grid, mask = box
        xs, ys, ts = grid.coordinate_arrays()
        u = ScalarField(grid, np.exp(-(xs**2 + ys**2) - ts**2 / 4.0), mask)
        for lam in (0.8, 1.25):
            v = dilate_field(u, lam, Q_EXP)
            expected = lam ** (4.0 / Q_EXP) * np.exp(
                -(lam**2) * (xs**2 + ys**2) - lam**4 * ts**2 / 4.0
            )
            assert np.max(np.abs(v.values - expected)) < 0.05

    def test_mass_preservation_improves_with_resolution(self):
        # trilinear resampling biases the q-mass low; the bias is pure
        # interpolation error and shrinks under refinement
        def rel_err(n, lam):
            grid, mask = flat_grid(3.5, n)
            xs, ys, ts = grid.coordinate_arrays()
            u = ScalarField(grid, np.exp(-(xs**2 + ys**2) - ts**2 / 4.0), mask)
            total = float((np.abs(u.values) ** Q_EXP).sum()) * grid.cell_volume
            v = dilate_field(u, lam, Q_EXP)
            tv = float((np.abs(v.values) ** Q_EXP).sum()) * grid.cell_volume
            return abs(tv - total) / total

        for lam in (0.8, 1.25):
            coarse = rel_err(20, lam)
            fine = rel_err(40, lam)
            assert fine < coarse
            assert fine < 0.03

    def test_translation_preserves_profile(self, box):
        grid, mask = box
        u = ScalarField(grid, gauge_bump(grid, 0.0, 0.0, 0.0, 0.5), mask)
        v = group_translate_field(u, GroupPoint.of(0.6, -0.4, 0.3))
        du = normalize_mass(u, Q_EXP)
        dv = normalize_mass(v, Q_EXP)
        for R in (1.0, 1.5):
            qu, _ = concentration(du, R)
            qv, _ = concentration(dv, R)
            assert qu == pytest.approx(qv, abs=0.05)

    def test_dilation_normalize(self, box):
        grid, mask = box
        u = ScalarField(grid, gauge_bump(grid, 0.3, -0.2, 0.2, 0.9), mask)
        total = float((np.abs(u.values) ** Q_EXP).sum()) * grid.cell_volume
        u = u.with_values(u.values / total ** (1.0 / Q_EXP))
        nu, r_m = dilation_normalize(u, Q_EXP)
        mass = float((np.abs(nu.values) ** Q_EXP).sum()) * nu.grid.cell_volume
        assert mass == pytest.approx(1.0, abs=1e-6)
        assert r_m > 0.0
        dens = normalize_mass(nu, Q_EXP)
        at_origin = ball_mass(dens, 1.0, GroupPoint.of(0.0, 0.0, 0.0))
        assert at_origin == pytest.approx(0.5, abs=2e-3)

    def test_dilation_normalize_rejects_unnormalized(self, box):
        grid, mask = box
        u = ScalarField(grid, gauge_bump(grid, 0.0, 0.0, 0.0, 0.5), mask)
        with pytest.raises(DomainError):
            dilation_normalize(u, Q_EXP)


class TestClassifier:
    def test_translating_bump_is_compactness(self, box):
        grid, mask = box
        dens = [
            normalize_mass(
                ScalarField(grid, gauge_bump(grid, -1.2 + 0.4 * m, 0.2, 0.3, 0.6), mask),
                Q_EXP,
            )
            for m in range(6)
        ]
        r = classify_sequence(dens, eps=0.05, R_grid=[0.5, 1.0, 2.0])
        assert r.verdict == "compactness"
        assert r.witness_radius is not None
        assert len(r.witness_centers) >= 1

    def test_flattening_is_vanishing(self, box):
        grid, mask = box
        base = ScalarField(grid, gauge_bump(grid, 0.0, 0.0, 0.0, 0.5), mask)
        dens = [
            normalize_mass(dilate_field(base, 1.0 / (1.0 + 0.7 * m), Q_EXP), Q_EXP)
            for m in range(1, 7)
        ]
        r = classify_sequence(dens, eps=0.05, R_grid=[0.25, 0.5, 1.0])
        assert r.verdict == "vanishing"

    def test_separating_pair_is_dichotomy(self, box):
        grid, mask = box
        dens = []
        for m in range(6):
            s = 0.7 + 0.5 * m
            vals = gauge_bump(grid, -s, 0.0, 0.0, 0.5) + gauge_bump(grid, s, 0.0, 0.0, 0.5)
            dens.append(normalize_mass(ScalarField(grid, vals, mask), Q_EXP))
        r = classify_sequence(dens, eps=0.1, R_grid=[0.5, 1.0, 2.0])
        assert r.verdict == "dichotomy"
        assert r.split_mass == pytest.approx(0.5, abs=0.1)

    def test_result_serializes(self, box):
        import json

        grid, mask = box
        dens = [
            normalize_mass(
                ScalarField(grid, gauge_bump(grid, 0.0, 0.0, 0.0, 0.5), mask), Q_EXP
            )
            for _ in range(3)
        ]
        r = classify_sequence(dens, eps=0.05, R_grid=[0.5, 1.0])
        json.dumps(r.as_dict())


class TestCutoffSplit:
    def test_cutoff_profile(self):
        grid, _ = build_ball_grid(4.0, 24)
        phi = cutoff(1.0, grid)
        rho = np.broadcast_to(grid.gauge_array(), grid.shape)
        assert np.all(phi.values[rho < 0.99] == 1.0)
        assert np.all(phi.values[rho > 2.01] == 0.0)
        mid = np.abs(rho - 1.5) < 0.02
        if mid.any():
            assert np.allclose(phi.values[mid], 0.5, atol=0.1)
        assert phi.values.min() >= 0.0 and phi.values.max() <= 1.0

    def test_inner_supported_field(self):
        grid, mask = build_ball_grid(4.0, 24)
        rho = grid.gauge_array()
        u = ScalarField(grid, np.exp(-8.0 * np.broadcast_to(rho, grid.shape) ** 2), mask)
        defect, ann = energy_split(u, 2.0, 2.0)
        assert defect < 1e-8
        assert ann < 1e-8

    def test_defect_shrinks_with_radius(self):
        grid, mask = build_ball_grid(4.0, 24)
        rho = np.broadcast_to(grid.gauge_array(), grid.shape)
        u = ScalarField(grid, np.exp(-2.0 * rho), mask)
        d1, a1 = energy_split(u, 1.0, 2.0)
        d2, a2 = energy_split(u, 2.0, 2.0)
        assert d2 < d1
        assert a2 < a1

    def test_rejects_huge_radius(self):
        grid, mask = build_ball_grid(2.0, 12)
        u = ScalarField(grid, np.ones(grid.shape), mask)
        with pytest.raises(DomainError):
            energy_split(u, 100.0, 2.0)
