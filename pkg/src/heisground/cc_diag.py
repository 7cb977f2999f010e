"""Concentration-compactness diagnostics for mass-density sequences.

Normalized densities |u|^q / int |u|^q are probed with the concentration
function Q(R) = sup over centers of the gauge-ball mass, dilation-normalized
so the best unit ball holds exactly half the mass, and classified along a
finite sequence into the trichotomy compactness / vanishing / dichotomy.
Ball geometry is the group geometry throughout: the ball around z is
{w : rho(z^-1 w) < R}, which twists in t away from the center.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import AlgorithmError, DomainError
from .grid import Grid3, ScalarField, e_norm_sq, full_mask
from .heis_core import GroupPoint, homogeneous_dimension

__all__ = [
    "MassDensity",
    "ConcentrationProfile",
    "TrichotomyResult",
    "normalize_mass",
    "ball_mass",
    "concentration",
    "concentration_profile",
    "dilation_normalize",
    "classify_sequence",
    "energy_split",
    "cutoff",
    "group_translate_field",
    "dilate_field",
]

_Q_HOM = homogeneous_dimension(1)


@dataclass
class MassDensity:
    """Nonnegative density with unit total mass (after normalization)."""

    field: ScalarField
    total_mass: float

    def __post_init__(self):
        if float(self.field.values.min()) < 0.0:
            raise DomainError("mass density must be nonnegative")


def normalize_mass(u: ScalarField, q: float) -> MassDensity:
    """Density |u|^q / int |u|^q."""
    dens = np.abs(u.values) ** q
    total = float(dens.sum()) * u.grid.cell_volume
    if total <= 0.0:
        raise DomainError("cannot normalize a field with zero L^q mass")
    dens /= total
    f = ScalarField(u.grid, dens, u.mask)
    return MassDensity(field=f, total_mass=float(dens.sum()) * u.grid.cell_volume)


def _gauge_dist_sq4(grid: Grid3, center: GroupPoint):
    """rho(center^-1 w)^4 on all nodes, vectorized."""
    a, b, c = float(center.x[0]), float(center.y[0]), float(center.t)
    xs, ys, ts = grid.coordinate_arrays()
    dx = xs - a
    dy = ys - b
    dt = ts - c - 2.0 * b * xs + 2.0 * a * ys
    r2 = dx * dx + dy * dy
    return r2 * r2 + dt * dt


def _candidate_centers(grid: Grid3, stride: int):
    xs = grid.axis_coords(0)[::stride]
    ys = grid.axis_coords(1)[::stride]
    ts = grid.axis_coords(2)[::stride]
    return xs, ys, ts


def _padded_t_cumsum(values: np.ndarray) -> np.ndarray:
    csum = np.cumsum(values, axis=2)
    return np.concatenate([np.zeros(values.shape[:2] + (1,)), csum], axis=2)


def _ball_masses_xy(grid, padded_csum, R, a, b, t_centers):
    """Ball masses for one (a, b) and many t-centers at once.

    The gauge-ball condition rho(z^-1 w) < R restricted to the column at
    (x, y) is the t-interval |t - c - 2b(x-a) + 2a(y-b)| < s with
    s = (R^4 - r2^2)^(1/2); interval sums come from a t-axis cumulative
    sum, so each center costs O(N_x N_y) instead of a full-grid sweep.
    """
    xs = grid.axis_coords(0)
    ys = grid.axis_coords(1)
    ht = grid.spacing[2]
    t0 = grid.corner[2]
    nt = grid.shape[2]
    dx = xs - a
    dy = ys - b
    r2 = dx[:, None] ** 2 + dy[None, :] ** 2
    s = np.sqrt(np.maximum(R**4 - r2 * r2, 0.0))
    shift = 2.0 * b * dx[:, None] - 2.0 * a * dy[None, :]
    # node t_l = t0 + (l + 1/2) ht lies in (c + shift - s, c + shift + s)
    base = (shift[:, :, None] + np.asarray(t_centers)[None, None, :] - t0) / ht - 0.5
    half = s[:, :, None] / ht
    lo = np.ceil(base - half).astype(np.int64)
    hi = np.ceil(base + half).astype(np.int64)
    np.clip(lo, 0, nt, out=lo)
    np.clip(hi, 0, nt, out=hi)
    np.maximum(hi, lo, out=hi)
    col = np.take_along_axis(padded_csum, hi, axis=2) - np.take_along_axis(
        padded_csum, lo, axis=2
    )
    return col.sum(axis=(0, 1)) * grid.cell_volume


def ball_mass(density: MassDensity, R: float, center: GroupPoint) -> float:
    """Mass of the gauge ball B_R(center)."""
    if R <= 0:
        raise DomainError(f"ball radius must be positive, got {R}")
    grid = density.field.grid
    padded = _padded_t_cumsum(density.field.values)
    masses = _ball_masses_xy(
        grid, padded, R, float(center.x[0]), float(center.y[0]), [float(center.t)]
    )
    return float(masses[0])


def concentration(density: MassDensity, R: float, center_stride: int = 2):
    """Max gauge-ball mass over a strided lattice of candidate centers.

    Returns (mass, argmax center).  Stride error is bounded by the mass of
    one cell shell, which is all the classifier needs.
    """
    if R <= 0:
        raise DomainError(f"ball radius must be positive, got {R}")
    grid = density.field.grid
    padded = _padded_t_cumsum(density.field.values)
    best, best_center = -1.0, None
    cxs, cys, cts = _candidate_centers(grid, max(1, center_stride))
    for a in cxs:
        for b in cys:
            masses = _ball_masses_xy(grid, padded, R, float(a), float(b), cts)
            j = int(np.argmax(masses))
            if masses[j] > best:
                best = float(masses[j])
                best_center = GroupPoint.of(float(a), float(b), float(cts[j]))
    return best, best_center


@dataclass
class ConcentrationProfile:
    """Q(R) samples for one density; Q is nondecreasing in R."""

    samples: list = dc_field(default_factory=list)  # (R, Q(R), center)

    def q_at(self, R: float) -> float:
        for r, q, _ in self.samples:
            if r == R:
                return q
        raise KeyError(R)

    def center_at(self, R: float) -> GroupPoint:
        for r, q, c in self.samples:
            if r == R:
                return c
        raise KeyError(R)


def concentration_profile(
    density: MassDensity, R_grid, center_stride: int = 2
) -> ConcentrationProfile:
    prof = ConcentrationProfile()
    for R in R_grid:
        q, c = concentration(density, R, center_stride)
        prof.samples.append((float(R), float(q), c))
    return prof


# ---------------------------------------------------------------------------
# Field resampling: group translations and dilations
# ---------------------------------------------------------------------------


def _interpolator(u: ScalarField) -> RegularGridInterpolator:
    return RegularGridInterpolator(
        (u.grid.axis_coords(0), u.grid.axis_coords(1), u.grid.axis_coords(2)),
        u.values,
        bounds_error=False,
        fill_value=0.0,
    )


def group_translate_field(u: ScalarField, z0: GroupPoint) -> ScalarField:
    """Resample w -> u(z0 * w) by trilinear interpolation."""
    a, b, c = float(z0.x[0]), float(z0.y[0]), float(z0.t)
    xs, ys, ts = u.grid.coordinate_arrays()
    px = np.broadcast_to(xs + a, u.grid.shape)
    py = np.broadcast_to(ys + b, u.grid.shape)
    pt = np.broadcast_to(ts + c + 2.0 * (b * xs - a * ys), u.grid.shape)
    pts = np.stack([px.ravel(), py.ravel(), pt.ravel()], axis=1)
    vals = _interpolator(u)(pts).reshape(u.grid.shape)
    return ScalarField(u.grid, vals, full_mask(u.grid))


def dilate_field(u: ScalarField, lam: float, q: float) -> ScalarField:
    """nu(z) = lam^(Q/q) u(delta_lam z); preserves the L^q mass exactly in
    the continuum (lam^-Q Jacobian of the dilations)."""
    if lam <= 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    xs, ys, ts = u.grid.coordinate_arrays()
    px = np.broadcast_to(lam * xs, u.grid.shape)
    py = np.broadcast_to(lam * ys, u.grid.shape)
    pt = np.broadcast_to(lam * lam * ts, u.grid.shape)
    pts = np.stack([px.ravel(), py.ravel(), pt.ravel()], axis=1)
    vals = lam ** (_Q_HOM / q) * _interpolator(u)(pts).reshape(u.grid.shape)
    return ScalarField(u.grid, vals, full_mask(u.grid))


def _lq_mass(u: ScalarField, q: float) -> float:
    return float((np.abs(u.values) ** q).sum()) * u.grid.cell_volume


def dilation_normalize(
    u: ScalarField,
    q: float,
    center_stride: int = 2,
    mass_tol: float = 1e-3,
    max_bisect: int = 60,
):
    """Rescale and recenter so the best unit gauge ball holds half the mass.

    Bisection on lam for nu = lam^(Q/q) u o delta_lam until the sup-center
    unit-ball mass of |nu|^q is 1/2 (+- mass_tol), then a group translation
    moves the maximizing center to the origin.  Returns (nu, R_m = 1/lam).
    """
    total = _lq_mass(u, q)
    if abs(total - 1.0) > 1e-6:
        raise DomainError(f"input must satisfy int |u|^q = 1, got {total}")

    def ball_fraction(lam):
        nu = dilate_field(u, lam, q)
        m = _lq_mass(nu, q)
        if m <= 0:
            return 0.0, nu, None
        dens = MassDensity(
            ScalarField(nu.grid, np.abs(nu.values) ** q / m, nu.mask), 1.0
        )
        frac, center = concentration(dens, 1.0, center_stride)
        return frac, nu, center

    lo, hi = 1.0, 1.0
    f_lo, _, _ = ball_fraction(lo)
    f_hi = f_lo
    for _ in range(20):  # bracket: fraction grows with lam
        if f_lo > 0.5:
            lo /= 2.0
            f_lo, _, _ = ball_fraction(lo)
        elif f_hi < 0.5:
            hi *= 2.0
            f_hi, _, _ = ball_fraction(hi)
        else:
            break
    if f_lo > 0.5 or f_hi < 0.5:
        raise AlgorithmError("could not bracket the half-mass dilation in the box")
    lam, frac, nu, center = hi, f_hi, None, None
    for _ in range(max_bisect):
        lam = 0.5 * (lo + hi)
        frac, nu, center = ball_fraction(lam)
        if abs(frac - 0.5) <= mass_tol:
            break
        if frac < 0.5:
            lo = lam
        else:
            hi = lam
    if nu is None or abs(frac - 0.5) > mass_tol:
        raise AlgorithmError("half-mass bisection did not converge")
    nu = group_translate_field(nu, center)
    m = _lq_mass(nu, q)
    if m <= 0:
        raise AlgorithmError("mass lost during recentering")
    nu = nu.with_values(nu.values / m ** (1.0 / q))

    # The recentering resample perturbs the ball mass, so refine the scale
    # against the origin-centered ball of the actual output field.
    origin = GroupPoint.of(0.0, 0.0, 0.0)

    def origin_fraction(s):
        w = dilate_field(nu, s, q)
        m_w = _lq_mass(w, q)
        if m_w <= 0:
            return 0.0, None
        w = w.with_values(w.values / m_w ** (1.0 / q))
        dens = MassDensity(
            ScalarField(w.grid, np.abs(w.values) ** q, w.mask), 1.0
        )
        return ball_mass(dens, 1.0, origin), w

    s_lo, s_hi = 1.0, 1.0
    f_mid, w_mid = origin_fraction(1.0)
    for _ in range(20):
        if f_mid > 0.5:
            s_lo /= 2.0
            f_mid, _ = origin_fraction(s_lo)
            if f_mid <= 0.5:
                break
        elif f_mid < 0.5:
            s_hi *= 2.0
            f_mid, _ = origin_fraction(s_hi)
            if f_mid >= 0.5:
                break
        else:
            break
    s = 1.0
    for _ in range(max_bisect):
        s = 0.5 * (s_lo + s_hi)
        f_mid, w_mid = origin_fraction(s)
        if abs(f_mid - 0.5) <= mass_tol:
            break
        if f_mid < 0.5:
            s_lo = s
        else:
            s_hi = s
    if w_mid is None or abs(f_mid - 0.5) > mass_tol:
        raise AlgorithmError("origin-ball refinement did not converge")
    return w_mid, 1.0 / (lam * s)


# ---------------------------------------------------------------------------
# Trichotomy classification
# ---------------------------------------------------------------------------


@dataclass
class TrichotomyResult:
    verdict: str  # compactness | vanishing | dichotomy | inconclusive
    witness_centers: list
    witness_radius: Optional[float]
    split_mass: Optional[float]
    eps: float
    profiles: list = dc_field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness_radius": self.witness_radius,
            "split_mass": self.split_mass,
            "eps": self.eps,
            "witness_centers": [
                {"x": float(c.x[0]), "y": float(c.y[0]), "t": float(c.t)}
                for c in self.witness_centers
            ],
            "profiles": [
                [[r, q] for r, q, _ in prof.samples] for prof in self.profiles
            ],
        }


def _second_cluster(density: MassDensity, R: float, z1: GroupPoint, stride: int):
    """Best ball mass over centers, excluding nodes within B_2R(z1)."""
    grid = density.field.grid
    keep = _gauge_dist_sq4(grid, z1) >= (2.0 * R) ** 4
    vals = np.where(keep, density.field.values, 0.0)
    trimmed = MassDensity(ScalarField(grid, vals, full_mask(grid)), 1.0)
    return concentration(trimmed, R, stride)


def classify_sequence(
    densities,
    eps: float,
    R_grid,
    center_stride: int = 2,
    tail: int = 3,
) -> TrichotomyResult:
    """Finite-sequence verdict: compactness / vanishing / dichotomy.

    Rules (diverging separation is surrogate on a finite sequence:
    strictly increasing across the last `tail` elements and exceeding 4R):
      vanishing    — every R in R_grid captures < eps of the last density;
      compactness  — some R keeps >= 1 - eps for the whole tail (recentered);
      dichotomy    — some R where the tail mass plateaus at alpha strictly
                     between eps and 1 - eps, with a second separated
                     carrier whose distance to the first diverges.
    """
    densities = list(densities)
    if len(densities) < tail:
        raise DomainError(f"need at least {tail} densities, got {len(densities)}")
    R_grid = sorted(float(r) for r in R_grid)
    profiles = [
        concentration_profile(d, R_grid, center_stride) for d in densities
    ]
    tail_profiles = profiles[-tail:]
    tail_densities = densities[-tail:]

    result_kwargs = dict(eps=eps, profiles=profiles)

    # Vanishing: no ball of any probe radius retains mass at the end.
    if all(tail_profiles[-1].q_at(R) < eps for R in R_grid):
        return TrichotomyResult(
            verdict="vanishing",
            witness_centers=[],
            witness_radius=None,
            split_mass=None,
            **result_kwargs,
        )

    # Compactness: some R keeps nearly all mass for every tail index.
    for R in R_grid:
        if all(prof.q_at(R) >= 1.0 - eps for prof in tail_profiles):
            return TrichotomyResult(
                verdict="compactness",
                witness_centers=[prof.center_at(R) for prof in tail_profiles],
                witness_radius=R,
                split_mass=None,
                **result_kwargs,
            )

    # Dichotomy: plateau strictly between eps and 1 - eps plus a second
    # carrier separating from the first.
    from .heis_core import gauge, group_inverse, group_mul

    for R in R_grid:
        qs = [prof.q_at(R) for prof in tail_profiles]
        alpha = float(np.mean(qs))
        if not (eps < alpha < 1.0 - eps):
            continue
        if max(qs) - min(qs) > 0.05:
            continue
        seps = []
        second_ok = True
        for prof, dens in zip(tail_profiles, tail_densities):
            z1 = prof.center_at(R)
            m2, z2 = _second_cluster(dens, R, z1, center_stride)
            if m2 < eps:
                second_ok = False
                break
            seps.append(gauge(group_mul(group_inverse(z1), z2)))
        if not second_ok:
            continue
        increasing = all(b > a for a, b in zip(seps[:-1], seps[1:]))
        if increasing and seps[-1] > 4.0 * R:
            return TrichotomyResult(
                verdict="dichotomy",
                witness_centers=[prof.center_at(R) for prof in tail_profiles],
                witness_radius=R,
                split_mass=alpha,
                **result_kwargs,
            )

    return TrichotomyResult(
        verdict="inconclusive",
        witness_centers=[],
        witness_radius=None,
        split_mass=None,
        **result_kwargs,
    )


# ---------------------------------------------------------------------------
# Cutoff energy splitting
# ---------------------------------------------------------------------------


def cutoff(r: float, grid: Grid3) -> ScalarField:
    """C^1 smoothstep in the gauge: 1 on B_r, 0 outside B_2r."""
    if r <= 0:
        raise DomainError(f"cutoff radius must be positive, got {r}")
    rho = grid.gauge_array()
    s = np.clip((2.0 * r - rho) / r, 0.0, 1.0)
    phi = s * s * (3.0 - 2.0 * s)
    return ScalarField(grid, np.broadcast_to(phi, grid.shape).copy(), full_mask(grid))


def energy_split(u: ScalarField, r: float, p: float):
    """Cutoff splitting defect and annulus L^(p+1) mass at radius r.

    Returns (| ||phi u||^2 + ||(1-phi) u||^2 - ||u||^2 |,
             int_{B_2r \\ B_r} |u|^(p+1)).
    """
    rho = u.grid.gauge_array()
    if r > float(rho.max()):
        raise DomainError(f"r = {r} exceeds the box gauge radius {rho.max():.3g}")
    phi = cutoff(r, u.grid)
    inner_part = u.with_values(phi.values * u.values)
    outer_part = u.with_values((1.0 - phi.values) * u.values)
    defect = abs(e_norm_sq(inner_part) + e_norm_sq(outer_part) - e_norm_sq(u))
    ann = (rho >= r) & (rho < 2.0 * r)
    annulus_mass = float(
        (np.abs(u.values[ann]) ** (p + 1.0)).sum()
    ) * u.grid.cell_volume
    return defect, annulus_mass
