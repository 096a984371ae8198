import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings as hyp_settings, strategies as st

from conftest import THICKNESS, material
from core.errors import ConvergenceError, ParameterError, SingularityError, ViscousLimitError
from core.settings import settings
from film.models import DimensionlessState
from film.services import dispersion, params


def state(Q, D, C, Gamma=math.inf, R=0.0) -> DimensionlessState:
    return params.dimensionless_state(Q, D, C, Gamma, R)


def mp_lhs(R, Q, D, C, Gamma):
    mpmath.mp.dps = 50
    R, Q, D, C = (mpmath.mpf(x) for x in (R, Q, D, C))
    t = 2 * R / (Gamma * (1 + R))
    U = (t + 6) / (7 * t + 6)
    V = (4 * t + 6) / (7 * t + 6)
    sh2 = mpmath.sinh(Q) ** 2
    return (
        2 * R / (1 + R) * (V**2 + U**2 * Q**2 + U * sh2)
        + D * (U**2 * Q**2 - (V - U) * sh2)
        + C * V * Q * (mpmath.sinh(2 * Q) - 2 * U * Q)
    )


def thick_film_root(Q, D, C, Gamma):
    """
    Root of smallest |R| once sech^2 Q is negligible: the cleared relation
    reduces to (7t + 6) (Gamma t^2/6 + (Gamma - D/2 + 4CQ/3) t + 2CQ).
    """
    a, b, c = Gamma / 6.0, Gamma - D / 2.0 + 4.0 * C * Q / 3.0, 2.0 * C * Q
    t = -2.0 * c / (b + math.sqrt(b * b - 4.0 * a * c))
    return Gamma * t / (2.0 - Gamma * t)


def test_lhs_matches_high_precision_evaluation():
    value = dispersion.dispersion_lhs(-1e-4, state(0.5, 0.02, 0.008, 50.0))
    assert value == pytest.approx(float(mp_lhs(-1e-4, 0.5, 0.02, 0.008, 50)), rel=1e-12)


def test_lhs_at_zero_growth():
    Q, D, C = 0.7, 0.3, 0.05
    expected = D * Q * Q + C * Q * (math.sinh(2 * Q) - 2 * Q)
    assert dispersion.dispersion_lhs(0.0, state(Q, D, C, 10.0)) == pytest.approx(expected, rel=1e-14)
    assert dispersion.dispersion_lhs(0.0, state(Q, 0.0, 0.0)) == 0.0


def test_lhs_pole():
    with pytest.raises(SingularityError):
        dispersion.dispersion_lhs(-1.0, state(0.5, 0.1, 0.1, 10.0))


def test_lhs_accepts_complex_and_arrays():
    s = state(0.5, 0.1, 0.1, 10.0)
    assert isinstance(dispersion.dispersion_lhs(complex(-0.01, 1e-3), s), complex)
    values = dispersion.dispersion_lhs(np.array([-0.5, -0.01, 0.0, 0.2]), s)
    assert values.shape == (4,)
    assert values[2] == pytest.approx(dispersion.dispersion_lhs(0.0, s), rel=1e-15)


@pytest.mark.parametrize("R", [-0.9, -0.3, -0.01, 1e-3, 0.7, 4.0])
def test_cleared_form_is_positive_multiple(R):
    s = state(1.3, 0.4, 0.2, 3.0)
    t = 2 * R / (s.Gamma * (1 + R))
    factor = ((7 * t + 6) / 6) ** 2 / math.cosh(s.Q) ** 2
    scale = sum(abs(term) for term in dispersion.cleared_terms(R, s))
    assert dispersion.cleared_lhs(R, s) == pytest.approx(dispersion.dispersion_lhs(R, s) * factor, abs=1e-12 * scale)


@pytest.mark.parametrize("R", [-0.9, -0.2, 0.05, 2.0])
def test_cleared_form_is_cubic_in_t(R):
    s = state(0.8, 0.5, 0.3, 2.0)
    t = 2 * R / (s.Gamma * (1 + R))
    terms = dispersion.cleared_terms(R, s)
    scale = sum(abs(term) for term in terms)
    assert abs(np.polyval(dispersion.cleared_cubic(s), t) - sum(terms)) <= 1e-12 * scale


def test_cleared_gap_branches_agree():
    Q = 349.0
    direct = dispersion.cleared_gap(Q)
    assert direct == pytest.approx(2.0 * math.tanh(Q) - 2.0 * Q / math.cosh(Q) ** 2, rel=1e-14)
    assert dispersion.cleared_gap(500.0) == 2.0


@pytest.mark.parametrize("Q", [0.01, 0.5, 3.0])
def test_unforced_film_is_neutral(Q):
    root = dispersion.solve_growth_rate(state(Q, 0.0, 0.0, 10.0))
    assert root.R == 0.0
    assert root.converged


@pytest.mark.parametrize(
    "point",
    [(0.01, 1.0, 1.0, math.inf), (0.5, 0.2, 0.1, 10.0), (2.0, 1.0, 1.0, 1.0), (20.0, 0.01, 1.0, 1e4), (300.0, 1.0, 0.1, 5.0)],
)
def test_root_meets_tolerances(point):
    s = state(*point)
    root = dispersion.solve_growth_rate(s)

    assert root.converged
    assert -1.0 < root.R < 0.0
    assert not root.unstable
    lo, hi = root.bracket
    assert lo <= root.R <= hi
    assert hi - lo <= settings.BRACKET_TOL * max(1.0, abs(root.R))
    assert abs(root.residual) <= settings.RESIDUAL_RTOL * root.residual_scale / min(1.0, abs(1.0 + root.R))
    assert not dispersion.on_pole(root.R, s)


def test_zero_on_pole_is_skipped():
    root = dispersion.solve_growth_rate(state(10.0, 1.0, 1.0, 1.0))

    assert root.R == pytest.approx(-0.423944, rel=1e-5)
    assert root.converged
    assert root.multiple_roots
    # the cleared relation also vanishes next to 7t + 6 = 0, at R = -0.3
    assert any(lo <= -0.3 <= hi for lo, hi in root.brackets)


@pytest.mark.parametrize("point", [(20.0, 1.0, 1.0, 1.0), (20.0, 0.01, 1.0, 1e4), (50.0, 1.0, 0.1, 5.0), (300.0, 1.0, 0.1, 5.0)])
def test_thick_film_root(point):
    root = dispersion.solve_growth_rate(state(*point))
    assert root.converged
    assert root.R == pytest.approx(thick_film_root(*point), rel=1e-9)


def test_no_real_mode_off_the_pole():
    with pytest.raises(ConvergenceError) as e:
        dispersion.solve_growth_rate(state(20.0, 5.0, 0.01, 3.0))
    [R] = e.value.diagnostics["pole_zeros"]
    assert R == pytest.approx(3.0 * (-6.0 / 7.0) / (2.0 + 3.0 * 6.0 / 7.0), rel=1e-6)


def test_on_pole():
    s = state(10.0, 1.0, 1.0, 2.0)
    t_pole = -6.0 / 7.0
    R_pole = 2.0 * t_pole / (2.0 - 2.0 * t_pole)

    assert dispersion.on_pole(R_pole, s)
    assert not dispersion.on_pole(-0.1, s)
    assert not dispersion.on_pole(R_pole, state(10.0, 1.0, 1.0))


def test_long_wavelength_limit():
    s = state(0.01, 1.0, 1.0)
    R = dispersion.solve_growth_rate(s).R
    approximate = dispersion.long_wavelength_growth(s)

    assert approximate == pytest.approx(-5.0e-5 - 2.0 / 3.0 * 1e-8, rel=1e-14)
    assert R == pytest.approx(approximate, rel=5 * s.Q**2)


def test_long_wavelength_dimensional(silicon):
    k = 1e7
    s = params.to_dimensionless(silicon, k)
    expected = params.growth_rate_dimensional(silicon, dispersion.long_wavelength_growth(s))
    assert dispersion.long_wavelength_growth_dimensional(silicon, k) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("Q", [0.1, 1.0, 5.0, 20.0])
@pytest.mark.parametrize("D, C", [(0.2, 0.1), (1.0, 1e-3), (1e-3, 2.0)])
def test_incompressible_root_is_closed_form(Q, D, C):
    s = state(Q, D, C)
    assert dispersion.solve_growth_rate(s).R == pytest.approx(dispersion.incompressible_growth(s), rel=1e-10)


def test_stiff_bulk_modulus_approaches_viscous_rate():
    p, k = params.from_dimensionless(0.2, 1e-3, 1e-3, 1e8)
    root = dispersion.solve_growth_rate(params.to_dimensionless(p, k))
    sigma = params.growth_rate_dimensional(p, root.R)
    assert sigma == pytest.approx(dispersion.viscous_growth(p, k), rel=1e-4)


def test_viscous_state_is_refused(viscous_silicon):
    with pytest.raises(ViscousLimitError):
        dispersion.solve_growth_rate(params.to_dimensionless(viscous_silicon, 1e8))


def test_zero_wavenumber_is_refused():
    with pytest.raises(ParameterError):
        dispersion.solve_growth_rate(state(0.0, 0.1, 0.1, 10.0))


def test_neutral_boundary_reference_value():
    assert dispersion.neutral_boundary(1.0, 1.0) == pytest.approx(-1.6268604, rel=1e-7)


@pytest.mark.parametrize("Q", [1e-4, 0.01, 0.3, 2.0, 40.0])
def test_neutral_boundary_high_precision(Q):
    mpmath.mp.dps = 50
    q = mpmath.mpf(Q)
    expected = 2 * (1 - mpmath.sinh(2 * q) / (2 * q))
    assert dispersion.neutral_boundary(Q, 1.0) == pytest.approx(float(expected), rel=1e-12)


def test_neutral_boundary_small_q_ratio():
    Q = 1e-4
    assert dispersion.neutral_boundary(Q, 1.0) / Q**2 == pytest.approx(-4.0 / 3.0, abs=1e-6)
    assert dispersion.neutral_boundary(0.0, 1.0) == 0.0


def test_neutral_boundary_is_decreasing():
    Q = np.linspace(0.01, 3.0, 300)
    D_star = dispersion.neutral_boundary(Q, 0.5)
    assert np.all(D_star < 0)
    assert np.all(np.diff(D_star) < 0)


def test_neutral_boundary_without_capillarity():
    values = dispersion.neutral_boundary(np.array([0.0, 0.5, 2.0]), 0.0)
    assert np.all(values == 0.0)
    assert not np.any(np.signbit(values))


@given(Q=st.floats(min_value=1e-6, max_value=50.0), C=st.floats(min_value=1e-6, max_value=10.0))
def test_neutral_boundary_is_negative(Q, C):
    assert dispersion.neutral_boundary(Q, C) < 0


def test_neutral_boundary_rejects_negative_input():
    with pytest.raises(ParameterError):
        dispersion.neutral_boundary(-0.1, 1.0)
    with pytest.raises(ParameterError):
        dispersion.neutral_boundary(0.1, -1.0)


@pytest.mark.parametrize("Q", [0.01, 1.0, 7.0])
def test_orchard_rate_high_precision(Q):
    p = material(flux=0.0)
    k = Q / THICKNESS
    mpmath.mp.dps = 50
    q = mpmath.mpf(Q)
    expected = -(mpmath.mpf(k) * p.surface_energy / (2 * p.eta)) * (mpmath.sinh(2 * q) - 2 * q) / (
        1 + 2 * q**2 + mpmath.cosh(2 * q)
    )
    assert dispersion.orchard_rate(p, k) == pytest.approx(float(expected), rel=1e-12)
    assert dispersion.viscous_growth(p, k) == dispersion.orchard_rate(p, k)


def test_orchard_rate_decreases_with_wavenumber(viscous_silicon):
    k = np.linspace(0.01, 20.0, 400) / THICKNESS
    sigma = dispersion.orchard_rate(viscous_silicon, k)
    assert np.all(sigma < 0)
    assert np.all(np.diff(sigma) < 0)


@pytest.mark.parametrize("Q", [0.05, 0.8, 3.0])
def test_viscous_denominator_identity(Q):
    assert 1 + 2 * Q**2 + math.cosh(2 * Q) == pytest.approx(2 * (1 + Q**2 + math.sinh(Q) ** 2), rel=1e-14)


def test_viscous_growth_edges(viscous_silicon):
    assert dispersion.viscous_growth(viscous_silicon, 0.0) == 0.0
    assert math.isfinite(dispersion.viscous_growth(viscous_silicon, 500.0 / THICKNESS))
    assert dispersion.viscous_growth(material(flux=0.0, surface_energy=0.0), 1e9) == 0.0
    with pytest.raises(ParameterError):
        dispersion.viscous_growth(viscous_silicon, -1.0)


def test_viscous_growth_ignores_moduli(silicon, viscous_silicon):
    k = np.geomspace(1e6, 1e10, 50)
    sigma = dispersion.viscous_growth(viscous_silicon, k)
    assert np.all(sigma < 0)
    np.testing.assert_array_equal(sigma, dispersion.viscous_growth(silicon, k))


@pytest.mark.parametrize("Q", [0.01, 0.05, 0.1, 1.0])
def test_growth_sensitivity_matches_finite_difference(Q):
    s = state(Q, 1.0, 1.0, 10.0)
    R = dispersion.solve_growth_rate(s).R
    slope = dispersion.growth_sensitivity(R, s)

    step = 1e-6
    up = dispersion.solve_growth_rate(s.model_copy(update={"D": 1.0 + step})).R
    down = dispersion.solve_growth_rate(s.model_copy(update={"D": 1.0 - step})).R
    assert slope < 0
    assert slope == pytest.approx((up - down) / (2 * step), rel=1e-4)


def test_growing_mode_below_stability_bound():
    root = dispersion.solve_growth_rate(state(1.0, 10.0, 0.01, 0.1))

    assert root.unstable
    assert root.positive_root is not None and root.positive_root > 0
    assert root.multiple_roots
    assert abs(root.R) <= abs(root.positive_root)


@hyp_settings(max_examples=150, deadline=None)
@given(
    Q=st.floats(min_value=1e-3, max_value=50.0),
    D=st.floats(min_value=1e-4, max_value=10.0),
    C=st.floats(min_value=1e-4, max_value=10.0),
    Gamma=st.floats(min_value=0.1, max_value=1e6),
)
def test_no_growing_mode_above_stability_bound(Q, D, C, Gamma):
    assume(Gamma > D / 2)
    try:
        root = dispersion.solve_growth_rate(state(Q, D, C, Gamma))
    except ConvergenceError as e:
        # the only real zero sat on the U, V pole: no real mode, growing or not
        assert e.diagnostics["pole_zeros"]
        return
    assert root.R < 0
    assert not root.unstable


def test_stability_sweep_is_seeded():
    first = dispersion.stability_sweep(40, seed=7)
    second = dispersion.stability_sweep(40, seed=7)

    assert first == second
    assert first.samples == 40
    assert first.stable + first.unstable + first.failures == 40
    assert first.bound_violations == 0
    assert all(point["Gamma"] <= point["D"] / 2 for point in first.unstable_points)


def test_stability_sweep_above_bound_is_stable():
    summary = dispersion.stability_sweep(60, seed=3, ranges={"Gamma": (25.0, 1e6)})
    assert summary.unstable == 0
    assert summary.failures == 0
    assert summary.max_R < 0


def test_stability_sweep_reports_sampled_ranges():
    summary = dispersion.stability_sweep(5, seed=2, ranges={"Q": (0.1, 1.0)})
    assert summary.ranges == {**dispersion.DEFAULT_SWEEP_RANGES, "Q": (0.1, 1.0)}


@pytest.mark.slow
def test_large_stability_sweep():
    summary = dispersion.stability_sweep(10_000, seed=11)

    assert summary.bound_violations == 0
    assert summary.stable + summary.unstable + summary.failures == summary.samples
    # every failure is a tuple whose only real zero sits on the U, V pole
    assert summary.failures == summary.no_real_mode
    assert summary.failures <= summary.samples // 100
    assert summary.converged == summary.samples - summary.failures


def test_stability_sweep_needs_samples():
    with pytest.raises(ParameterError):
        dispersion.stability_sweep(0)


def test_long_wavelength_error_shrinks_quadratically():
    errors = []
    for Q in (1e-1, 1e-2, 1e-3):
        s = state(Q, 1.0, 1.0)
        R = dispersion.solve_growth_rate(s).R
        errors.append(abs(R - dispersion.long_wavelength_growth(s)) / abs(R))
    for coarse, fine in zip(errors, errors[1:]):
        assert 60 <= coarse / fine <= 160


def test_orchard_value_at_unit_q():
    p = material(flux=0.0)
    k = 1.0 / THICKNESS
    scaled = dispersion.orchard_rate(p, k) * 2 * p.eta / (k * p.surface_energy)
    assert scaled == pytest.approx(-1.6268604 / 6.7621957, rel=1e-7)
    mpmath.mp.dps = 50
    assert scaled == pytest.approx(float(-(mpmath.sinh(2) - 2) / (3 + mpmath.cosh(2))), rel=1e-12)
