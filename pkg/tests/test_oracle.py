import math

import numpy as np
import pytest

from conftest import ETA, SHEAR, THICKNESS, material
from core.errors import ConvergenceError, ParameterError, SingularityError
from film.services import dispersion, modal, oracle, params
from film.services.runs import verify_point

SIGMA = -0.05 * SHEAR / ETA


def test_zero_wavenumber_basis_is_linear(silicon):
    basis = oracle.integrate_modes(silicon, 0.0, SIGMA, 200)
    z = basis.z

    np.testing.assert_allclose(basis.states[:, 0, 0].real, z, rtol=1e-12, atol=1e-30)
    np.testing.assert_allclose(basis.states[:, 1, 0].real, 1.0, rtol=1e-14)
    np.testing.assert_allclose(basis.states[:, 2, 1].real, z / basis.beta, rtol=1e-12, atol=1e-40)
    np.testing.assert_allclose(basis.states[:, 3, 1].real, 1.0, rtol=1e-14)
    assert basis.reorthogonalizations == 0


def test_too_few_steps(silicon):
    with pytest.raises(ParameterError):
        oracle.integrate_modes(silicon, 1e8, SIGMA, 99)
    with pytest.raises(ParameterError):
        oracle.shoot_growth_rate(silicon, 1e8, 10)


def test_zero_growth_rate_is_singular(silicon):
    with pytest.raises(SingularityError):
        oracle.integrate_modes(silicon, 1e8, 0.0)


def test_system_matrix_is_regular_when_incompressible():
    A = oracle.system_matrix(2 * ETA, math.inf, 1e8)
    assert np.all(np.isfinite(A))
    assert A[2, 3] == 0


def test_basis_reproduces_closed_form_field():
    p, k = params.from_dimensionless(0.5, 0.2, 0.1, 10.0)
    sigma = params.growth_rate_dimensional(p, -0.01)
    field = modal.velocity_field(modal.modal_coefficients(p, k, sigma), p, k)
    basis = oracle.integrate_modes(p, k, sigma, 2000)

    mid = basis.n_steps // 2
    fit = np.array([basis.states[mid, 0, :], basis.states[mid, 2, :]])
    weights = np.linalg.solve(fit, [field.u_tilde(basis.z[mid]), field.w_tilde(basis.z[mid])])
    u_h, w_h = basis.surface[0] @ weights, basis.surface[2] @ weights

    assert abs(u_h - field.u_tilde(p.thickness)) <= 1e-8 * abs(field.u_tilde(p.thickness))
    assert abs(w_h - field.w_tilde(p.thickness)) <= 1e-8 * abs(field.w_tilde(p.thickness))


def test_rk4_converges_at_fourth_order():
    p, k = params.from_dimensionless(2.0, 0.2, 0.1, 10.0)
    sigma = params.growth_rate_dimensional(p, -0.05)
    surfaces = [oracle.integrate_modes(p, k, sigma, n, keep_states=False).surface for n in (100, 200, 400)]
    coarse = np.linalg.norm(surfaces[0] - surfaces[1])
    fine = np.linalg.norm(surfaces[1] - surfaces[2])
    assert 3.7 <= math.log2(coarse / fine) <= 4.3


def test_segment_and_stepwise_paths_agree():
    p, k = params.from_dimensionless(1.0, 0.2, 0.1, 10.0)
    sigma = params.growth_rate_dimensional(p, -0.05)
    stepped = oracle.integrate_modes(p, k, sigma, 800, keep_states=True)
    jumped = oracle.integrate_modes(p, k, sigma, 800, keep_states=False)
    np.testing.assert_allclose(stepped.surface, jumped.surface, rtol=1e-10)
    np.testing.assert_array_equal(stepped.states[-1], stepped.surface)


def test_reference_point_agrees_with_dispersion_relation():
    p, k = params.from_dimensionless(0.5, 0.2, 0.1, 10.0)
    analytic = params.growth_rate_dimensional(p, dispersion.solve_growth_rate(params.to_dimensionless(p, k)).R)
    shot = oracle.shoot_growth_rate(p, k)

    assert shot.converged
    assert shot.sigma < 0
    assert shot.sigma == pytest.approx(analytic, rel=1e-6)
    assert shot.k == k
    assert shot.basis_mismatch <= 1e12


def test_root_beside_singular_coefficient_is_found():
    # the root sits at alpha/beta = -1.472, in the scan cell that ends on 4 alpha + 6 beta = 0
    p, k = params.from_dimensionless(10.0, 1.0, 1.0, 1.0)
    shot = oracle.shoot_growth_rate(p, k)
    R = shot.sigma * p.eta / p.shear_modulus

    assert shot.converged
    assert R == pytest.approx(-0.423944, rel=1e-5)
    assert shot.sigma == pytest.approx(
        params.growth_rate_dimensional(p, dispersion.solve_growth_rate(params.to_dimensionless(p, k)).R), rel=1e-6
    )


def test_profile_satisfies_boundary_conditions():
    p, k = params.from_dimensionless(0.5, 0.2, 0.1, 10.0)
    shot = oracle.shoot_growth_rate(p, k)
    z, u, w = shot.profile.T

    assert shot.profile.shape == (2001, 3)
    assert z[0] == 0 and z[-1].real == pytest.approx(p.thickness, rel=1e-15)
    assert u[0] == 0 and w[0] == 0
    assert w[-1].real == pytest.approx(shot.sigma, rel=1e-8)


def test_viscous_capillary_limit():
    p = material(shear_modulus=math.inf, bulk_modulus=math.inf, flux=0.0)
    k = 0.5 / THICKNESS
    shot = oracle.shoot_growth_rate(p, k)
    assert shot.sigma == pytest.approx(dispersion.orchard_rate(p, k), rel=1e-6)


def test_viscous_forced_limit(viscous_silicon):
    k = 0.5 / THICKNESS
    shot = oracle.shoot_growth_rate(viscous_silicon, k)
    assert shot.sigma == pytest.approx(dispersion.viscous_growth(viscous_silicon, k), rel=1e-6)


def test_unforced_film_has_no_root():
    with pytest.raises(ConvergenceError) as e:
        oracle.shoot_growth_rate(material(flux=0.0, surface_energy=0.0), 1e8)
    assert e.value.diagnostics["unforced"]


def test_shooting_needs_positive_wavenumber(silicon):
    with pytest.raises(ParameterError):
        oracle.shoot_growth_rate(silicon, 0.0)


def test_verify_point_flags_coarse_grids():
    row = verify_point(0.5, 0.2, 0.1, 10.0, n_steps=10)
    assert row["status"].startswith("shooting")
    assert math.isinf(row["deviation"])


@pytest.mark.slow
@pytest.mark.parametrize("Gamma", [1.0, 10.0, 1e4])
@pytest.mark.parametrize("C", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("D", [0.01, 0.2, 1.0])
@pytest.mark.parametrize("Q", [0.2, 0.5, 2.0])
def test_dual_path_grid(Q, D, C, Gamma):
    row = verify_point(Q, D, C, Gamma)
    assert row["status"] == "ok"
    assert row["deviation"] <= 1e-6
    assert row["sigma_shoot"] < 0
