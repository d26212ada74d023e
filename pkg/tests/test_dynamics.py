import numpy as np
import pytest

from sllgs import dynamics as dy, magnet as mg, vecmath as vm
from conftest import random_unit


@pytest.fixture
def drive(rng):
    return mg.DriveInput(h_app=[0.2, -0.5, 0.3], i_s=[0.05, 0.02, -0.04])


def test_rate_hand_example():
    # m = x, h = z: precession -m x h = +y, damping -alpha m x (m x h) = +alpha z
    r = dy.llg_rate(np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), np.zeros(3), 0.5)
    np.testing.assert_allclose(r, np.array([0.0, 1.0, 0.5]) / 1.25, atol=1e-16)


def test_drift_tangent(generic_params, drive, rng):
    m = random_unit(rng, 200)
    f = dy.drift(m, generic_params, drive)
    np.testing.assert_allclose(vm.dot(m, f), 0.0, atol=1e-15)


def test_explicit_solves_implicit_form(generic_params, drive, rng):
    m = random_unit(rng, 200)
    h_T = 0.3 * rng.normal(size=(200, 3))
    f = dy.drift(m, generic_params, drive, h_T)
    np.testing.assert_allclose(dy.implicit_form_rhs(m, f, generic_params, drive, h_T), f,
                               atol=1e-14)


def test_drift_jacobian_fd(generic_params, drive, rng):
    m = random_unit(rng)
    J = dy.drift_jacobian(m, generic_params, drive)
    for k, e in enumerate(np.eye(3)):
        col = (dy.drift(m + 1e-6 * e, generic_params, drive, check=False)
               - dy.drift(m - 1e-6 * e, generic_params, drive, check=False)) / 2e-6
        np.testing.assert_allclose(J[:, k], col, atol=1e-8)


def test_diffusion_properties(generic_params, rng):
    m = random_unit(rng, 50)
    g = dy.diffusion(m, generic_params)
    np.testing.assert_allclose(np.einsum('ni,nij->nj', m, g), 0.0, atol=1e-14)
    dw = rng.normal(size=(50, 3))
    np.testing.assert_allclose(np.einsum('nij,nj->ni', g, dw),
                               dy.noise_term(m, generic_params, dw), atol=1e-15)
    # noise term equals the drift response to a thermal field minus the field-free drift
    nu = mg.thermal_nu(generic_params)
    zero = mg.DriveInput()
    diff = (dy.drift(m, generic_params, zero, h_T=nu * dw)
            - dy.drift(m, generic_params, zero))
    np.testing.assert_allclose(diff, dy.noise_term(m, generic_params, dw), atol=1e-14)


def test_diffusion_requires_unit(generic_params):
    with pytest.raises(mg.PreconditionError):
        dy.diffusion([0.5, 0.0, 0.0], generic_params)


def test_implicit_jacobian_fd(generic_params, drive, rng):
    m_n = random_unit(rng)
    m = m_n + 0.05 * rng.normal(size=3)
    ctx = dy.StepContext(0.2, drive, noise_increment=0.3 * rng.normal(size=3))
    J = dy.implicit_jacobian(m, m_n, ctx, generic_params)
    for k, e in enumerate(np.eye(3)):
        col = (dy.implicit_residual(m + 1e-6 * e, m_n, ctx, generic_params)
               - dy.implicit_residual(m - 1e-6 * e, m_n, ctx, generic_params)) / 2e-6
        np.testing.assert_allclose(J[:, k], col, atol=1e-8)


def test_implicit_residual_zero_for_no_motion_at_equilibrium():
    p = mg.reference_params(temperature=0.0)
    m = np.array([1.0, 0.0, 0.0])
    ctx = dy.StepContext(0.1)
    np.testing.assert_allclose(dy.implicit_residual(m, m, ctx, p), 0.0, atol=1e-16)


def test_step_context_validation():
    with pytest.raises(ValueError):
        dy.StepContext(0.0)
    assert dy.StepContext(0.1).thermal_field(mg.reference_params()) is None


def test_spherical_matches_cartesian_rates(generic_params, drive, rng):
    theta = rng.uniform(0.2, np.pi - 0.2, 100)
    phi = rng.uniform(-np.pi, np.pi, 100)
    m = vm.to_cartesian(theta, phi)
    dth, dph = dy.spherical_rhs(theta, phi, generic_params, drive)
    ref_t, ref_p = dy.cartesian_to_spherical_rate(m, dy.drift(m, generic_params, drive))
    np.testing.assert_allclose(dth, ref_t, atol=1e-13)
    np.testing.assert_allclose(dph, ref_p, atol=1e-12)


def test_spherical_pole_guard(generic_params):
    with pytest.raises(dy.SingularityError):
        dy.spherical_rhs(0.0, 0.3, generic_params)
    with pytest.raises(dy.SingularityError):
        dy.spherical_rhs(np.array([1.0, np.pi]), np.zeros(2), generic_params)
    dy.spherical_rhs(1e-6, 0.3, generic_params)


def test_critical_dt_reference_case():
    p = mg.reference_params(temperature=0.0)
    dt = dy.critical_dt(p, mg.DriveInput(h_app=[1.0, 0.0, 0.0]))
    assert dt == pytest.approx(0.1 / 2.1, rel=1e-12)
    assert abs(dt - 0.045) < 0.003
    assert dy.critical_dt_bound(0.0, 0.1, 0.0, 50.0) == pytest.approx(0.1 / 50)


def test_critical_dt_includes_noise():
    p = mg.reference_params()
    assert dy.critical_dt(p) == pytest.approx(0.1 / (1.1 + mg.thermal_nu(p)))
