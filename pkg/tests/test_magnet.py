import json
import warnings

import numpy as np
import pytest

from sllgs import magnet as mg
from conftest import random_unit


def test_reference_thermal_sigma_hand_value():
    p = mg.reference_params()
    V = 40e-9 * 40e-9 * 1e-9
    nu = np.sqrt(2 * 0.01 * 1.380649e-23 * 300 / (1.25663706212e-6 * 1.11e6 ** 2 * V))
    dt = 1e-12 * 1.76085963023e11 * 1.25663706212e-6 * 1.11e6
    assert mg.thermal_nu(p) == pytest.approx(nu, rel=1e-12)
    assert mg.thermal_sigma(p, dt) == pytest.approx(nu * np.sqrt(dt), rel=1e-12)
    # independent rough numbers
    assert dt == pytest.approx(0.2456, rel=1e-3)
    assert mg.thermal_nu(p) == pytest.approx(5.78e-3, rel=2e-3)


def test_thermal_sigma_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        mg.thermal_sigma(mg.reference_params(), 0.0)


def test_scales():
    p = mg.reference_params()
    assert p.time_scale == pytest.approx(2.456e11, rel=1e-3)
    assert p.to_seconds(p.to_normalized_time(3e-9)) == pytest.approx(3e-9)
    assert p.current_scale == pytest.approx(7.53e-3, rel=2e-3)
    assert p.barrier / (p.kB * p.temperature) == pytest.approx(29.9, rel=5e-3)
    assert p.hk == pytest.approx(0.1)


def test_params_for_barrier():
    p = mg.params_for_barrier(10.0, alpha=0.01)
    assert p.barrier / (p.kB * p.temperature) == pytest.approx(10.0, rel=1e-12)
    # nu^2 = 2 alpha kT / (mu0 Ms^2 V) = 2 alpha hk / (2 * barrier_kT) here
    assert mg.thermal_nu(p) == pytest.approx(np.sqrt(0.01 * 0.1 / 10), rel=1e-6)


def test_effective_field_examples():
    p = mg.MagnetParams(Ms=1e6, Hk=2e5, alpha=0.1, volume=1e-24, easy_axis=(0, 0, 1),
                        demag=(0.1, 0.2, 0.7))
    m = np.array([0.6, 0.0, 0.8])
    h = mg.effective_field(m, p, mg.DriveInput(h_app=[0.0, 1.0, 0.0]))
    np.testing.assert_allclose(h, [-0.06, 1.0, 0.2 * 0.8 - 0.7 * 0.8], atol=1e-15)
    h_T = np.array([1e-3, -2e-3, 0.5])
    np.testing.assert_allclose(mg.effective_field(m, p, h_T=h_T),
                               mg.effective_field(m, p) + h_T, atol=1e-16)


def test_field_is_minus_energy_gradient(generic_params, rng):
    p = generic_params
    drive = mg.DriveInput(h_app=[0.3, -0.2, 0.1])
    scale = p.mu0 * p.Ms ** 2 * p.volume

    def energy(m):
        # same energy written out independently of the library
        M = p.Ms * m
        return p.volume * (-p.mu0 * p.Ms * drive.h_app @ M
                           - p.Ku * (p.n @ m) ** 2 + 0.5 * p.mu0 * np.sum(p.N * M * M))

    for m in random_unit(rng, 10):
        assert mg.total_energy(m, p, drive) == pytest.approx(energy(m), rel=1e-12)
        eps = 1e-6
        grad = np.array([(energy(m + eps * e) - energy(m - eps * e)) / (2 * eps)
                         for e in np.eye(3)])
        np.testing.assert_allclose(mg.effective_field(m, p, drive), -grad / scale,
                                   rtol=1e-6, atol=1e-9)


def test_field_jacobian(generic_params, rng):
    p = generic_params
    m = random_unit(rng)
    J = mg.field_jacobian(p)
    for k, e in enumerate(np.eye(3)):
        col = (mg.anisotropy_demag_field(m + 1e-6 * e, p)
               - mg.anisotropy_demag_field(m - 1e-6 * e, p)) / 2e-6
        np.testing.assert_allclose(J[:, k], col, atol=1e-9)


def test_batched_field_and_drive(generic_params, rng):
    m = random_unit(rng, 7)
    drive = mg.DriveInput(h_app=rng.normal(size=(7, 3)))
    h = mg.effective_field(m, generic_params, drive)
    for k in range(7):
        one = mg.effective_field(m[k], generic_params, mg.DriveInput(h_app=drive.h_app[k]))
        np.testing.assert_allclose(h[k], one, rtol=1e-15)


def test_unit_precondition(generic_params):
    with pytest.raises(mg.PreconditionError):
        mg.effective_field([1.0 + 1e-5, 0, 0], generic_params)
    mg.effective_field([1.0 + 1e-7, 0, 0], generic_params)
    mg.effective_field([2.0, 0, 0], generic_params, check=False)


@pytest.mark.parametrize('bad', [
    dict(Ms=-1.0), dict(alpha=0.0), dict(volume=0.0), dict(temperature=-1.0),
    dict(easy_axis=(1.0, 1.0, 0.0)), dict(demag=(-0.1, 0.0, 1.0)), dict(Hk=float('nan')),
])
def test_invalid_params_rejected(bad):
    with pytest.raises(mg.ConfigError):
        mg.reference_params(**bad)


def test_demag_sum_warning():
    with pytest.warns(UserWarning):
        mg.reference_params(demag=(0.5, 0.5, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        mg.reference_params(demag=(0.2, 0.3, 0.5))


def test_dict_round_trip(tmp_path, generic_params):
    d = generic_params.to_dict()
    assert mg.MagnetParams.from_dict(d) == generic_params
    f = tmp_path / 'p.json'
    f.write_text(json.dumps(d))
    assert mg.MagnetParams.from_json(f) == generic_params
    with pytest.raises(mg.ConfigError, match='unknown'):
        mg.MagnetParams.from_dict({**d, 'spin': 1})
    del d['Ms']
    with pytest.raises(mg.ConfigError, match='missing'):
        mg.MagnetParams.from_dict(d)


def test_drive_validation():
    with pytest.raises(ValueError):
        mg.DriveInput(h_app=[1.0, 0.0])
    with pytest.raises(ValueError):
        mg.DriveInput(i_s=[np.inf, 0, 0])
