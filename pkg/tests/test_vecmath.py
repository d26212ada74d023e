import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sllgs import vecmath as vm
from conftest import random_unit

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


@pytest.mark.parametrize('a, b, expected', [
    ([1, 0, 0], [0, 1, 0], [0, 0, 1]),
    ([1, 0, 0], [0, 0, 1], [0, -1, 0]),
    ([0.3, -2.0, 5.0], [0.3, -2.0, 5.0], [0, 0, 0]),
])
def test_cross_basis(a, b, expected):
    np.testing.assert_array_equal(vm.cross(a, b), expected)


def test_skew_examples():
    np.testing.assert_array_equal(vm.skew([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(vm.skew([0, 0, 1]), [[0, -1, 0], [1, 0, 0], [0, 0, 0]])


def test_skew_matches_cross_by_component_expansion(rng):
    a, b = rng.normal(size=(2, 1000, 3))
    S = vm.skew(a)
    # row i of S dotted with b, written out term by term
    expanded = np.stack([S[:, i, 0] * b[:, 0] + S[:, i, 1] * b[:, 1] + S[:, i, 2] * b[:, 2]
                         for i in range(3)], axis=-1)
    np.testing.assert_array_equal(vm.cross(a, b), expanded)
    np.testing.assert_allclose(vm.matvec(S, b), vm.cross(a, b), rtol=0, atol=1e-13)


@given(vec3, vec3)
def test_cross_antisymmetric(a, b):
    np.testing.assert_array_equal(vm.cross(a, b), -vm.cross(b, a))


@given(vec3)
def test_skew_antisymmetric(a):
    S = vm.skew(a)
    np.testing.assert_array_equal(S, -S.T)


def test_spherical_basis_examples():
    t, p = vm.spherical_basis(np.pi / 2, 0.0)
    np.testing.assert_allclose(t, [0, 0, -1], atol=1e-16)
    np.testing.assert_allclose(p, [0, 1, 0], atol=1e-16)
    t, p = vm.spherical_basis(0.0, 0.0)
    np.testing.assert_array_equal(t, [1, 0, 0])
    np.testing.assert_array_equal(p, [0, 1, 0])


def test_spherical_basis_orthonormal_and_right_handed(rng):
    theta = rng.uniform(0, np.pi, 500)
    phi = rng.uniform(-np.pi, np.pi, 500)
    t, p = vm.spherical_basis(theta, phi)
    m = vm.to_cartesian(theta, phi)
    np.testing.assert_allclose(vm.dot(t, p), 0.0, atol=1e-15)
    np.testing.assert_allclose(vm.norm(t), 1.0, atol=1e-15)
    np.testing.assert_allclose(vm.norm(p), 1.0, atol=1e-15)
    # (m, theta_hat, phi_hat) is a right-handed frame
    np.testing.assert_allclose(vm.cross(m, t), p, atol=1e-15)
    np.testing.assert_allclose(vm.cross(t, p), m, atol=1e-15)


def test_spherical_conversions():
    theta, phi = vm.to_spherical([0, 0, 1])
    assert theta == 0.0 and phi == 0.0
    theta, phi = vm.to_spherical([0, 0, -2.0])
    assert theta == np.pi and phi == 0.0
    np.testing.assert_allclose(vm.to_cartesian(np.pi / 2, np.pi / 2), [0, 1, 0], atol=1e-16)


def test_spherical_round_trip(rng):
    m = rng.normal(size=(2000, 3)) * rng.uniform(0.1, 10, (2000, 1))
    back = vm.to_cartesian(*vm.to_spherical(m))
    assert np.max(np.abs(back - m / vm.norm(m)[:, None])) < 1e-14
    u = random_unit(rng, 2000)
    assert np.max(np.abs(vm.to_cartesian(*vm.to_spherical(u)) - u)) < 1e-14


def test_to_spherical_rejects_zero():
    with pytest.raises(vm.DomainError):
        vm.to_spherical([[1, 0, 0], [0, 0, 0]])
