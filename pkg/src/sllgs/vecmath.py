"""3-vector and 3x3-matrix primitives.

Every function broadcasts over leading axes: a ``(..., 3)`` array is a batch
of vectors and a ``(..., 3, 3)`` array a batch of matrices, so the same code
serves a single macrospin and a Monte Carlo ensemble.
"""

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a conversion."""


_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


def _f(x):
    if type(x) is np.ndarray and x.dtype == np.float64:
        return x
    return np.asarray(x, dtype=float)


def cross(a, b):
    """Right-handed cross product along the last axis."""
    a, b = _f(a), _f(b)
    return a[..., _NEXT] * b[..., _PREV] - a[..., _PREV] * b[..., _NEXT]


def skew(a):
    """Cross-product matrix ``a^x`` such that ``skew(a) @ b == cross(a, b)``."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape + (3,), dtype=float)
    out[..., 0, 1] = -a[..., 2]
    out[..., 0, 2] = a[..., 1]
    out[..., 1, 0] = a[..., 2]
    out[..., 1, 2] = -a[..., 0]
    out[..., 2, 0] = -a[..., 1]
    out[..., 2, 1] = a[..., 0]
    return out


def dot(a, b):
    """Dot product along the last axis."""
    a, b = _f(a), _f(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def norm(a):
    return np.sqrt(dot(a, a))


def matvec(A, x):
    """Batched ``A @ x`` for ``(..., 3, 3)`` and ``(..., 3)`` operands."""
    return np.einsum('...ij,...j->...i', A, x)


def outer(a, b):
    return np.asarray(a, dtype=float)[..., :, None] * np.asarray(b, dtype=float)[..., None, :]


def spherical_basis(theta, phi):
    """Local unit vectors along increasing theta and phi.

    Returns
    -------
    theta_hat, phi_hat : ndarray, shape (..., 3)
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    theta_hat = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return theta_hat, phi_hat


def to_cartesian(theta, phi):
    """Unit vector ``[sin t cos p, sin t sin p, cos t]``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def to_spherical(m):
    """Polar and azimuthal angles of ``m`` (normalised first).

    theta is measured from +z in [0, pi], phi from +x in [-pi, pi].  On the
    poles phi is set to 0.

    Raises
    ------
    DomainError
        If any vector has zero length.
    """
    m = np.asarray(m, dtype=float)
    r = norm(m)
    if np.any(r == 0.0):
        raise DomainError('cannot convert a zero vector to spherical angles')
    rho = np.hypot(m[..., 0], m[..., 1])
    theta = np.arctan2(rho, m[..., 2])
    phi = np.where(rho > 0.0, np.arctan2(m[..., 1], m[..., 0]), 0.0)
    return theta, phi
