"""Right-hand sides of the normalised s-LLGS equation.

Cartesian explicit drift and diffusion, the implicit-form residual and
Jacobian used by the midpoint solve, the spherical form, and the
critical time step bound.  Nothing here draws random numbers: the Wiener
increment of a step is always passed in.
"""

from dataclasses import dataclass

import numpy as np

from . import vecmath as vm
from .magnet import NO_DRIVE, DriveInput, check_unit, effective_field, field_jacobian, thermal_nu

THETA_MIN = 1e-8


class SingularityError(ArithmeticError):
    """The spherical form was evaluated too close to a pole."""


@dataclass(frozen=True)
class StepContext:
    """Everything one step needs besides the states.

    ``noise_increment`` is the Wiener increment ``eta = sqrt(dt) xi`` of the
    step (zero for deterministic runs).
    """

    dt_norm: float
    drive: DriveInput = NO_DRIVE
    noise_increment: np.ndarray = None

    def __post_init__(self):
        if not self.dt_norm > 0:
            raise ValueError('dt_norm must be positive')

    def thermal_field(self, p):
        """Frozen per-step thermal field ``nu * eta / dt`` (or None)."""
        if self.noise_increment is None:
            return None
        return thermal_nu(p) * np.asarray(self.noise_increment, dtype=float) / self.dt_norm


def llg_rate(m, h, i_s, alpha):
    """Explicit LLGS rate for a given total field ``h`` and spin current."""
    mxh = vm.cross(m, h)
    mxi = vm.cross(m, i_s)
    return -(mxh + vm.cross(m, mxi) + alpha * (vm.cross(m, mxh) - mxi)) / (1.0 + alpha ** 2)


def drift(m, p, drive=NO_DRIVE, h_T=None, check=True):
    """Deterministic part of the explicit (decoupled) s-LLGS equation."""
    h = effective_field(m, p, drive, h_T, check=check)
    return llg_rate(m, h, drive.i_s, p.alpha)


def drift_jacobian(m, p, drive=NO_DRIVE, h_T=None):
    """Jacobian of :func:`drift` with respect to ``m``; ``h_T`` held fixed."""
    m = np.asarray(m, dtype=float)
    h = effective_field(m, p, drive, h_T, check=False)
    i_s = np.broadcast_to(drive.i_s, m.shape)
    Jh = field_jacobian(p)
    mx = vm.skew(m)
    j_mxh = mx @ Jh - vm.skew(h)
    j_mxmxh = mx @ j_mxh - vm.skew(vm.cross(m, h))
    ix = vm.skew(i_s)
    j_mxi = -ix
    j_mxmxi = mx @ j_mxi - vm.skew(vm.cross(m, i_s))
    return -p.alpha_prime * (j_mxh + j_mxmxi + p.alpha * (j_mxmxh - j_mxi))


def diffusion(m, p):
    """Diffusion matrix ``-(alpha' nu) m^x (I + alpha m^x)``, shape (..., 3, 3).

    Column ``j`` is the response to Wiener component ``j``.
    """
    m = check_unit(m)
    mx = vm.skew(m)
    return -(p.alpha_prime * thermal_nu(p)) * (mx + p.alpha * mx @ mx)


def noise_term(m, p, dw):
    """``diffusion(m) @ dw`` evaluated with cross products."""
    h = thermal_nu(p) * np.asarray(dw, dtype=float)
    mxh = vm.cross(m, h)
    return -p.alpha_prime * (mxh + p.alpha * vm.cross(m, mxh))


def implicit_form_rhs(m, dmdt, p, drive=NO_DRIVE, h_T=None):
    """Right side of the implicit s-LLGS form for a trial ``dm/dt``.

    ``-m x h + alpha m x dm/dt - m x (m x i_s)``; equals ``dmdt`` exactly when
    ``dmdt`` is the explicit drift.
    """
    h = effective_field(m, p, drive, h_T, check=False)
    return (-vm.cross(m, h) + p.alpha * vm.cross(m, dmdt)
            - vm.cross(m, vm.cross(m, drive.i_s)))


def implicit_residual(m_next, m_n, ctx: StepContext, p):
    """Midpoint residual ``S_n(m) = m - m_n - dt f(m_n, m)`` in implicit form.

    Uses ``m_mid = (m_n + m)/2``, ``h_mid = h(m_mid) + h_T`` and the damping
    term ``alpha m_mid x (m - m_n)/dt``.
    """
    m_next = np.asarray(m_next, dtype=float)
    m_n = np.asarray(m_n, dtype=float)
    dt = ctx.dt_norm
    mid = 0.5 * (m_n + m_next)
    h = effective_field(mid, p, ctx.drive, ctx.thermal_field(p), check=False)
    f = (-vm.cross(mid, h) + p.alpha * vm.cross(mid, (m_next - m_n) / dt)
         - vm.cross(mid, vm.cross(mid, ctx.drive.i_s)))
    return m_next - m_n - dt * f


def implicit_jacobian(m_next, m_n, ctx: StepContext, p):
    """Analytic Jacobian of :func:`implicit_residual` with respect to ``m_next``.

    ``I + dt/2 (m^x J_h - h^x) - dt/2 (m^x i^x + (m x i)^x) - alpha m_n^x``
    where ``m`` and ``h`` are midpoint values.
    """
    m_next = np.asarray(m_next, dtype=float)
    m_n = np.asarray(m_n, dtype=float)
    dt = ctx.dt_norm
    mid = 0.5 * (m_n + m_next)
    h = effective_field(mid, p, ctx.drive, ctx.thermal_field(p), check=False)
    i_s = np.broadcast_to(ctx.drive.i_s, mid.shape)
    mx = vm.skew(mid)
    eye = np.broadcast_to(np.eye(3), mx.shape)
    field_part = mx @ field_jacobian(p) - vm.skew(h)
    torque_part = mx @ vm.skew(i_s) + vm.skew(vm.cross(mid, i_s))
    return eye + 0.5 * dt * field_part - 0.5 * dt * torque_part - p.alpha * vm.skew(m_n)


def spherical_rate(theta, phi, h, i_s, alpha, theta_min=THETA_MIN):
    """``(dtheta/dt, dphi/dt)`` for a given total field and spin current."""
    theta = np.asarray(theta, dtype=float)
    st = np.sin(theta)
    if np.any(np.abs(st) <= theta_min):
        raise SingularityError(f'|sin(theta)| <= {theta_min:g}; spherical form is singular at the poles')
    t_hat, p_hat = vm.spherical_basis(theta, phi)
    h_t, h_p = vm.dot(h, t_hat), vm.dot(h, p_hat)
    i_t, i_p = vm.dot(i_s, t_hat), vm.dot(i_s, p_hat)
    ap = 1.0 / (1.0 + alpha ** 2)
    dtheta = ap * (h_p + i_t + alpha * h_t - alpha * i_p)
    dphi = ap * (i_p - h_t + alpha * h_p + alpha * i_t) / st
    return dtheta, dphi


def spherical_rhs(theta, phi, p, drive=NO_DRIVE, h_T=None, theta_min=THETA_MIN):
    """s-LLGS in spherical coordinates; returns ``(dtheta/dt, dphi/dt)``.

    Raises
    ------
    SingularityError
        If ``|sin(theta)| <= theta_min``.
    """
    m = vm.to_cartesian(theta, phi)
    h = effective_field(m, p, drive, h_T, check=False)
    i_s = np.broadcast_to(drive.i_s, m.shape)
    return spherical_rate(theta, phi, h, i_s, p.alpha, theta_min)


def cartesian_to_spherical_rate(m, dmdt):
    """Chain rule: angle rates of a tangent velocity ``dmdt`` at unit ``m``."""
    theta, phi = vm.to_spherical(m)
    t_hat, p_hat = vm.spherical_basis(theta, phi)
    return vm.dot(dmdt, t_hat), vm.dot(dmdt, p_hat) / np.sin(theta)


def critical_dt_bound(h_app_norm, hk, nu=0.0, i_s_norm=0.0):
    """``0.1 / max(|h_app| + hk + 1 + nu, |i_s|)``."""
    eps = hk + 1.0 + nu
    return 0.1 / max(h_app_norm + eps, i_s_norm)


def critical_dt(p, drive=NO_DRIVE):
    """Largest normalised step giving smooth bounded trajectories.

    With ``|h_app| = 1``, ``Hk/Ms = 0.1`` at zero temperature this is
    ``0.1 / 2.1``, about 0.0476.
    """
    h = float(np.max(vm.norm(drive.h_app)))
    i = float(np.max(vm.norm(drive.i_s)))
    return critical_dt_bound(h, p.hk, float(thermal_nu(p)), i)
