"""Stepping schemes for Stratonovich SDEs ``dX = f(X,t) dt + g(X,t) o dW``.

States are arrays whose last axis is the state dimension; any leading axes
are an ensemble and are advanced together.  A step never draws random
numbers: the Wiener increment ``dw`` (``eta_n = sqrt(dt) xi_n``) is an
argument, so the same path can be replayed through every method.

Implicit schemes solve their step equation with Gauss-Newton.  Ensemble
members that reach the tolerance are frozen while the rest iterate, so a
member's result never depends on which other members share its batch.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import dynamics
from . import vecmath as vm
from .magnet import NO_DRIVE, DriveInput, thermal_nu


class ConvergenceError(RuntimeError):
    """Gauss-Newton failed to reach the tolerance.

    ``trace`` holds the largest residual norm after each iteration;
    ``step_index`` is filled in by the integration driver.
    """

    def __init__(self, message, trace=(), step_index=None):
        super().__init__(message)
        self.trace = list(trace)
        self.step_index = step_index


# ---------------------------------------------------------------------------
# systems

class SdeSystem:
    """Base class for a Stratonovich SDE.

    Subclasses provide :meth:`drift` and :meth:`diffusion`; the rest have
    generic defaults.  Jacobian hooks return ``None`` to request finite
    differences.
    """

    dim = 1
    noise_dim = 1

    def drift(self, x, t):
        raise NotImplementedError

    def diffusion(self, x, t):
        raise NotImplementedError

    def noise(self, x, t, dw):
        """``g(x, t) @ dw``."""
        return np.einsum('...ij,...j->...i', self.diffusion(x, t), dw)

    def drift_jacobian(self, x, t):
        return None

    def noise_jacobian(self, x, t, dw):
        return None

    def project(self, x):
        return x


class FunctionSystem(SdeSystem):
    """SDE from plain callables ``f(x, t)`` and ``g(x, t)``."""

    def __init__(self, f, g, dim, noise_dim):
        self.f, self.g = f, g
        self.dim, self.noise_dim = dim, noise_dim

    def drift(self, x, t):
        return self.f(x, t)

    def diffusion(self, x, t):
        return self.g(x, t)


class LinearTestSde(SdeSystem):
    """Scalar ``dX = a X dt + b X o dW`` with solution ``exp(a t + b W_t)`` from X0 = 1."""

    dim = 1
    noise_dim = 1

    def __init__(self, a=1.0, b=1.0):
        self.a, self.b = float(a), float(b)

    def drift(self, x, t):
        return self.a * x

    def diffusion(self, x, t):
        return self.b * x[..., None]

    def noise(self, x, t, dw):
        return self.b * x * dw

    def drift_jacobian(self, x, t):
        return np.full(x.shape + (1,), self.a)

    def noise_jacobian(self, x, t, dw):
        return (self.b * dw)[..., None]

    def exact(self, t, W_t, x0=1.0):
        return x0 * np.exp(self.a * t + self.b * W_t)

    def midpoint_closed_form(self, x, dt, eta):
        """Exact midpoint step ``x (2 + c)/(2 - c)``, ``c = a dt + b eta``."""
        c = self.a * dt + self.b * eta
        return x * (2.0 + c) / (2.0 - c)

    def moment(self, t, power=1, x0=1.0):
        """``E[X_t^k] = x0^k exp(k a t + k^2 b^2 t / 2)``."""
        k = power
        return x0 ** k * np.exp(k * self.a * t + 0.5 * k * k * self.b ** 2 * t)


def _as_drive_fn(drive):
    if callable(drive):
        return drive
    if drive is None:
        drive = NO_DRIVE
    return lambda t: drive


class LlgsSystem(SdeSystem):
    """Cartesian s-LLGS for one magnet (or an ensemble sharing parameters).

    ``drive`` is a :class:`DriveInput` or a callable ``t -> DriveInput``.
    With ``midpoint_form='implicit'`` the midpoint step solves the
    un-decoupled residual; ``'explicit'`` uses the generic midpoint rule on
    the decoupled drift.
    """

    dim = 3
    noise_dim = 3

    def __init__(self, params, drive=NO_DRIVE, midpoint_form='implicit'):
        if midpoint_form not in ('implicit', 'explicit'):
            raise ValueError(f'unknown midpoint_form {midpoint_form!r}')
        self.params = params
        self.drive = _as_drive_fn(drive)
        self.midpoint_form = midpoint_form
        self.nu = float(thermal_nu(params))

    def drift(self, x, t):
        return dynamics.drift(x, self.params, self.drive(t), check=False)

    def diffusion(self, x, t):
        return dynamics.diffusion(x, self.params)

    def noise(self, x, t, dw):
        return dynamics.noise_term(x, self.params, dw)

    def drift_jacobian(self, x, t):
        return dynamics.drift_jacobian(x, self.params, self.drive(t))

    def noise_jacobian(self, x, t, dw):
        p = self.params
        h = self.nu * np.asarray(dw, dtype=float)
        h = np.broadcast_to(h, np.shape(x))
        hx = vm.skew(h)
        return p.alpha_prime * (hx + p.alpha * (vm.skew(x) @ hx + vm.skew(vm.cross(x, h))))

    def project(self, x):
        return x / vm.norm(x)[..., None]

    def context(self, t_mid, dt, dw):
        return dynamics.StepContext(dt, self.drive(t_mid), dw)

    def midpoint_residual(self, x_next, x, t, dt, dw):
        return dynamics.implicit_residual(x_next, x, self.context(t + 0.5 * dt, dt, dw), self.params)

    def midpoint_jacobian(self, x_next, x, t, dt, dw):
        return dynamics.implicit_jacobian(x_next, x, self.context(t + 0.5 * dt, dt, dw), self.params)


class SphericalLlgsSystem(SdeSystem):
    """s-LLGS on the angles ``(theta, phi)``; the norm is 1 by construction."""

    dim = 2
    noise_dim = 3

    def __init__(self, params, drive=NO_DRIVE, theta_min=dynamics.THETA_MIN):
        self.params = params
        self.drive = _as_drive_fn(drive)
        self.theta_min = theta_min
        self.nu = float(thermal_nu(params))

    def drift(self, x, t):
        dth, dph = dynamics.spherical_rhs(x[..., 0], x[..., 1], self.params, self.drive(t),
                                          theta_min=self.theta_min)
        return np.stack([dth, dph], axis=-1)

    def noise(self, x, t, dw):
        h = self.nu * np.asarray(dw, dtype=float)
        h = np.broadcast_to(h, x.shape[:-1] + (3,))
        dth, dph = dynamics.spherical_rate(x[..., 0], x[..., 1], h, np.zeros_like(h),
                                           self.params.alpha, self.theta_min)
        return np.stack([dth, dph], axis=-1)

    def diffusion(self, x, t):
        cols = [self.noise(x, t, np.broadcast_to(e, x.shape[:-1] + (3,))) for e in np.eye(3)]
        return np.stack(cols, axis=-1)

    def cartesian(self, x):
        return vm.to_cartesian(x[..., 0], x[..., 1])


# ---------------------------------------------------------------------------
# Gauss-Newton

def _rnorm(r):
    return np.sqrt(np.sum(r * r, axis=-1))


def fd_jacobian(F, x, rel_step=1e-7):
    """Central-difference Jacobian of ``F`` at a batch of points ``x``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    h = rel_step * (1.0 + np.abs(x))
    cols = []
    for j in range(d):
        e = np.zeros_like(x)
        e[..., j] = h[..., j]
        cols.append((F(x + e) - F(x - e)) / (2.0 * h[..., j:j + 1]))
    return np.stack(cols, axis=-1)


def gauss_newton(residual, jacobian, x0, tol=1e-12, max_iter=50, min_iter=1):
    """Solve ``residual(x) = 0`` member-wise from ``x0``.

    At least ``min_iter`` updates are applied even if ``x0`` already meets
    the tolerance, so a good predictor is still refined to round-off.
    Returns ``(x, iterations)``.  Raises :class:`ConvergenceError` if any
    member's residual norm is still above ``tol`` after ``max_iter`` updates.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    rn = _rnorm(r)
    active = np.ones(rn.shape, dtype=bool) if min_iter > 0 else rn > tol
    iters = np.zeros(rn.shape, dtype=int)
    trace = [float(np.max(rn))]
    for k in range(max_iter):
        if not np.any(active):
            break
        dx = np.linalg.solve(jacobian(x), r[..., None])[..., 0]
        x = np.where(active[..., None], x - dx, x)
        iters += active
        r = residual(x)
        rn = _rnorm(r)
        active &= (rn > tol) | (k + 1 < min_iter)
        trace.append(float(np.max(rn)))
    if np.any(active):
        raise ConvergenceError(
            f'Gauss-Newton did not reach tol={tol:g} in {max_iter} iterations '
            f'(max residual {np.max(rn[active]):.3e}, {int(np.sum(active))} members)', trace)
    return x, iters


# ---------------------------------------------------------------------------
# explicit steps

def euler_maruyama_step(system, x, t, dt, dw):
    """Ito reference: ``X + f dt + g(X) dw``.  Not consistent with the Stratonovich solution."""
    return x + system.drift(x, t) * dt + system.noise(x, t, dw)


def euler_heun_step(system, x, t, dt, dw):
    g0 = system.noise(x, t, dw)
    x_tilde = x + g0
    return x + system.drift(x, t) * dt + 0.5 * (system.noise(x_tilde, t + dt, dw) + g0)


def heun_step(system, x, t, dt, dw):
    f0 = system.drift(x, t)
    g0 = system.noise(x, t, dw)
    x_tilde = x + f0 * dt + g0
    f1 = system.drift(x_tilde, t + dt)
    g1 = system.noise(x_tilde, t + dt, dw)
    return x + 0.5 * (f0 + f1) * dt + 0.5 * (g0 + g1)


def rk4_heun_step(system, x, t, dt, dw, corrector=False):
    """RK4 on the drift, Heun on the noise.

    Stage points add the noise contribution ``s1 eta`` alongside ``d_i dt``:
    ``d2 = f(X + (d1 dt + s1 eta)/2)``, ``d3 = f(X + (d2 dt + s1 eta)/2)``,
    ``d4 = f(X + d3 dt + s1 eta)``.  With ``corrector`` the noise average is
    recomputed at the new state: ``S' = (s1 + g(X_{n+1}))/2``.
    """
    s1 = system.noise(x, t, dw)
    d1 = system.drift(x, t)
    s2 = system.noise(x + d1 * dt + s1, t + dt, dw)
    d2 = system.drift(x + 0.5 * (d1 * dt + s1), t + 0.5 * dt)
    d3 = system.drift(x + 0.5 * (d2 * dt + s1), t + 0.5 * dt)
    d4 = system.drift(x + d3 * dt + s1, t + dt)
    det = x + (d1 + 2.0 * d2 + 2.0 * d3 + d4) * (dt / 6.0)
    x_new = det + 0.5 * (s1 + s2)
    if corrector:
        x_new = det + 0.5 * (s1 + system.noise(x_new, t + dt, dw))
    return x_new


def adams_midpoint_step(system, x, x_prev, t, dt, dw):
    """Semi-implicit midpoint with the extrapolated midpoint ``(3 X_n - X_{n-1})/2``.

    A demonstrator of a scheme that does not converge for SDEs.  On the very
    first step pass ``x_prev = x``.
    """
    mid = 0.5 * (3.0 * x - x_prev)
    tm = t + 0.5 * dt
    return x + system.drift(mid, tm) * dt + system.noise(mid, tm, dw)


# ---------------------------------------------------------------------------
# implicit steps

def _frozen(system, dt, dw):
    """Drift with the step's noise folded in, ``F = f + g dw / dt``, and its Jacobian."""

    def F(x, t):
        return system.drift(x, t) + system.noise(x, t, dw) / dt

    def JF(x, t):
        jf = system.drift_jacobian(x, t)
        jg = system.noise_jacobian(x, t, dw) if jf is not None else None
        if jf is None or jg is None:
            return fd_jacobian(lambda y: F(y, t), x)
        return jf + jg / dt

    return F, JF


def _eye(x):
    d = x.shape[-1]
    return np.broadcast_to(np.eye(d), x.shape + (d,))


def _euler_guess(system, x, t, dt, dw):
    return x + system.drift(x, t) * dt + system.noise(x, t, dw)


def implicit_midpoint_step(system, x, t, dt, dw, tol=1e-12, max_iter=50, info=None):
    """``X_{n+1} = X_n + f(X_mid) dt + g(X_mid) eta`` from the Euler predictor.

    Systems with ``midpoint_residual``/``midpoint_jacobian`` (the s-LLGS in
    implicit form) supply their own equation and analytic Jacobian.
    """
    x = np.asarray(x, dtype=float)
    guess = _euler_guess(system, x, t, dt, dw)
    if hasattr(system, 'midpoint_residual') and getattr(system, 'midpoint_form', 'implicit') == 'implicit':
        x_new, iters = gauss_newton(lambda y: system.midpoint_residual(y, x, t, dt, dw),
                                    lambda y: system.midpoint_jacobian(y, x, t, dt, dw),
                                    guess, tol, max_iter)
    else:
        F, JF = _frozen(system, dt, dw)
        tm = t + 0.5 * dt
        x_new, iters = gauss_newton(lambda y: y - x - dt * F(0.5 * (x + y), tm),
                                    lambda y: _eye(y) - 0.5 * dt * JF(0.5 * (x + y), tm),
                                    guess, tol, max_iter)
    if info is not None:
        info['iterations'] = iters
    return x_new


def backward_euler_step(system, x, t, dt, dw, tol=1e-12, max_iter=50, info=None):
    """``X_{n+1} = X_n + dt F(X_{n+1})`` with the noise frozen over the step."""
    x = np.asarray(x, dtype=float)
    F, JF = _frozen(system, dt, dw)
    t1 = t + dt
    x_new, iters = gauss_newton(lambda y: y - x - dt * F(y, t1),
                                lambda y: _eye(y) - dt * JF(y, t1),
                                _euler_guess(system, x, t, dt, dw), tol, max_iter)
    if info is not None:
        info['iterations'] = iters
    return x_new


def trapezoidal_step(system, x, t, dt, dw, tol=1e-12, max_iter=50, info=None):
    """``X_{n+1} = X_n + dt/2 [F(X_n) + F(X_{n+1})]`` with the noise frozen over the step."""
    x = np.asarray(x, dtype=float)
    F, JF = _frozen(system, dt, dw)
    t1 = t + dt
    f0 = F(x, t)
    x_new, iters = gauss_newton(lambda y: y - x - 0.5 * dt * (f0 + F(y, t1)),
                                lambda y: _eye(y) - 0.5 * dt * JF(y, t1),
                                _euler_guess(system, x, t, dt, dw), tol, max_iter)
    if info is not None:
        info['iterations'] = iters
    return x_new


# ---------------------------------------------------------------------------
# method selection

EXPLICIT = {
    'euler-heun': euler_heun_step,
    'heun': heun_step,
    'rk4-heun': rk4_heun_step,
    'rk4-heun-corrected': lambda s, x, t, dt, dw: rk4_heun_step(s, x, t, dt, dw, corrector=True),
    'euler-maruyama': euler_maruyama_step,
}
IMPLICIT = {
    'implicit-midpoint': implicit_midpoint_step,
    'backward-euler': backward_euler_step,
    'trapezoidal': trapezoidal_step,
}
DEMONSTRATORS = {'adams-midpoint'}
METHODS = tuple(EXPLICIT) + tuple(IMPLICIT) + tuple(DEMONSTRATORS)


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings.

    ``rk4_corrector`` turns ``'rk4-heun'`` into its corrected variant.  The
    ``'adams-midpoint'`` demonstrator is refused unless
    ``allow_demonstrator`` is set.  ``renormalize`` projects the state back
    onto the unit sphere after every step (off by default).
    """

    method: str = 'implicit-midpoint'
    dt: float = 0.01
    gauss_newton_tol: float = 1e-12
    gauss_newton_max_iter: int = 50
    rk4_corrector: bool = False
    renormalize: bool = False
    allow_demonstrator: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f'unknown method {self.method!r}; choose from {", ".join(METHODS)}')
        if self.method in DEMONSTRATORS and not self.allow_demonstrator:
            raise ValueError(f'{self.method!r} is a non-convergent demonstrator; '
                             'set allow_demonstrator=True to use it')
        if not self.dt > 0:
            raise ValueError('dt must be positive')
        if not self.gauss_newton_tol > 0:
            raise ValueError('gauss_newton_tol must be positive')
        if self.gauss_newton_max_iter < 1:
            raise ValueError('gauss_newton_max_iter must be >= 1')

    @property
    def resolved_method(self):
        if self.method == 'rk4-heun' and self.rk4_corrector:
            return 'rk4-heun-corrected'
        return self.method

    @property
    def uses_history(self):
        return self.method in DEMONSTRATORS

    @property
    def implicit(self):
        return self.method in IMPLICIT

    def with_(self, **changes):
        return replace(self, **changes)


class Stepper:
    """Callable single step for a :class:`SolverConfig`.

    ``stepper(system, x, t, dw, x_prev=None, info=None)`` advances by
    ``config.dt``.  ``x_prev`` is only read by history-based schemes.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        name = config.resolved_method
        self.name = name
        if name in IMPLICIT:
            fn = IMPLICIT[name]
            tol, it = config.gauss_newton_tol, config.gauss_newton_max_iter
            self._fn = lambda s, x, t, dt, dw, x_prev, info: fn(s, x, t, dt, dw, tol, it, info)
        elif name in EXPLICIT:
            fn = EXPLICIT[name]
            self._fn = lambda s, x, t, dt, dw, x_prev, info: fn(s, x, t, dt, dw)
        else:
            self._fn = lambda s, x, t, dt, dw, x_prev, info: adams_midpoint_step(
                s, x, x if x_prev is None else x_prev, t, dt, dw)

    def __call__(self, system, x, t, dw, x_prev=None, info=None, dt=None):
        dt = self.config.dt if dt is None else dt
        x_new = self._fn(system, x, t, dt, dw, x_prev, info)
        if self.config.renormalize:
            x_new = system.project(x_new)
        return x_new


def integrate(system, x0, increments, config: SolverConfig, t0=0.0, record=True):
    """Advance ``x0`` through every increment in ``increments`` (axis 0 = step).

    Returns ``(times, states, iterations)``; with ``record=False`` only the
    final state is kept in ``states``.  ``iterations`` sums the Gauss-Newton
    updates per ensemble member (zeros for explicit schemes).
    """
    stepper = Stepper(config)
    dt = config.dt
    x = np.array(x0, dtype=float)
    x_prev = x
    n = len(increments)
    states = [x] if record else None
    iters = np.zeros(x.shape[:-1], dtype=int)
    info = {}
    for k in range(n):
        t = t0 + k * dt
        try:
            x_new = stepper(system, x, t, increments[k], x_prev=x_prev, info=info)
        except ConvergenceError as err:
            err.step_index = k
            raise
        if 'iterations' in info:
            iters += info.pop('iterations')
        x_prev, x = x, x_new
        if record:
            states.append(x)
    times = t0 + dt * np.arange(n + 1)
    return times, (np.stack(states) if record else x), iters
