"""Magnet parameters, energy landscape and the normalised effective field.

All fields are normalised by the saturation magnetisation and time by
``1 / (gamma * mu0 * Ms)``.
"""

import dataclasses
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import vecmath as vm

# CODATA 2018
GAMMA_E = 1.76085963023e11      # rad / (s T)
MU0 = 1.25663706212e-6          # T m / A
K_B = 1.380649e-23              # J / K
Q_E = 1.602176634e-19           # C
HBAR = 1.054571817e-34          # J s

UNIT_TOL = 1e-6


class PreconditionError(ValueError):
    """Raised when a state violates an operation's precondition."""


class ConfigError(ValueError):
    """Raised for malformed or inconsistent parameter documents."""


def _vec(x):
    return tuple(float(v) for v in np.asarray(x, dtype=float).reshape(3))


@dataclass(frozen=True)
class MagnetParams:
    """Physical description of a monodomain magnet (SI units).

    ``easy_axis`` must be a unit vector and ``demag`` holds the diagonal
    demagnetisation coefficients ``(Nx, Ny, Nz)``.
    """

    Ms: float
    Hk: float
    alpha: float
    volume: float
    temperature: float = 300.0
    easy_axis: tuple = (1.0, 0.0, 0.0)
    demag: tuple = (0.0, 0.0, 0.0)
    gamma: float = GAMMA_E
    mu0: float = MU0
    kB: float = K_B
    q: float = Q_E
    hbar: float = HBAR

    def __post_init__(self):
        object.__setattr__(self, 'easy_axis', _vec(self.easy_axis))
        object.__setattr__(self, 'demag', _vec(self.demag))
        values = dataclasses.astuple(self)
        flat = [v for x in values for v in (x if isinstance(x, tuple) else (x,))]
        if not np.all(np.isfinite(flat)):
            raise ConfigError('magnet parameters must be finite')
        if self.Ms <= 0 or self.volume <= 0:
            raise ConfigError('Ms and volume must be positive')
        if self.alpha <= 0:
            raise ConfigError('alpha must be positive')
        if self.temperature < 0 or self.Hk < 0:
            raise ConfigError('temperature and Hk must be non-negative')
        for name in ('gamma', 'mu0', 'kB', 'q', 'hbar'):
            if getattr(self, name) <= 0:
                raise ConfigError(f'{name} must be positive')
        if abs(np.linalg.norm(self.easy_axis) - 1.0) > 1e-12:
            raise ConfigError('easy_axis must be a unit vector')
        if min(self.demag) < 0:
            raise ConfigError('demagnetisation coefficients must be non-negative')
        if sum(self.demag) > 1.0 + 1e-9:
            warnings.warn(f'demagnetisation coefficients sum to {sum(self.demag)} > 1')

    # derived quantities
    @property
    def n(self):
        return np.array(self.easy_axis)

    @property
    def N(self):
        return np.array(self.demag)

    @property
    def hk(self):
        """Normalised anisotropy field ``Hk / Ms``."""
        return self.Hk / self.Ms

    @property
    def Ku(self):
        """Uniaxial anisotropy energy density, J/m^3."""
        return 0.5 * self.mu0 * self.Ms * self.Hk

    @property
    def n_spins(self):
        return 2.0 * self.Ms * self.volume / (self.gamma * self.hbar)

    @property
    def current_scale(self):
        """Spin current, in A, that corresponds to ``|i_s| = 1``."""
        return self.q * self.gamma * self.mu0 * self.Ms * self.n_spins

    @property
    def time_scale(self):
        """``gamma mu0 Ms`` in 1/s; multiply seconds by this to normalise."""
        return self.gamma * self.mu0 * self.Ms

    @property
    def barrier(self):
        """Uniaxial energy barrier ``Ku V`` in J."""
        return self.Ku * self.volume

    @property
    def alpha_prime(self):
        return 1.0 / (1.0 + self.alpha ** 2)

    def to_normalized_time(self, seconds):
        return seconds * self.time_scale

    def to_seconds(self, t_norm):
        return t_norm / self.time_scale

    def normalize_current(self, amps):
        return np.asarray(amps, dtype=float) / self.current_scale

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d['easy_axis'] = list(self.easy_axis)
        d['demag'] = list(self.demag)
        return d

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f'unknown magnet parameter keys: {unknown}')
        missing = sorted(f.name for f in dataclasses.fields(cls)
                         if f.default is dataclasses.MISSING and f.name not in data)
        if missing:
            raise ConfigError(f'missing magnet parameter keys: {missing}')
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def reference_params(**overrides):
    """The in-plane 40 x 40 x 1 nm^3 magnet used for the reversal-delay study.

    Demagnetisation factors are not given with that parameter set; a thin
    film ``N = (0, 0, 1)`` is assumed.
    """
    base = dict(Ms=1.11e6, Hk=1.11e5, alpha=0.01, volume=40e-9 * 40e-9 * 1e-9,
                temperature=300.0, easy_axis=(1.0, 0.0, 0.0), demag=(0.0, 0.0, 1.0))
    base.update(overrides)
    return MagnetParams(**base)


def params_for_barrier(barrier_kT, Ms=1.11e6, Hk=1.11e5, temperature=300.0, **kw):
    """Magnet whose volume gives ``Ku V = barrier_kT * kB T``."""
    Ku = 0.5 * MU0 * Ms * Hk
    volume = barrier_kT * K_B * temperature / Ku
    return MagnetParams(Ms=Ms, Hk=Hk, volume=volume, temperature=temperature, **kw)


@dataclass(frozen=True)
class DriveInput:
    """Normalised applied field ``H_app / Ms`` and spin current ``I_s / I``.

    Either entry may be a ``(..., 3)`` array to give each ensemble member its
    own drive.
    """

    h_app: np.ndarray = field(default_factory=lambda: np.zeros(3))
    i_s: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        h = np.asarray(self.h_app, dtype=float)
        i = np.asarray(self.i_s, dtype=float)
        if h.shape[-1:] != (3,) or i.shape[-1:] != (3,):
            raise ValueError('h_app and i_s must have a trailing dimension of 3')
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(i))):
            raise ValueError('drive must be finite')
        object.__setattr__(self, 'h_app', h)
        object.__setattr__(self, 'i_s', i)


NO_DRIVE = DriveInput()


def check_unit(m, tol=UNIT_TOL):
    m = np.asarray(m, dtype=float)
    dev = np.abs(vm.norm(m) - 1.0)
    if np.any(dev > tol):
        raise PreconditionError(f'|m| deviates from 1 by {np.max(dev):.3e} (tolerance {tol:g})')
    return m


def anisotropy_demag_field(m, p):
    """Field from uniaxial and shape anisotropy, linear in ``m``."""
    n = p.n
    return p.hk * vm.dot(n, m)[..., None] * n - p.N * m


def effective_field(m, p, drive=NO_DRIVE, h_T=None, check=True):
    """Total normalised effective field.

    ``h_app + (Hk/Ms)(n.m) n - N*m + h_T``, with ``h_T`` the per-step
    normalised thermal field (omit for zero).
    """
    m = check_unit(m) if check else np.asarray(m, dtype=float)
    h = drive.h_app + anisotropy_demag_field(m, p)
    if h_T is not None:
        h = h + h_T
    return h


def field_jacobian(p):
    """Constant Jacobian ``d h_eff / d m`` = ``(Hk/Ms) n n^T - diag(N)``."""
    return p.hk * np.outer(p.n, p.n) - np.diag(p.N)


def total_energy(m, p, drive=NO_DRIVE):
    """Zeeman + uniaxial + shape energy of the macrospin, in joules."""
    m = check_unit(m)
    M = p.Ms * m
    H_app = p.Ms * drive.h_app
    cos_t = vm.dot(p.n, m)
    density = (-p.mu0 * vm.dot(H_app, M)
               - p.Ku * cos_t ** 2
               + 0.5 * p.mu0 * vm.dot(p.N, M * M))
    return p.volume * density


def thermal_nu(p):
    """Normalised thermal noise strength ``sqrt(2 alpha kB T / (mu0 Ms^2 V))``."""
    return np.sqrt(2.0 * p.alpha * p.kB * p.temperature / (p.mu0 * p.Ms ** 2 * p.volume))


def thermal_sigma(p, dt_norm):
    """Per-step standard deviation: ``h_T dt' = sigma xi`` with ``xi ~ N(0, 1)^3``."""
    if dt_norm <= 0:
        raise ValueError('dt_norm must be positive')
    return thermal_nu(p) * np.sqrt(dt_norm)
