"""Monte Carlo studies built on the integrators.

All quantities are in normalised units (time in ``1/(gamma mu0 Ms)``,
fields in ``Ms``, currents in ``I``) unless a name says otherwise.  Every
study is a pure function of its arguments and the master seed: ensembles
are cut into fixed-size chunks, each chunk draws its noise from per-path
streams, and results are reassembled in path order.  The thread count only
changes how fast chunks finish, never what they contain.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate as sci_integrate
from scipy import optimize, stats
from scipy.spatial import cKDTree

from . import brownian
from . import vecmath as vm
from .integrators import (
    LinearTestSde, LlgsSystem, SolverConfig, SphericalLlgsSystem, Stepper, integrate,
)
from .magnet import NO_DRIVE, DriveInput, thermal_nu, total_energy

DEFAULT_CHUNK = 1024


# ---------------------------------------------------------------------------
# plumbing

def map_chunks(fn, n_items, chunk_size=DEFAULT_CHUNK, threads=1):
    """Apply ``fn(start, stop)`` to consecutive fixed-size chunks, results in order."""
    bounds = [(s, min(s + chunk_size, n_items)) for s in range(0, n_items, chunk_size)]
    if threads is None or threads <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    """CSV with a header row; floats use the shortest round-trip representation."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_outputs(csv_path, header, rows, sidecar):
    """Write ``csv_path`` and ``csv_path`` with a ``.json`` suffix holding ``sidecar``."""
    from pathlib import Path
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(csv_text(header, rows))
    json_path = csv_path.with_suffix('.json')
    json_path.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + '\n')
    return csv_path, json_path


def fit_order(dt, err):
    """Least-squares slope of ``log err`` against ``log dt``."""
    dt = np.asarray(dt, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = err > 0
    if ok.sum() < 2:
        return float('nan')
    return float(np.polyfit(np.log(dt[ok]), np.log(err[ok]), 1)[0])


def freedman_diaconis(values, bins='fd'):
    """Histogram ``(counts, edges)`` of the finite entries of ``values``."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return np.zeros(0, dtype=int), np.zeros(1)
    edges = np.histogram_bin_edges(v, bins=bins)
    counts, edges = np.histogram(v, bins=edges)
    return counts, edges


# ---------------------------------------------------------------------------
# drive schedules

@dataclass(frozen=True)
class Pulse:
    """Spin current ``i_s`` on during ``[start, start + duration)``.

    ``i_s`` may be ``(..., 3)`` and ``start``/``duration`` may be arrays, to
    give each ensemble member its own pulse.
    """

    i_s: np.ndarray
    duration: object
    start: object = 0.0


@dataclass(frozen=True)
class DriveSchedule:
    """Constant field plus a constant current and piecewise-constant pulses."""

    h_app: np.ndarray = field(default_factory=lambda: np.zeros(3))
    i_s: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pulses: tuple = ()

    def __call__(self, t):
        i = np.asarray(self.i_s, dtype=float)
        for pl in self.pulses:
            start = np.asarray(pl.start, dtype=float)
            on = (t >= start) & (t < start + np.asarray(pl.duration, dtype=float))
            i = i + np.asarray(on, dtype=float)[..., None] * np.asarray(pl.i_s, dtype=float)
        return DriveInput(h_app=self.h_app, i_s=i)

    @classmethod
    def constant(cls, drive=NO_DRIVE):
        return cls(h_app=drive.h_app, i_s=drive.i_s)


# ---------------------------------------------------------------------------
# single trajectories

@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    method: str
    dt: float
    seed: int
    iterations: np.ndarray
    representation: str = 'cartesian'
    angles: np.ndarray = None

    @property
    def norm_series(self):
        return vm.norm(self.states)

    def rows(self):
        n = self.norm_series
        for k in range(len(self.times)):
            yield (self.times[k], *self.states[k], n[k])

    header = ('t', 'mx', 'my', 'mz', 'norm')


def simulate(p, schedule=None, config=SolverConfig(), seed=0, m0=None, t_end=100.0,
             representation='cartesian', noise=True):
    """Integrate one path of the s-LLGS from ``m0`` (default the easy axis) to ``t_end``.

    Thermal noise is drawn from stream 0 of ``seed`` when ``noise`` is set
    and the temperature is positive.  A :class:`~sllgs.integrators.ConvergenceError`
    propagates with its ``step_index``.
    """
    schedule = DriveSchedule() if schedule is None else schedule
    m0 = p.n if m0 is None else np.asarray(m0, dtype=float)
    n = int(round(t_end / config.dt))
    if n < 1:
        raise ValueError('t_end must cover at least one step')
    if noise and p.temperature > 0:
        inc = brownian.generate(seed, n, config.dt).increments
    else:
        inc = np.zeros((n, 3))
    if representation == 'cartesian':
        times, X, iters = integrate(LlgsSystem(p, schedule), m0, inc, config)
        return Trajectory(times, X, config.resolved_method, config.dt, seed, iters)
    if representation == 'spherical':
        theta, phi = vm.to_spherical(m0)
        times, A, iters = integrate(SphericalLlgsSystem(p, schedule), np.array([theta, phi]),
                                    inc, config)
        return Trajectory(times, vm.to_cartesian(A[:, 0], A[:, 1]), config.resolved_method,
                          config.dt, seed, iters, 'spherical', A)
    raise ValueError(f'unknown representation {representation!r}')


# ---------------------------------------------------------------------------
# test-SDE error curves

@dataclass
class ErrorCurve:
    method: str
    dt: np.ndarray
    errors: np.ndarray
    n_paths: int
    std_errors: np.ndarray = None
    label: str = 'strong'

    @property
    def order(self):
        return fit_order(self.dt, self.errors)

    def local_slopes(self):
        return np.diff(np.log(self.errors)) / np.diff(np.log(self.dt))

    def rows(self):
        se = self.std_errors if self.std_errors is not None else np.full(len(self.dt), np.nan)
        for k in range(len(self.dt)):
            yield (self.method, self.label, self.dt[k], self.errors[k], se[k], self.n_paths,
                   self.order)

    header = ('method', 'kind', 'dt', 'error', 'std_error', 'n_paths', 'fitted_order')


def nested_levels(dt_levels, t_end=1.0):
    """Validate and sort step sizes; each must be an integer multiple of the finest.

    Returns ``(dts_descending, finest, factors)``.
    """
    dts = np.sort(np.asarray(dt_levels, dtype=float))[::-1]
    if dts.size == 0 or np.any(dts <= 0):
        raise ValueError('dt levels must be positive')
    finest = dts[-1]
    factors = dts / finest
    if np.any(np.abs(factors - np.round(factors)) > 1e-9):
        raise ValueError('dt levels are not nested: each must be an integer multiple of the finest')
    n_fine = t_end / finest
    if abs(n_fine - round(n_fine)) > 1e-9:
        raise ValueError('the finest dt must divide t_end')
    factors = np.round(factors).astype(int)
    if int(round(n_fine)) % factors.max():
        raise ValueError('every dt level must divide t_end')
    return dts, finest, factors


def _test_paths(seed, n_paths, n_fine, finest, start=0):
    return brownian.ensemble_values(seed, n_paths, n_fine, finest, dimensions=1, start=start)


def _method_config(method, dt, **kw):
    allow = method == 'adams-midpoint'
    return SolverConfig(method=method, dt=dt, allow_demonstrator=allow, **kw)


def strong_error_study(system=None, methods=('euler-heun',), dt_levels=(), n_paths=500, seed=0,
                       t_end=1.0, x0=1.0, chunk_size=DEFAULT_CHUNK, threads=1):
    """Mean ``|X_N - X(t_end)|`` per method and step, every method on the same paths.

    ``system`` must provide ``exact(t, W_t, x0)``; it defaults to the linear
    test SDE with ``a = b = 1``.  Returns ``{method: ErrorCurve}``.
    """
    system = LinearTestSde() if system is None else system
    dts, finest, factors = nested_levels(dt_levels, t_end)
    n_fine = int(round(t_end / finest))

    def chunk(a, b):
        W = _test_paths(seed, b - a, n_fine, finest, start=a)       # (paths, n+1, 1)
        exact = system.exact(t_end, W[:, -1, 0], x0)
        out = {}
        for m in methods:
            errs = []
            for dt, k in zip(dts, factors):
                inc = np.diff(brownian.coarsen_values(W, k, axis=1), axis=1).transpose(1, 0, 2)
                _, x, _ = integrate(system, np.full((b - a, 1), x0), inc, _method_config(m, dt),
                                    record=False)
                errs.append(np.abs(x[:, 0] - exact))
            out[m] = np.stack(errs)
        return out

    parts = map_chunks(chunk, n_paths, chunk_size, threads)
    curves = {}
    for m in methods:
        e = np.concatenate([p[m] for p in parts], axis=1)
        curves[m] = ErrorCurve(m, dts, e.mean(axis=1), n_paths,
                               e.std(axis=1, ddof=1) / np.sqrt(n_paths))
    return curves


def weak_error_study(system=None, method='heun', dt_levels=(), n_paths=10_000, seed=0,
                     moments=(1, 2), t_end=1.0, x0=1.0, estimator='paired',
                     chunk_size=DEFAULT_CHUNK, threads=1):
    """``|E p(X_N) - E p(X(t_end))|`` for ``p(x) = x^k``, ``k`` in ``moments``.

    ``estimator='analytic'`` compares the sample mean with ``system.moment``.
    ``'paired'`` averages ``p(X_N) - p(X_exact)`` over the same paths, which
    estimates the same bias with far less variance (the exact solution's mean
    equals the analytic moment).  Returns ``{k: ErrorCurve}``.
    """
    if estimator not in ('paired', 'analytic'):
        raise ValueError(f'unknown estimator {estimator!r}')
    system = LinearTestSde() if system is None else system
    dts, finest, factors = nested_levels(dt_levels, t_end)
    n_fine = int(round(t_end / finest))

    def chunk(a, b):
        W = _test_paths(seed, b - a, n_fine, finest, start=a)
        exact = system.exact(t_end, W[:, -1, 0], x0)
        res = []
        for dt, k in zip(dts, factors):
            inc = np.diff(brownian.coarsen_values(W, k, axis=1), axis=1).transpose(1, 0, 2)
            _, x, _ = integrate(system, np.full((b - a, 1), x0), inc, _method_config(method, dt),
                                record=False)
            res.append(x[:, 0])
        return np.stack(res), exact

    parts = map_chunks(chunk, n_paths, chunk_size, threads)
    X = np.concatenate([p[0] for p in parts], axis=1)
    ex = np.concatenate([p[1] for p in parts])
    curves = {}
    for k in moments:
        if estimator == 'paired':
            d = X ** k - ex ** k
        else:
            d = X ** k - system.moment(t_end, k, x0)
        curves[k] = ErrorCurve(method, dts, np.abs(d.mean(axis=1)), n_paths,
                               d.std(axis=1, ddof=1) / np.sqrt(n_paths), label=f'weak-p{k}')
    return curves


def crossover_dt(curve):
    """Step where the quadratic and linear parts of a fitted error curve meet.

    Fits ``err = A dt^2 + B dt`` with non-negative ``A, B`` and returns
    ``B / A``: above it the deterministic (quadratic) error dominates.
    """
    dt = np.asarray(curve.dt, dtype=float)
    err = np.asarray(curve.errors, dtype=float)
    # relative weighting so every level counts equally
    M = np.stack([dt ** 2 / err, dt / err], axis=1)
    (A, B), _ = optimize.nnls(M, np.ones_like(err))
    if A <= 0:
        return 0.0
    return float(B / A)


# ---------------------------------------------------------------------------
# s-LLGS norm and path studies

def _llgs_paths(seed, t_end, finest, n_paths):
    n = int(round(t_end / finest))
    return brownian.ensemble_values(seed, n_paths, n, finest, dimensions=3)


@dataclass
class NormStudy:
    dt: np.ndarray
    max_deviation: dict
    final_norm: dict
    t_end: float

    def rows(self):
        for m in self.max_deviation:
            for k, dt in enumerate(self.dt):
                yield (m, dt, self.max_deviation[m][k], self.final_norm[m][k])

    header = ('method', 'dt', 'max_norm_deviation', 'final_norm')


def norm_deviation_study(p, methods=('implicit-midpoint', 'heun'), dt_levels=(0.1,), t_end=100.0,
                         seed=0, m0=None, schedule=None, gauss_newton_tol=1e-12, n_paths=1):
    """Max ``| |m| - 1 |`` along each run, every method on the same noise path(s).

    The finest step sets the base resolution; coarser steps are exact
    coarsenings of it.
    """
    dts, finest, factors = nested_levels(dt_levels, t_end)
    W = _llgs_paths(seed, t_end, finest, n_paths)
    m0 = p.n if m0 is None else np.asarray(m0, dtype=float)
    x0 = np.broadcast_to(m0, (n_paths, 3)).copy()
    system = LlgsSystem(p, schedule if schedule is not None else NO_DRIVE)
    dev = {m: [] for m in methods}
    fin = {m: [] for m in methods}
    for m in methods:
        for dt, k in zip(dts, factors):
            inc = np.diff(brownian.coarsen_values(W, k, axis=1), axis=1).transpose(1, 0, 2)
            cfg = SolverConfig(method=m, dt=dt, gauss_newton_tol=gauss_newton_tol)
            _, X, _ = integrate(system, x0, inc, cfg)
            nrm = vm.norm(X)
            dev[m].append(float(np.max(np.abs(nrm - 1.0))))
            fin[m].append(float(np.max(nrm[-1])) if n_paths == 1 else nrm[-1].tolist())
    return NormStudy(dts, {m: np.array(v) for m, v in dev.items()},
                     {m: np.array(v) for m, v in fin.items()}, t_end)


def path_difference(p, method_a, method_b, dt_levels, t_end=100.0, seed=0, m0=None, schedule=None):
    """``max_t |m_a(t) - m_b(t)|`` per step size on a shared noise path."""
    dts, finest, factors = nested_levels(dt_levels, t_end)
    W = _llgs_paths(seed, t_end, finest, 1)[0]
    m0 = p.n if m0 is None else np.asarray(m0, dtype=float)
    system = LlgsSystem(p, schedule if schedule is not None else NO_DRIVE)
    out = []
    for dt, k in zip(dts, factors):
        inc = np.diff(brownian.coarsen_values(W, k), axis=0)
        Xa = integrate(system, m0, inc, SolverConfig(method=method_a, dt=dt))[1]
        Xb = integrate(system, m0, inc, SolverConfig(method=method_b, dt=dt))[1]
        out.append(float(np.max(vm.norm(Xa - Xb))))
    return dts, np.array(out)


# ---------------------------------------------------------------------------
# cartesian vs spherical

def _directed_polyline_distance(A, B, k=4):
    """Largest distance from a vertex of ``A`` to the polyline through ``B``."""
    tree = cKDTree(B)
    _, idx = tree.query(A, k=min(k, len(B)))
    idx = np.atleast_2d(idx.reshape(len(A), -1))
    best = np.full(len(A), np.inf)
    for j in range(idx.shape[1]):
        for shift in (0, -1):
            i0 = np.clip(idx[:, j] + shift, 0, len(B) - 2)
            p0, p1 = B[i0], B[i0 + 1]
            d = p1 - p0
            L = np.sum(d * d, axis=1)
            u = np.clip(np.sum((A - p0) * d, axis=1) / np.where(L > 0, L, 1.0), 0.0, 1.0)
            best = np.minimum(best, vm.norm(A - (p0 + u[:, None] * d)))
    return float(best.max())


def trajectory_distance(A, B):
    """Symmetric Hausdorff distance between two sampled curves (polylines).

    Insensitive to a lag in time along the same path, which is what
    distinguishes it from ``max_t |A(t) - B(t)|``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return max(_directed_polyline_distance(A, B), _directed_polyline_distance(B, A))


def first_crossing(times, c):
    """Linearly interpolated first time ``c`` becomes positive (nan if never)."""
    c = np.asarray(c, dtype=float)
    pos = np.nonzero(c > 0)[0]
    if pos.size == 0:
        return float('nan')
    k = int(pos[0])
    if k == 0:
        return float(times[0])
    return float(times[k - 1] + (times[k] - times[k - 1]) * (-c[k - 1]) / (c[k] - c[k - 1]))


def _local_minima(x):
    i = np.nonzero((x[1:-1] < x[:-2]) & (x[1:-1] <= x[2:]))[0] + 1
    return x[i]


@dataclass
class FormComparison:
    dt: float
    method: str
    cartesian: Trajectory
    spherical: Trajectory
    curve_distance: float
    timewise_distance: float
    cartesian_max_norm: float
    spherical_norm_deviation: float
    cartesian_reversal: float
    spherical_reversal: float
    spherical_envelope_drops: int
    spherical_final_window_range: float

    def summary(self):
        d = asdict(self)
        d.pop('cartesian')
        d.pop('spherical')
        return d


def envelope_drops(times, mx, t_rev):
    """Number of times a local minimum of ``mx`` after ``t_rev`` is below the previous one.

    A damped approach to the new easy direction spirals inward, so its
    minima rise monotonically; a count above zero marks an oscillation that
    does not settle.  The first minimum after the crossing is skipped.
    """
    if not math.isfinite(t_rev):
        return 0
    mins = _local_minima(np.asarray(mx)[np.asarray(times) >= t_rev])
    if mins.size < 3:
        return 0
    return int(np.sum(np.diff(mins[1:]) < 0))


def compare_forms(p, h_app=(1.0, 0.0, 0.0), dt=0.01, t_end=600.0, method='heun', tilt=0.05):
    """Deterministic reversal in both representations from near ``-h_app``.

    The start is ``-x`` rotated in the plane by ``tilt`` radians (angles
    ``theta = pi/2``, ``phi = pi - tilt``).
    """
    pt = p.replace(temperature=0.0)
    drive = DriveSchedule(h_app=np.asarray(h_app, dtype=float))
    m0 = vm.to_cartesian(np.pi / 2, np.pi - tilt)
    cfg = SolverConfig(method=method, dt=dt)
    with np.errstate(invalid='ignore', over='ignore'):
        cart = simulate(pt, drive, cfg, m0=m0, t_end=t_end, noise=False)
        sph = simulate(pt, drive, cfg, m0=m0, t_end=t_end, noise=False, representation='spherical')
        finite = np.all(np.isfinite(cart.states), axis=1)
        curve = trajectory_distance(sph.states, cart.states[finite]) if finite.all() else float('inf')
        timewise = float(np.max(vm.norm(sph.states - cart.states))) if finite.all() else float('inf')
        cnorm = float(np.nanmax(np.where(finite, cart.norm_series, np.inf)))
    t_sph = first_crossing(sph.times, sph.states[:, 0])
    tail = sph.states[int(0.8 * len(sph.times)):, 0]
    return FormComparison(
        dt, method, cart, sph, curve, timewise, cnorm,
        float(np.max(np.abs(sph.norm_series - 1.0))),
        first_crossing(cart.times, cart.states[:, 0]), t_sph,
        envelope_drops(sph.times, sph.states[:, 0], t_sph),
        float(np.ptp(tail)),
    )


# ---------------------------------------------------------------------------
# ensembles in real magnets

def _equilibrate(system, x, stepper, stream, n_eq, dt):
    for k in range(n_eq):
        x = stepper(system, x, k * dt, stream.next())
    return x


@dataclass
class SwitchingMap:
    amplitudes: np.ndarray
    durations: np.ndarray
    switched: np.ndarray          # counts, shape (n_amp, n_dur)
    n_paths: int
    method: str
    dt: float

    @property
    def probability(self):
        return self.switched / self.n_paths

    @property
    def sigma(self):
        """Binomial standard error per cell, floored at ``1/n`` for empty or full cells."""
        q = self.probability
        return np.sqrt(np.maximum(q * (1 - q), 1.0 / self.n_paths) / self.n_paths)

    def monotonicity_violations(self, n_sigma=3.0):
        """Adjacent pairs where the probability drops by more than ``n_sigma`` joint sigmas.

        Returns a list of ``(axis, i, j)`` for the pair ``(i,j)`` and its successor
        along ``axis`` (0 = amplitude, 1 = duration).
        """
        q, s = self.probability, self.sigma
        bad = []
        for axis in (0, 1):
            dq = np.diff(q, axis=axis)
            a = s[:-1, :] if axis == 0 else s[:, :-1]
            b = s[1:, :] if axis == 0 else s[:, 1:]
            tol = n_sigma * np.sqrt(a * a + b * b)
            for i, j in zip(*np.nonzero(dq < -tol)):
                bad.append((axis, int(i), int(j)))
        return bad

    def boundary(self, level):
        """Smallest amplitude reaching ``level`` per duration (linear interpolation, nan if none)."""
        q = self.probability
        out = np.full(len(self.durations), np.nan)
        for j in range(len(self.durations)):
            col = q[:, j]
            hit = np.nonzero(col >= level)[0]
            if hit.size == 0:
                continue
            i = int(hit[0])
            if i == 0:
                out[j] = self.amplitudes[0]
            else:
                a0, a1 = self.amplitudes[i - 1], self.amplitudes[i]
                out[j] = a0 + (a1 - a0) * (level - col[i - 1]) / (col[i] - col[i - 1])
        return out

    def nested_boundaries(self, inner=0.9, outer=0.5):
        """True if every cell at ``inner`` probability is also at ``outer`` and the
        ``outer`` boundary never lies at a larger amplitude than the ``inner`` one."""
        q = self.probability
        if np.any((q >= inner) & ~(q >= outer)):
            return False
        b_in, b_out = self.boundary(inner), self.boundary(outer)
        both = np.isfinite(b_in) & np.isfinite(b_out)
        if np.any(np.isfinite(b_in) & ~np.isfinite(b_out)):
            return False
        return bool(np.all(b_out[both] <= b_in[both] + 1e-12))

    def rows(self):
        q = self.probability
        for i, a in enumerate(self.amplitudes):
            for j, d in enumerate(self.durations):
                yield (a, d, int(self.switched[i, j]), self.n_paths, q[i, j])

    header = ('amplitude', 'duration', 'switched', 'n_paths', 'probability')


def switching_map(p, amplitudes, durations, n_paths=200, config=SolverConfig(dt=0.25), seed=0,
                  equilibration_time=250.0, relax_time=250.0, chunk_size=DEFAULT_CHUNK, threads=1):
    """Fraction of paths ending in the ``+n`` well after a current pulse.

    Every path starts at ``-n`` and is thermalised for ``equilibration_time``
    before a pulse ``i_s = amplitude * n`` of the given duration; the state is
    read after the longest pulse plus ``relax_time``.  Path ``k`` of every
    cell uses the same noise stream (common random numbers), which keeps
    neighbouring cells statistically comparable.
    """
    amps = np.asarray(amplitudes, dtype=float)
    durs = np.asarray(durations, dtype=float)
    dt = config.dt
    n_eq = int(round(equilibration_time / dt))
    n_run = int(round((durs.max() + relax_time) / dt))
    n_cells = amps.size * durs.size
    amp_of = np.repeat(amps, durs.size)
    dur_of = np.tile(durs, amps.size)
    stepper = Stepper(config)
    quiet = LlgsSystem(p)

    def chunk(a, b):
        members = np.arange(a, b)
        stream = brownian.NoiseStream(seed, members % n_paths, dt)
        cell = members // n_paths
        x = np.tile(-p.n, (b - a, 1))
        x = _equilibrate(quiet, x, stepper, stream, n_eq, dt)
        sched = DriveSchedule(pulses=(Pulse(amp_of[cell][:, None] * p.n, dur_of[cell]),))
        system = LlgsSystem(p, sched)
        for k in range(n_run):
            x = stepper(system, x, k * dt, stream.next())
        return vm.dot(x, p.n) > 0

    flags = np.concatenate(map_chunks(chunk, n_cells * n_paths, chunk_size, threads))
    counts = flags.reshape(amps.size, durs.size, n_paths).sum(axis=2)
    return SwitchingMap(amps, durs, counts, n_paths, config.resolved_method, dt)


@dataclass
class Distribution:
    """Samples of a scalar (nan marks paths that never produced one)."""

    values: np.ndarray
    method: str
    dt: float
    seed: int
    label: str
    bins: object = 'fd'

    @property
    def finite(self):
        return self.values[np.isfinite(self.values)]

    @property
    def overflow(self):
        return int(np.sum(~np.isfinite(self.values)))

    @property
    def mean(self):
        return float(np.mean(self.finite)) if self.finite.size else float('nan')

    @property
    def std_error(self):
        f = self.finite
        return float(np.std(f, ddof=1) / np.sqrt(f.size)) if f.size > 1 else float('nan')

    def histogram(self):
        """``(counts, edges, overflow)``; Freedman-Diaconis bins unless ``bins`` is set."""
        counts, edges = freedman_diaconis(self.values, self.bins)
        return counts, edges, self.overflow

    def rows(self):
        counts, edges, over = self.histogram()
        for k, c in enumerate(counts):
            yield (edges[k], edges[k + 1], int(c))
        yield (edges[-1] if len(edges) else float('nan'), float('inf'), over)

    header = ('bin_low', 'bin_high', 'count')


def reversal_delay_pdf(p, i_s, n_paths=500, config=SolverConfig(dt=0.25), seed=0,
                       equilibration_time=250.0, pulse_duration=None, horizon=None,
                       m0=None, chunk_size=DEFAULT_CHUNK, threads=1):
    """First time ``m . n`` turns positive after a current ``i_s`` is switched on.

    ``i_s`` is a scalar (current along ``n``) or a vector.  Paths start at
    ``m0`` (default ``-n``) and are thermalised for ``equilibration_time``.
    With ``pulse_duration`` the current stops after that long and the
    horizon defaults to five pulse durations; otherwise the current stays on
    until ``horizon``.  Paths that never switch are recorded as nan.
    """
    i_vec = np.asarray(i_s, dtype=float)
    if i_vec.ndim == 0:
        i_vec = i_vec * p.n
    if horizon is None:
        if pulse_duration is None:
            raise ValueError('give a horizon or a pulse duration')
        horizon = 5.0 * pulse_duration
    dt = config.dt
    n_eq = int(round(equilibration_time / dt))
    n_run = int(round(horizon / dt))
    start = -p.n if m0 is None else np.asarray(m0, dtype=float)
    stepper = Stepper(config)
    quiet = LlgsSystem(p)
    if pulse_duration is None:
        system = LlgsSystem(p, DriveInput(i_s=i_vec))
    else:
        system = LlgsSystem(p, DriveSchedule(pulses=(Pulse(i_vec, pulse_duration),)))

    def chunk(a, b):
        stream = brownian.NoiseStream(seed, range(a, b), dt)
        x = np.tile(start, (b - a, 1))
        x = _equilibrate(quiet, x, stepper, stream, n_eq, dt)
        delay = np.full(b - a, np.nan)
        prev = vm.dot(x, p.n)
        for k in range(n_run):
            x = stepper(system, x, k * dt, stream.next())
            c = vm.dot(x, p.n)
            new = np.isnan(delay) & (c > 0)
            if np.any(new):
                delay[new] = dt * (k + (-prev[new]) / (c[new] - prev[new]))
            prev = c
            if not np.any(np.isnan(delay)):
                break
        return delay

    delays = np.concatenate(map_chunks(chunk, n_paths, chunk_size, threads))
    return Distribution(delays, config.resolved_method, dt, seed, 'reversal_delay')


def initial_angle_distribution(p, n_paths=10_000, equilibration_time=250.0,
                               config=SolverConfig(dt=0.25), seed=0, m0=None, fold=True,
                               chunk_size=DEFAULT_CHUNK, threads=1):
    """Angle between ``m`` and the easy axis after thermal noise alone.

    With ``fold`` the angle is measured to the nearer easy direction
    (``arccos |m.n| / |m|``, in ``[0, pi/2]``).
    """
    dt = config.dt
    n_eq = int(round(equilibration_time / dt))
    start = p.n if m0 is None else np.asarray(m0, dtype=float)
    stepper = Stepper(config)
    system = LlgsSystem(p)

    def chunk(a, b):
        x = np.tile(start, (b - a, 1))
        if p.temperature > 0:
            stream = brownian.NoiseStream(seed, range(a, b), dt)
            x = _equilibrate(system, x, stepper, stream, n_eq, dt)
        c = vm.dot(x, p.n) / vm.norm(x)
        if fold:
            c = np.abs(c)
        return np.arccos(np.clip(c, -1.0, 1.0))

    theta = np.concatenate(map_chunks(chunk, n_paths, chunk_size, threads))
    return Distribution(theta, config.resolved_method, dt, seed, 'angle')


def _frame(n):
    n = np.asarray(n, dtype=float)
    helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    return n, u, np.cross(n, u)


def boltzmann_angle_cdf(p, drive=NO_DRIVE, fold=True, n_theta=4001, n_phi=256):
    """Equilibrium CDF of the angle to the easy axis, by quadrature.

    The density on the sphere is ``exp(-E(m)/kB T)``; ``theta`` is measured
    from ``n`` and the azimuth around ``n`` is integrated out.  Returns a
    callable ``F(theta)``.
    """
    if p.temperature <= 0:
        raise ValueError('the Boltzmann distribution needs a positive temperature')
    top = np.pi / 2 if fold else np.pi
    th = np.linspace(0.0, np.pi, 2 * (n_theta - 1) + 1 if fold else n_theta)
    ph = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    n, u, v = _frame(p.n)
    T, P = np.meshgrid(th, ph, indexing='ij')
    m = (np.cos(T)[..., None] * n + (np.sin(T) * np.cos(P))[..., None] * u
         + (np.sin(T) * np.sin(P))[..., None] * v)
    E = total_energy(m, p, drive) / (p.kB * p.temperature)
    w = np.exp(-(E - E.min()))
    dens = np.sin(th) * w.mean(axis=1)            # periodic trapezoid in phi
    if fold:
        half = len(th) // 2
        dens = dens[:half + 1] + dens[::-1][:half + 1]
        th = th[:half + 1]
    cdf = sci_integrate.cumulative_trapezoid(dens, th, initial=0.0)
    cdf /= cdf[-1]

    def F(x):
        return np.interp(x, th, cdf, left=0.0, right=1.0)

    F.support = (0.0, top)
    return F


def ks_statistic(samples, cdf):
    """Kolmogorov-Smirnov distance between samples and a CDF."""
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def thermal_summary(p):
    return {'nu': float(thermal_nu(p)), 'barrier_kT': float(p.barrier / (p.kB * p.temperature))
            if p.temperature > 0 else float('inf')}
