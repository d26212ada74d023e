"""Command-line front end: ``sllgs <subcommand> [--config FILE] [flags]``.

A run is described by a JSON file::

    {"version": 1,
     "magnet": {...MagnetParams fields...} or "reference",
     "drive": {"h_app": [..], "i_s": [..], "pulses": [{"i_s": [..], "duration": .., "start": ..}]},
     "solver": {"method": .., "dt": .. or "dt_seconds": .., "gauss_newton_tol": .., ...},
     "seed": 0, "threads": 1, "output": "run.csv",
     "params": {...subcommand specific...}}

Every block is optional.  Command-line flags override file values, which
override built-in defaults.  Unknown keys anywhere are rejected before any
computation.  Output goes to ``output``, or to ``<subcommand>.csv`` inside
``$SLLGS_OUTPUT_DIR`` (default: the working directory), with a JSON sidecar
next to it.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .dynamics import critical_dt, critical_dt_bound
from .integrators import METHODS, ConvergenceError, LinearTestSde, SolverConfig
from .magnet import ConfigError, MagnetParams, reference_params, thermal_nu

CONFIG_VERSION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
OUTPUT_ENV = 'SLLGS_OUTPUT_DIR'

TOP_KEYS = {'version', 'magnet', 'drive', 'solver', 'seed', 'threads', 'output', 'params'}
DRIVE_KEYS = {'h_app', 'i_s', 'pulses'}
PULSE_KEYS = {'i_s', 'duration', 'start'}
SOLVER_KEYS = {'method', 'dt', 'dt_seconds', 'gauss_newton_tol', 'gauss_newton_max_iter',
               'rk4_corrector', 'renormalize'}

_POW2 = lambda lo, hi: [2.0 ** -k for k in range(lo, hi + 1)]

PARAMS = {
    'simulate': dict(m0=None, t_end=100.0, representation='cartesian', noise=True),
    'convergence': dict(a=1.0, b=0.1, methods=['euler-heun', 'heun', 'implicit-midpoint', 'rk4-heun'],
                        dt_levels=_POW2(4, 10), n_paths=500, t_end=1.0),
    'weak-convergence': dict(a=1.0, b=1.0, method='heun', dt_levels=_POW2(3, 7), n_paths=10_000,
                             moments=[1, 2], t_end=1.0, estimator='paired'),
    'switchmap': dict(amplitudes=list(np.linspace(0.005, 0.04, 8)),
                      durations=list(np.linspace(25.0, 250.0, 8)), n_paths=200,
                      equilibration_time=250.0, relax_time=250.0),
    'delay-pdf': dict(i_s=None, i_s_amps=1.6e-4, n_paths=500, equilibration_time=250.0,
                      horizon=2500.0, pulse_duration=None, bins='fd'),
    'init-angle': dict(n_paths=10_000, equilibration_time=250.0, fold=True, bins='fd'),
    'norm-study': dict(methods=['implicit-midpoint', 'heun'], dt_levels=[0.2, 0.1, 0.05],
                       t_end=100.0, m0=None),
    'dtcrit': dict(h_app_norm=None, hk=None, nu=None, i_s_norm=None),
}
SUBCOMMANDS = tuple(PARAMS)


# ---------------------------------------------------------------------------
# config handling

def _check_keys(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f'{where} must be an object')
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f'unknown keys in {where}: {", ".join(unknown)}')


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f'cannot read config {path}: {err}') from err
    except json.JSONDecodeError as err:
        raise ConfigError(f'{path} is not valid JSON: {err}') from err
    return data


def validate(cfg, command):
    """Check every block of ``cfg`` for ``command``; returns a normalised copy."""
    cfg = dict(cfg)
    _check_keys(cfg, TOP_KEYS, 'config')
    version = cfg.setdefault('version', CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f'unsupported config version {version!r} (expected {CONFIG_VERSION})')
    _check_keys(cfg.get('drive', {}), DRIVE_KEYS, 'drive')
    for k, pl in enumerate(cfg.get('drive', {}).get('pulses', [])):
        _check_keys(pl, PULSE_KEYS, f'drive.pulses[{k}]')
        if 'i_s' not in pl or 'duration' not in pl:
            raise ConfigError(f'drive.pulses[{k}] needs i_s and duration')
    _check_keys(cfg.get('solver', {}), SOLVER_KEYS, 'solver')
    if 'dt' in cfg.get('solver', {}) and 'dt_seconds' in cfg['solver']:
        raise ConfigError('give solver.dt or solver.dt_seconds, not both')
    _check_keys(cfg.get('params', {}), PARAMS[command], 'params')
    params = dict(PARAMS[command])
    params.update(cfg.get('params', {}))
    cfg['params'] = params
    return cfg


def build_magnet(block):
    if block is None or block == 'reference':
        return reference_params()
    if isinstance(block, dict):
        return MagnetParams.from_dict(block)
    raise ConfigError('magnet must be "reference" or an object of MagnetParams fields')


def build_drive(block):
    block = block or {}
    try:
        pulses = tuple(ex.Pulse(np.asarray(pl['i_s'], dtype=float), float(pl['duration']),
                                float(pl.get('start', 0.0))) for pl in block.get('pulses', []))
        return ex.DriveSchedule(h_app=np.asarray(block.get('h_app', [0, 0, 0]), dtype=float),
                                i_s=np.asarray(block.get('i_s', [0, 0, 0]), dtype=float),
                                pulses=pulses)
    except (TypeError, ValueError) as err:
        raise ConfigError(f'invalid drive block: {err}') from err


def build_solver(block, p):
    block = dict(block or {})
    if 'dt_seconds' in block:
        block['dt'] = float(p.to_normalized_time(block.pop('dt_seconds')))
    try:
        return SolverConfig(**block)
    except (TypeError, ValueError) as err:
        raise ConfigError(f'invalid solver block: {err}') from err


# ---------------------------------------------------------------------------
# subcommands: each returns (header, rows, summary)

def _cmd_simulate(p, drive, solver, seed, threads, prm):
    tr = ex.simulate(p, drive, solver, seed, prm['m0'], prm['t_end'], prm['representation'],
                     prm['noise'])
    n = tr.norm_series
    summary = {'final_state': tr.states[-1], 'max_norm_deviation': float(np.max(np.abs(n - 1))),
               'gauss_newton_iterations': int(np.sum(tr.iterations))}
    return ex.Trajectory.header, tr.rows(), summary


def _cmd_convergence(p, drive, solver, seed, threads, prm):
    sde = LinearTestSde(prm['a'], prm['b'])
    curves = ex.strong_error_study(sde, prm['methods'], prm['dt_levels'], int(prm['n_paths']),
                                   seed, prm['t_end'], threads=threads)
    rows = [r for c in curves.values() for r in c.rows()]
    summary = {m: {'fitted_order': c.order, 'crossover_dt': ex.crossover_dt(c)}
               for m, c in curves.items()}
    return ex.ErrorCurve.header, rows, summary


def _cmd_weak(p, drive, solver, seed, threads, prm):
    sde = LinearTestSde(prm['a'], prm['b'])
    curves = ex.weak_error_study(sde, prm['method'], prm['dt_levels'], int(prm['n_paths']), seed,
                                 prm['moments'], prm['t_end'], estimator=prm['estimator'],
                                 threads=threads)
    rows = [r for c in curves.values() for r in c.rows()]
    summary = {f'p{k}': {'fitted_order': c.order} for k, c in curves.items()}
    return ex.ErrorCurve.header, rows, summary


def _cmd_switchmap(p, drive, solver, seed, threads, prm):
    sm = ex.switching_map(p, prm['amplitudes'], prm['durations'], int(prm['n_paths']), solver,
                          seed, prm['equilibration_time'], prm['relax_time'], threads=threads)
    summary = {'boundary_50': sm.boundary(0.5), 'boundary_90': sm.boundary(0.9),
               'monotonicity_violations': sm.monotonicity_violations(),
               'nested_boundaries': sm.nested_boundaries()}
    return sm.header, sm.rows(), summary


def _dist_summary(d):
    return {'mean': d.mean, 'std_error': d.std_error, 'overflow': d.overflow,
            'n': int(d.values.size)}


def _cmd_delay(p, drive, solver, seed, threads, prm):
    i_s = prm['i_s'] if prm['i_s'] is not None else float(p.normalize_current(prm['i_s_amps']))
    d = ex.reversal_delay_pdf(p, i_s, int(prm['n_paths']), solver, seed, prm['equilibration_time'],
                              prm['pulse_duration'], prm['horizon'], threads=threads)
    d.bins = prm['bins']
    s = _dist_summary(d)
    s['i_s'] = i_s
    s['mean_seconds'] = float(p.to_seconds(d.mean))
    return d.header, d.rows(), s


def _cmd_angle(p, drive, solver, seed, threads, prm):
    d = ex.initial_angle_distribution(p, int(prm['n_paths']), prm['equilibration_time'], solver,
                                      seed, fold=prm['fold'], threads=threads)
    d.bins = prm['bins']
    s = _dist_summary(d)
    if p.temperature > 0:
        s['ks_statistic'] = ex.ks_statistic(d.values, ex.boltzmann_angle_cdf(p, fold=prm['fold']))
    return d.header, d.rows(), s


def _cmd_norm(p, drive, solver, seed, threads, prm):
    st = ex.norm_deviation_study(p, prm['methods'], prm['dt_levels'], prm['t_end'], seed,
                                 prm['m0'], drive, solver.gauss_newton_tol)
    return st.header, st.rows(), {}


def _cmd_dtcrit(p, drive, solver, seed, threads, prm):
    explicit = [prm[k] for k in ('h_app_norm', 'hk', 'nu', 'i_s_norm')]
    if any(v is not None for v in explicit):
        h = prm['h_app_norm'] or 0.0
        hk = p.hk if prm['hk'] is None else prm['hk']
        nu = float(thermal_nu(p)) if prm['nu'] is None else prm['nu']
        value = critical_dt_bound(h, hk, nu, prm['i_s_norm'] or 0.0)
        inputs = dict(h_app_norm=h, hk=hk, nu=nu, i_s_norm=prm['i_s_norm'] or 0.0)
    else:
        d = drive(0.0)
        value = critical_dt(p, d)
        inputs = dict(h_app_norm=float(np.max(np.linalg.norm(d.h_app, axis=-1))), hk=p.hk,
                      nu=float(thermal_nu(p)),
                      i_s_norm=float(np.max(np.linalg.norm(d.i_s, axis=-1))))
    print(f'{value:.6f}')
    return ('dt_crit', 'h_app_norm', 'hk', 'nu', 'i_s_norm'), \
        [(value, *inputs.values())], {'dt_crit': value, **inputs}


COMMANDS = {
    'simulate': _cmd_simulate, 'convergence': _cmd_convergence, 'weak-convergence': _cmd_weak,
    'switchmap': _cmd_switchmap, 'delay-pdf': _cmd_delay, 'init-angle': _cmd_angle,
    'norm-study': _cmd_norm, 'dtcrit': _cmd_dtcrit,
}


# ---------------------------------------------------------------------------
# argument parsing

def _parser():
    ap = argparse.ArgumentParser(prog='sllgs', description='Macrospin s-LLGS simulations and studies.')
    ap.add_argument('--version', action='version', version=f'sllgs {__version__}')
    sub = ap.add_subparsers(dest='command', required=True, metavar='SUBCOMMAND')
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument('--config', help='JSON run configuration')
        sp.add_argument('--output', help='CSV output path (sidecar gets .json)')
        sp.add_argument('--seed', type=int)
        sp.add_argument('--threads', type=int, help='worker threads (default: all CPUs)')
        sp.add_argument('--dt', type=float, help='normalised time step')
        sp.add_argument('--method', choices=METHODS,
                        help='integration method (for convergence: the only method studied)')
        sp.add_argument('--n-paths', type=int)
        if name == 'dtcrit':
            sp.add_argument('--h-app', type=float, help='|h_app| = |H_app| / Ms')
            sp.add_argument('--hk', type=float, help='Hk / Ms')
            sp.add_argument('--nu', type=float, help='normalised noise strength')
            sp.add_argument('--i-s', type=float, help='|i_s|')
    return ap


def _merge_flags(cfg, args):
    """Flags override file values."""
    if args.output is not None:
        cfg['output'] = args.output
    if args.seed is not None:
        cfg['seed'] = args.seed
    if args.threads is not None:
        cfg['threads'] = args.threads
    solver = cfg.setdefault('solver', {})
    if args.dt is not None:
        solver.pop('dt_seconds', None)
        solver['dt'] = args.dt
    params = cfg.setdefault('params', {})
    if args.method is not None:
        if args.command == 'convergence':
            params['methods'] = [args.method]
        elif args.command == 'weak-convergence':
            params['method'] = args.method
        elif args.command == 'norm-study':
            params['methods'] = [args.method]
        else:
            solver['method'] = args.method
    if args.n_paths is not None:
        params['n_paths'] = args.n_paths
    if args.command == 'dtcrit':
        for flag, key in (('h_app', 'h_app_norm'), ('hk', 'hk'), ('nu', 'nu'), ('i_s', 'i_s_norm')):
            v = getattr(args, flag)
            if v is not None:
                params[key] = v
    if not params:
        cfg.pop('params')
    return cfg


def _output_path(cfg, command):
    if cfg.get('output'):
        return Path(cfg['output'])
    return Path(os.environ.get(OUTPUT_ENV, '.')) / f'{command}.csv'


def run(argv=None):
    """Execute one subcommand; returns the process exit code."""
    args = _parser().parse_args(argv)
    command = args.command
    try:
        cfg = load_config(args.config) if args.config else {}
        if not isinstance(cfg, dict):
            raise ConfigError('config must be a JSON object')
        cfg = validate(_merge_flags(cfg, args), command)
        p = build_magnet(cfg.get('magnet'))
        drive = build_drive(cfg.get('drive'))
        solver = build_solver(cfg.get('solver'), p)
        seed = int(cfg.get('seed', 0))
        threads = int(cfg.get('threads') or os.cpu_count() or 1)
        header, rows, summary = COMMANDS[command](p, drive, solver, seed, threads, cfg['params'])
    except ConfigError as err:
        print(f'sllgs {command}: configuration error: {err}', file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as err:
        print(f'sllgs {command}: solver failure at step {err.step_index}: {err}', file=sys.stderr)
        return EXIT_SOLVER
    except (TypeError, ValueError) as err:
        print(f'sllgs {command}: configuration error: {err}', file=sys.stderr)
        return EXIT_CONFIG

    rows = list(rows)
    if command == 'dtcrit' and not cfg.get('output'):
        return 0
    sidecar = {
        'command': command, 'sllgs_version': __version__, 'config_version': CONFIG_VERSION,
        'seed': seed, 'magnet': p.to_dict(), 'solver': asdict(solver),
        'drive': cfg.get('drive', {}), 'params': cfg['params'], 'summary': summary,
    }
    out = _output_path(cfg, command)
    ex.write_outputs(out, header, rows, sidecar)
    print(f'wrote {out}', file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
