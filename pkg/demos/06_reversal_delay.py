"""Spread of reversal delays under a spin-current pulse."""
import numpy as np

from sllgs import magnet as mg
from sllgs.experiments import reversal_delay_pdf
from sllgs.integrators import SolverConfig

p = mg.reference_params()
ps = float(p.to_normalized_time(1e-12))
i_s = float(p.normalize_current(0.16e-3))
for method in ('implicit-midpoint', 'trapezoidal'):
    d = reversal_delay_pdf(p, i_s, n_paths=100, config=SolverConfig(method=method, dt=ps), seed=9,
                           equilibration_time=250.0, pulse_duration=1000 * ps)
    counts, edges, overflow = d.histogram()
    print(f'{method:>18s}: mean delay {d.mean / ps:7.1f} ps +- {d.std_error / ps:5.1f}, '
          f'{overflow} paths without reversal')
    print('    histogram', counts.tolist())
