"""Switching probability over a small grid of current amplitudes and pulse lengths."""
import numpy as np

from sllgs import magnet as mg
from sllgs.experiments import switching_map
from sllgs.integrators import SolverConfig

p = mg.reference_params()
dt = float(p.to_normalized_time(1e-12))
amps = np.linspace(0.01, 0.04, 4)
durs = np.linspace(50.0, 250.0, 4)
smap = switching_map(p, amps, durs, n_paths=48, config=SolverConfig(dt=dt * 4), seed=11,
                     equilibration_time=100.0, relax_time=150.0)

print('P(switch)   durations ->', '  '.join(f'{d:6.0f}' for d in durs))
for i, a in enumerate(amps):
    print(f'i_s = {a:.3f}          ' + '  '.join(f'{v:6.2f}' for v in smap.probability[i]))
print('\nmonotonicity violations beyond 3 sigma:', smap.monotonicity_violations(3.0))
