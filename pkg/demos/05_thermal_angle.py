"""Equilibrium angle to the easy axis compared with the Boltzmann distribution."""
import numpy as np

from sllgs import magnet as mg
from sllgs.experiments import boltzmann_angle_cdf, initial_angle_distribution, ks_statistic
from sllgs.integrators import SolverConfig

p = mg.params_for_barrier(10.0, Ms=1.11e6, Hk=1.11e6, alpha=0.1)
dt = float(p.to_normalized_time(1e-12))
cdf = boltzmann_angle_cdf(p)
for method in ('implicit-midpoint', 'backward-euler'):
    dist = initial_angle_distribution(p, n_paths=2000, equilibration_time=1000 * dt,
                                      config=SolverConfig(method=method, dt=dt), seed=5)
    theta = dist.finite
    print(f'{method:>18s}: mean angle {np.degrees(theta.mean()):6.2f} deg, '
          f'KS distance {ks_statistic(theta, cdf):.4f}')

# Backward Euler damps the thermal noise, so its angles creep towards the axis.
