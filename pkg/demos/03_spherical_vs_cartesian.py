"""Deterministic reversal in a transverse field, integrated in both coordinate systems."""
from sllgs import magnet as mg
from sllgs.experiments import compare_forms

p = mg.reference_params(temperature=0.0)
for dt in (0.01, 0.1, 0.3):
    cmp = compare_forms(p, dt=dt, t_end=600.0, method='heun')
    print(f'dt = {dt}')
    for key, value in cmp.summary().items():
        print(f'    {key:28s} {value}')

# At small steps both forms give the same orbit.  At the large step the
# cartesian norm escapes while the spherical one is exact, yet the spherical
# orbit no longer relaxes monotonically towards the field.
