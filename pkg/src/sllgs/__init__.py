"""Macrospin s-LLGS dynamics and Stratonovich SDE integrators."""

from .magnet import DriveInput, MagnetParams, effective_field, thermal_nu, thermal_sigma
from .dynamics import critical_dt, diffusion, drift, spherical_rhs
from .brownian import BrownianPath, generate, coarsen
from .integrators import (
    ConvergenceError, LinearTestSde, LlgsSystem, SolverConfig, SphericalLlgsSystem,
    Stepper, integrate,
)

__version__ = '0.1.0'
