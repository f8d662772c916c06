"""Diffusion in front of a moving wall b(t) = c((1+t)^beta - 1).

Closed-form kernels for the linear wall, an exponentially fitted finite-volume
solver for every self-similar frame, reflected random walkers, and entropy
diagnostics.
"""
from .boundary import BoundaryMotion, Regime, ScalingMap, scaling_map
from .diagnostics import (InequalityVerdict, RateFit, boundary_value, check_csiszar_kullback,
                          check_log_sobolev, first_moment, fisher_information, fit_rate, l1_distance,
                          relative_entropy)
from .experiments import RunResult, schedule_for, solve
from .fv import DensityField, FPProblem, Frame, Grid, SolverError, build, run, step
from .kernels import (CompactInitialData, QuadratureError, erfc, exact_solution_linear, extend_initial_data,
                      gauss_kernel, neumann_kernel, robin_drift_kernel)
from .particles import ParticleEnsemble, advance, empirical_density, mean_position
from .profiles import Profile, make_profile, physical_approximant

__version__ = "0.1.0"
