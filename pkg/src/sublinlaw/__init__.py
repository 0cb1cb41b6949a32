"""Sublinear expectations over finite ambiguity sets, and strong-law steering.

The library evaluates upper, lower and nested expectations, capacities and
Choquet integrals for a finite family of one-dimensional laws. It also
simulates paths under adapted mixture kernels whose running means converge
to a chosen limit or oscillate over a chosen interval.
"""

__version__ = "0.1.0"

from .ambiguity import (AmbiguitySet, Atoms, Distribution, ExtremalPair, Gaussian, Uniform, dist_expect,
                        distribution_from_dict, extremal_pair, point_mass, sample)
from .functions import TestFunction, from_spec, register
from .quadrature import QuadratureError, integrate
from .simulate import (BucketStat, Path, baseline_path, calibration_buckets, convergence_verdict,
                       estimate_cluster_set, martingale_residuals, simulate_path, simulate_paths, tail_deviation)
from .steering import (MixtureKernel, OscillationSchedule, ScheduleOverflowError, SteeringContractError,
                       TargetSequence, clamp_to_interval, kernel_sample, make_constant_targets,
                       make_finite_dim_targets, make_oscillating_targets, mixture_weight, oscillation_schedule)
from .sublinear import (Event, GridResolutionError, MeanFunctional, NestedResult, TailTooHeavyError,
                        TruncatedMean, choquet_lower, choquet_upper, lower_capacity, lower_expectation,
                        nested_expectation, nested_expectation_detail, tail_bound, truncate, truncated_mean_limit,
                        upper_capacity, upper_expectation)

__all__ = [name for name in dir() if not name.startswith("_")]
