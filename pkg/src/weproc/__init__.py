"""Weighted empirical process toolkit.

Simulates the centered, sqrt(n)-scaled weighted empirical process on [0, 1],
builds its limiting Gaussian covariance exactly in two independent forms,
certifies interval-wise conditional-variance bounds, and verifies the whole
construction by Monte Carlo and brute-force oracles at desk scale.
"""

from .bounds import (BoundFunction, FitResult, HypothesisReport, LinearBound,
                     PowerBound, TableBound, fit_constant, limit_zero_check,
                     ratio_bounded_check, scan_bound)
from .dist import (Atom, Distribution, Interval, PowerPart, UniformPart,
                   conditional_moments, moments_leq)
from .errors import (ConfigError, DivergenceError, DomainError, FactorizationError,
                     QuadratureBudgetError, WeprocError, ZeroMassError)
from .limit import (CovarianceModel, IncrementModel, build_increment_matrix,
                    build_matrix, cov_pair, multinomial_g_cov, sample_limit_paths,
                    var_at)
from .process import ModulusResult, SamplePath, simulate
from .seeding import stream
from .verify import (MassPartition, McEstimate, chernoff_lower, chernoff_upper,
                     check_partition, compare_cov, gamma_estimate, gamma_sweep,
                     gamma_window, marginal_normality, maximal_inequality_probe,
                     mc_covariance, partition_by_mass, poisson_tail_lower,
                     poisson_tail_upper, random_instance, tightness_probe)
from .weights import (Compensator, ConstantWeight, CosineWeight, PolynomialWeight,
                      PowerWeight, SineWeight, TableWeight, WeightFunction,
                      compensator)

__version__ = "0.1.0"
