"""Higher-order approximations to p-value distributions.

Edgeworth predictions of the p-value CDF for continuous and lattice
statistics, saddlepoint and r* corrected p-values, and a seeded Monte Carlo
harness.
"""

from .cumulants import (CumulantSet, FamilySpec, LatticeSpec, TestStatCalibration, calibrate, cgf,
                        empirical_cumulants)
from .edgeworth import PValueCurve, Sidedness, c2, e2, pvalue_cdf, pvalue_curve, pvalue_pdf
from .errors import (ConfigError, ConvergenceError, DegenerateError, DomainError, NoSaddlepointError,
                     SeparationError)
from .harness import ExperimentConfig, ExperimentResult, run_experiment
from .metrics import classify_shape, empirical_cdf, ks_distance, type1_error
from .models import (DataSet, GammaKnownShape, LogisticRegression, ModelFit, TestResult, WeibullRegression,
                     fit_constrained, fit_mle, linkage_tests, score_test_glm, wald_test)
from .rstar import RStarResult, likelihood_root, q_factor, rstar_pvalue
from .saddlepoint import SaddleSolution, corrected_pvalue, solve_saddlepoint, tail_prob
from .specialfn import hermite, normal_cdf, normal_pdf, normal_quantile, periodic_q

__version__ = "0.1.0"
