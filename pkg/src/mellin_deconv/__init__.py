"""Recover the density of a random time T from samples of B_T or L_T.

Two estimators are provided: a Mellin-transform route for Brownian
observations (:mod:`mellin_deconv.sse`) and a characteristic-function route
for general Levy processes (:mod:`mellin_deconv.gsse`).
"""
from .errors import *  # noqa: F401,F403
from .gsse import (GsseConfig, LevyModel, brownian_drift, char_exponent, contour_condition_check,
                   cutoffs, estimate_gsse, phi_n, stable, triplet)
from .harness import (ExperimentConfig, ExperimentReport, export_report, normality_diagnostic,
                      rate_regression, run_experiment)
from .mellin import (MellinFunction, SampleSet, analytic_mellin, empirical_mellin,
                     mellin_inverse_regularized, multiplicative_convolution, smoothness_norm)
from .simulate import (ObservationModel, TimeDistribution, observation_model, sample_observations,
                       sample_times, time_distribution)
from .special import complex_gamma, complex_loggamma, kummer_1f1, reciprocal_gamma
from .sse import DensityEstimate, SseConfig, bandwidth, estimate_sse, variance_rate_rho, z_term

__version__ = "0.1.0"
