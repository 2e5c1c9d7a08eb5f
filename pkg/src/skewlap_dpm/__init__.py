"""Laplace and skew-symmetric Laplace approximations for truncated DP mixtures.

A truncated stick-breaking mixture of Gaussians is fit by finding the
posterior mode in logit-stick / location coordinates; the Gaussian at the mode
is then corrected with a skew weight so draws pick up posterior asymmetry at
almost no extra cost. A dependent slice sampler serves as the reference.
"""
from .density import DensityEnsemble, Grid, make_grid, mixture_ordinates, ordinates
from .laplace import FactorizationError, LaplaceFit, ModeNotFoundError, find_mode, fit_laplace, gaussian_from_hessian, sample_gaussian
from .metrics import TVReport, assemble_report, grid_tv, improvement_pct, pointwise_empirical_tv
from .model import DimensionError, DPMTarget, ModelConfig, UnconstrainedParams, gradient, hessian, log_unnorm_posterior, stick_transform
from .skew import SkewWeightContext, sample_skew_laplace, skew_weight
from .slice import SliceState, complete_to_truncation, run_slice, slice_sweep

__version__ = "0.1.0"
