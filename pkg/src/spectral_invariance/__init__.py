"""Invariance-aware spectral estimation of distributions on flat tori."""
from .distributions import BoxSumSpec, DiracMixture, FieldOracle, effective_regularity, sobolev_norm
from .divergences import (
    DivergenceResult,
    SpectralKernel,
    l2_error,
    linf_error,
    mmd,
    mmd_vs_oracle,
    sobolev_ipm,
    sobolev_ipm_vs_oracle,
    w1_upper,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    DimensionMismatch,
    GridTooCoarse,
    NonConvergentTail,
    RegimeError,
    SpectralError,
    UnsupportedAction,
)
from .estimators import CoefficientField, EstimatorSpec, empirical_coefficients, estimate
from .groups import GroupAction, invariant_projector, quotient_dim, quotient_vol, weyl_count_invariant
from .harness import ConvergenceCurve, CurveSpec, ExperimentConfig, MetricSpec, fit_slope, run_convergence
from .quantities import SpectralSumResult, theta, trace_heat, weyl_fit, zeta
from .spectrum import BasisElement, SpectrumSlice, enumerate_spectrum, weyl_count

__version__ = "0.1.0"
