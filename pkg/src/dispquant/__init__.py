"""Dispersive quantization on the torus: Talbot evolution, fractal dimensions, and frame NLS."""
from .spectral import GridField, SpectralField, StepFunction, from_spectral, sobolev_norm, step_fourier, to_spectral
from .linear import DispersionLaw, RationalTime, evolve_linear, talbot_rational, talbot_weights
from .diophantine import ContinuedFractionExpansion, continued_fraction, dirichlet_q
from .regularity import DimensionEstimate, besov_exponent, box_dimension, dimension_sandwich, lp_blocks
from .nonlinear import ConservationReport, NlsParams, kdv_evolve, nls_evolve, smoothing_probe
from .sphere import (
    Filament,
    SphereCurve,
    SphereFrameState,
    hasimoto_extract,
    holonomy,
    parallel_frame,
    planar_curve_from_curvature,
    sm_evolve,
    vfe_reconstruct,
)
from .experiments import ExperimentSpec, RunReport, SpecError, run
from .svg import emit_svg
from ._validation import BlowUpError, InvariantViolation

__version__ = "0.1.0"
