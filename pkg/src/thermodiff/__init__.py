"""Entropy rate of a thermally diffusing free particle.

Analytic variances and entropy rates, an FFT wavepacket propagator, and
seeded Monte Carlo ensembles that check R = 2 k_B T / hbar from independent
directions.
"""

__version__ = "0.1.0"

from .analytic import (
    RateCurvePoint,
    RateMethod,
    VarianceBreakdown,
    bound_report,
    gaussian_entropy,
    rate_block,
    rate_conditional,
    rate_exact,
    variance_classical,
    variance_quantum,
    variance_total,
)
from .ensemble import (
    Estimator,
    Scheme,
    TrajectoryEnsemble,
    ensemble_stats,
    entropy_nn,
    rate_from_ensemble,
    sample_trajectories,
)
from .spectral import (
    SpatialGrid,
    SpectralState,
    grid_for,
    grid_moments,
    pdf_closed_form,
    psi_closed_form,
    spectral_evolve,
    spectral_initialize,
)
from .units import (
    DerivedScales,
    PhysicalParams,
    UnitSystem,
    derive_scales,
    make_params,
    validate_timestep,
)
