"""Long-memory generalized dynamic factor models: simulation, dynamic PCA and diagnostics."""

from .fracsim import AR1Toeplitz, ModelSpec, TimeSeriesPanel, WhiteNoise, analytic_spectrum, simulate_panel
from .spectral import FrequencyGrid, SpectralField, smoothed_spectrum
from .eigenproj import ProjectionField, hermitian_eig, projection_field
from .filterbank import FilterBank, feasible_estimate, oracle_bank, static_pca_estimate

__version__ = "0.1.0"

__all__ = [
    "AR1Toeplitz",
    "FilterBank",
    "FrequencyGrid",
    "ModelSpec",
    "ProjectionField",
    "SpectralField",
    "TimeSeriesPanel",
    "WhiteNoise",
    "analytic_spectrum",
    "feasible_estimate",
    "hermitian_eig",
    "oracle_bank",
    "projection_field",
    "simulate_panel",
    "smoothed_spectrum",
    "static_pca_estimate",
]
