"""Wave optics and photon-counting simulation of a biprism interferometer with a grating."""

__version__ = "0.1.0"

from .wave_optics import (  # noqa: E402
    ComplementarityRecord,
    GratingSpec,
    OpticalSetup,
    amplitude_path1,
    amplitude_path2,
    analytic_distinguishability,
    analytic_visibility,
    intensity_at,
    make_setup,
    numeric_oracle_amplitude,
    probability_distinguishability,
)

REFERENCE_SETUP = dict(wavelength=670e-9, n=1.51, beta=7.5e-3)
REFERENCE_SLIT_WIDTHS_M = (20e-6, 50e-6, 70e-6, 80e-6)

__all__ = [
    "ComplementarityRecord",
    "GratingSpec",
    "OpticalSetup",
    "REFERENCE_SETUP",
    "REFERENCE_SLIT_WIDTHS_M",
    "amplitude_path1",
    "amplitude_path2",
    "analytic_distinguishability",
    "analytic_visibility",
    "intensity_at",
    "make_setup",
    "numeric_oracle_amplitude",
    "probability_distinguishability",
]
