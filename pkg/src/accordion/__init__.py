"""Simulation, design and analysis of accordion lattices from binary phase gratings."""

from .analysis import (
    ChirpFit,
    IntensityImage,
    LinearFit,
    SinusoidFit,
    TiltFit,
    chirp_fit,
    contrast,
    fit_sinusoid,
    fit_spacing_vs_index,
    fit_spacing_vs_tilt,
    integrate_columns,
    local_spacing,
    project_sinusoid,
)
from .design import PlateDesign, TuningSolution, coverage_report, designed_spacing, select_grating
from .grating import (
    BinaryPhaseGrating,
    DiffractionOrderSpectrum,
    diffraction_angle,
    diffraction_efficiency,
    fourier_coefficient,
    fourier_coefficients_numeric,
    order_spectrum,
    phase_depth,
    structure_function,
)
from .optics import (
    FourFRelay,
    GaussianIllumination,
    Grid,
    LatticeProfile,
    SampledField1D,
    default_grid,
    far_field,
    illuminate,
    lattice_intensity_closed_form,
    relay_4f,
    simulate_lattice,
)

__version__ = "0.1.0"
