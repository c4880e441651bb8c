"""Simulator for fluorescence time-of-arrival measurements of atoms
crossing a finite-width laser beam.

Solves the two-channel conditional (non-Hermitian) scattering problem,
evolves incident wave packets conditioned on no photon detection, and
relates the observed first-photon distribution to the free-atom arrival
distributions by deconvolution of the emission delay.
"""

__version__ = "0.1.0"

from .model import (
    AtomLaserConfig,
    CESIUM_GAMMA_PER_S,
    CESIUM_MASS_KG,
    CONSTANTS,
    PhysicalConstants,
    RabiProfile,
    ValidatedConfig,
    cesium_config,
    derived_scales,
    load_config,
    validate,
)
from .scattering import (
    ChannelWavenumbers,
    InternalEigensystem,
    ScatteringSolution,
    absorption,
    channel_wavenumbers,
    evaluate_state,
    internal_eigensystem,
    semiclassical_T2,
    semiclassical_state,
    solve_sharp_edge,
)
from .transfer import SliceDecomposition, discretize, slice_matrix, solve_profile
from .wavepacket import (
    ConditionalPropagator,
    GaussianComponent,
    KGrid,
    PacketSpec,
    conditional_evolve,
    default_kgrid,
    first_photon_density,
    no_detection_probability,
    ridge_photon_density,
    spectral_amplitude,
)
from .distributions import (
    DistributionSeries,
    convolve,
    deconvolve,
    emission_kernel,
    free_flux,
    kijowski_density,
    normalize,
)
from .regimes import (
    RegimeReport,
    classify,
    critical_temperature,
    detection_window,
    penetration_length,
    ridge_locations,
)
from .series import TimeSeries
