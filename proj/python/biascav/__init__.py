"""Biased 3D microwave cavity: fields, losses, tuning, Rydberg spectra, transmission."""

from ._core import (
    CavityGeometry,
    Cloud,
    ConvergenceError,
    FieldMap,
    GridSpec,
    LineFit,
    ModeIndex,
    RydbergSystem,
    SpectralLine,
    UnsupportedError,
    ValidationError,
    __version__,
    conductivity_from_linewidth,
    electrode_linewidth,
    field_statistics,
    fit_lorentzian,
    fit_spectrum,
    fit_zeeman_doublet,
    geometry_factor,
    parse_mode,
    perturbation_shift,
    photon_number,
    quality_factors,
    resonance_frequency,
    run_scenario,
    s21_amplitude,
    solve_electrostatic,
    solve_magnetostatic,
    surface_resistivity,
    synthesize_spectrum,
    thermal_occupation,
    transition_frequencies,
    trapped_flux_q_limit,
    trapped_flux_resistance,
)
