"""TEBD simulator and transport analysis for an XXZ chain between interacting leads."""

from ._core import (
    AlphaFit,
    ChainSpec,
    ConvergenceError,
    DecayFamily,
    DecayPreference,
    FitReport,
    FormatError,
    InvalidInput,
    Peak,
    PeakSet,
    SpectralWindow,
    bond_coupling,
    classify_decay,
    exact_currents,
    extract_peaks,
    fit_alpha,
    fit_exponential,
    fit_power_law,
    frequency_model,
    ground_state,
    import_records,
    load_columnar,
    preset_config,
    preset_names,
    resolve_config,
    run_id,
    run_single,
    run_sweep,
    s_line,
    simulate,
    spectrum,
    time_average,
    two_site_term,
    xx_ground_energy,
)
from .columnar import read_columnar, read_sweep_csv

__all__ = [name for name in dir() if not name.startswith("_")]
