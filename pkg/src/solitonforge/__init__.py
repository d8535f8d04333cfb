"""Numerical toolkit for multisoliton states of focusing cubic NLS and mKdV."""

from .core import (BetaPoly, Grid, GridField, PhasePoint, SpectrumSym,
                   beta_equivalent, grid_for_spectrum, hs_norm,
                   phase_point_from_kappas, reduce_mod_char, roots_from_sym,
                   sym_from_roots)
from .errors import (BackgroundSpectrumError, ConditioningError,
                     ConfluenceError, DomainError, EmptySpectrumError,
                     InstabilityError, NumericsError, PoleOnRayError,
                     ResolutionError, SolitonForgeError, SpectralError,
                     ZeroOnContourError)
from .scattering import (SpectrumReport, WavePair, extract_scattering_data,
                         jost_pair, locate_spectrum, transmission_inv)

__all__ = [
    "BetaPoly", "Grid", "GridField", "PhasePoint", "SpectrumSym",
    "beta_equivalent", "grid_for_spectrum", "hs_norm",
    "phase_point_from_kappas", "reduce_mod_char", "roots_from_sym",
    "sym_from_roots",
    "SpectrumReport", "WavePair", "extract_scattering_data", "jost_pair",
    "locate_spectrum", "transmission_inv",
    "SolitonForgeError", "DomainError", "NumericsError", "SpectralError",
    "ZeroOnContourError", "PoleOnRayError", "EmptySpectrumError",
    "BackgroundSpectrumError", "ResolutionError", "ConditioningError",
    "ConfluenceError", "InstabilityError",
]

__version__ = "0.1.0"
