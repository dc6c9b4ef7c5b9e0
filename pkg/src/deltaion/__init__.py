"""Exact ionization dynamics of a delta well with an oscillating strength.

Solves ``i psi_t = -psi_xx - 2 (1 + alpha sin(omega t)) delta(x) psi`` with
``psi(x, 0) = exp(-|x|)`` in units hbar = 2m = E_b = 1.  Two independent
routes are provided: a time-domain Volterra solver for the boundary value
``phi(t) = psi(0, t)`` and a Laplace-domain lattice solver for its transform.
"""

from .lattice import (
    Resonance,
    ResonanceSearchError,
    SolverError,
    auto_depth,
    boundary_amplitude,
    evaluate_Phi,
    find_resonance,
    resonance_array,
    solve_continued_fraction,
    solve_functional_equation,
)
from .observables import (
    ContourExpansion,
    InconsistencyError,
    PeakTable,
    SpectrumSlice,
    StabilizationError,
    SurvivalCurve,
    UnitarityReport,
    find_peaks,
    fit_decay_rate,
    fit_tail_exponent,
    fit_tail_law,
    small_alpha_closed_form,
    spectrum_finite_time,
    spectrum_infinite_time,
    survival_curve,
    theta_bromwich,
    unitarity,
)
from .params import CuspWarning, ModelParams
from .volterra import ConvergenceError, PhiSeries, solve_phi, theta_big_from_phi, theta_from_phi
from .wavefunction import (
    LaplaceField,
    WavefieldSlice,
    asymptotic_ray,
    invert_moderate,
    spectral_reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "CuspWarning",
    "PhiSeries",
    "ConvergenceError",
    "solve_phi",
    "theta_from_phi",
    "theta_big_from_phi",
    "Resonance",
    "ResonanceSearchError",
    "SolverError",
    "auto_depth",
    "boundary_amplitude",
    "evaluate_Phi",
    "find_resonance",
    "resonance_array",
    "solve_continued_fraction",
    "solve_functional_equation",
    "ContourExpansion",
    "InconsistencyError",
    "StabilizationError",
    "PeakTable",
    "SpectrumSlice",
    "SurvivalCurve",
    "UnitarityReport",
    "find_peaks",
    "fit_decay_rate",
    "fit_tail_exponent",
    "fit_tail_law",
    "small_alpha_closed_form",
    "spectrum_finite_time",
    "spectrum_infinite_time",
    "survival_curve",
    "theta_bromwich",
    "unitarity",
    "LaplaceField",
    "WavefieldSlice",
    "asymptotic_ray",
    "invert_moderate",
    "spectral_reconstruct",
]
