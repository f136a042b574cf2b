"""Path-integral Monte Carlo engines in the flux basis and for transverse-field Ising models."""
from .flux import (
    classical_action,
    kinetic_coefficient,
    kinetic_kernel,
    local_move_delta_action,
    run_pimc_flux,
    virial_energy_estimate,
)
from .stats import (
    AutocorrelationResult,
    PathEnsembleStats,
    PimcConfig,
    PimcError,
    autocorrelation_time,
)
from .tim import run_pimc_tim, transverse_coupling

__all__ = [
    "AutocorrelationResult",
    "PathEnsembleStats",
    "PimcConfig",
    "PimcError",
    "autocorrelation_time",
    "classical_action",
    "kinetic_coefficient",
    "kinetic_kernel",
    "local_move_delta_action",
    "run_pimc_flux",
    "run_pimc_tim",
    "transverse_coupling",
    "virial_energy_estimate",
]
