"""Flux-qubit circuit models, exact diagonalization, effective qubit Hamiltonians,
stoquasticity analysis and path-integral Monte Carlo."""
from .circuit import (
    CircuitError,
    CircuitSpec,
    HamiltonianParams,
    Junction,
    build_params,
    canonical_transform,
    potential_energy,
    potential_minimum,
    two_qubit_capacitance,
)
from .spectral import FluxGrid, SpectralResult, solve_spectrum, thermal_average_energy

__version__ = "0.1.0"

__all__ = [
    "CircuitError",
    "CircuitSpec",
    "FluxGrid",
    "HamiltonianParams",
    "Junction",
    "SpectralResult",
    "build_params",
    "canonical_transform",
    "potential_energy",
    "potential_minimum",
    "solve_spectrum",
    "thermal_average_energy",
    "two_qubit_capacitance",
]
