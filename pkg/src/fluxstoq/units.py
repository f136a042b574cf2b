"""Unit conversions. Energies are frequencies E/h in GHz, times in ns."""
import numpy as np
from scipy import constants

#: e^2 / (2 h) expressed in GHz * fF, so E_C/h [GHz] = EC_GHZ_FF / C [fF].
EC_GHZ_FF = constants.e**2 / (2 * constants.h) / 1e-15 / 1e9

#: Phi_0^2 / (4 pi^2 h) in GHz * nH, so E_L/h [GHz] = EL_GHZ_NH / L [nH].
FLUX_QUANTUM = constants.h / (2 * constants.e)
EL_GHZ_NH = FLUX_QUANTUM**2 / (4 * np.pi**2 * constants.h) / 1e-9 / 1e9


def charging_energy_matrix(capacitance_ff):
    """E_C/h = (e^2/2h) C^-1 for a capacitance matrix given in fF."""
    return EC_GHZ_FF * np.linalg.inv(np.asarray(capacitance_ff, dtype=float))


def inductive_energy_matrix(inductance_nh):
    """E_L/h = (Phi_0^2/4 pi^2 h) L^-1 for an inductance matrix given in nH."""
    return EL_GHZ_NH * np.linalg.inv(np.asarray(inductance_nh, dtype=float))


def beta_tilde(temperature_ghz):
    """h*beta in ns for a temperature quoted as (h beta)^-1 in GHz."""
    if temperature_ghz <= 0:
        raise ValueError("temperature must be positive")
    return 1.0 / temperature_ghz
