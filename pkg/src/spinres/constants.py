"""Physical constants and the unit conventions used across the package.

Energies and rates are ordinary frequencies in MHz, fields are in tesla,
temperatures in kelvin and resonator frequencies in GHz.  Every 2*pi
conversion between angular and ordinary frequency happens here or in the
coupled-mode transmission model, nowhere else.

Values are CODATA 2018.
"""

import math

PLANCK = 6.62607015e-34  # J s, exact
HBAR = PLANCK / (2.0 * math.pi)
BOLTZMANN = 1.380649e-23  # J/K, exact
BOHR_MAGNETON = 9.2740100783e-24  # J/T
MU_0 = 1.25663706212e-6  # N/A^2

#: Bohr magneton over Planck constant, MHz per tesla (13 996.24 MHz/T).
MU_B_MHZ_PER_T = BOHR_MAGNETON / PLANCK * 1e-6
#: Boltzmann constant over Planck constant, MHz per kelvin (20 836.62 MHz/K).
K_B_MHZ_PER_K = BOLTZMANN / PLANCK * 1e-6

TWO_PI = 2.0 * math.pi

MHZ_PER_GHZ = 1e3
HZ_PER_MHZ = 1e6


def resonance_field(g_factor, f_r_ghz):
    """Field (T) at which a line of effective g-factor is resonant with f_r."""
    return f_r_ghz * MHZ_PER_GHZ / (g_factor * MU_B_MHZ_PER_T)
