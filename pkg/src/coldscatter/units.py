"""Unit conventions and physical constants.

Working units throughout the package: energy in Kelvin, length in bohr,
magnetic field in gauss, mass in atomic mass units (amu).  Cross sections
are reported in cm^2 and rate constants in cm^3/s.
"""

import scipy.constants as _const

# 1 K expressed in wavenumbers (documentation aid; 1 K = 0.695 cm^-1)
K_TO_WAVENUMBER = _const.k / (_const.h * _const.c * 100.0)

# Bohr magneton in Kelvin per gauss (mu_B/k_B = 0.6717 K/T)
BOHR_MAGNETON_K_PER_GAUSS = _const.value("Bohr magneton") / _const.k * 1e-4

# Electron g-factor (positive convention, as used in the Zeeman term)
ELECTRON_G_FACTOR = 2.0023

BOHR_RADIUS_CM = _const.value("Bohr radius") * 100.0
BOHR2_TO_CM2 = BOHR_RADIUS_CM**2

# hbar^2 / (m_u * a0^2 * k_B), in Kelvin
_HBAR2_OVER_AMU_BOHR2_K = _const.hbar**2 / (
    _const.atomic_mass * _const.value("Bohr radius") ** 2 * _const.k
)


def hbar2_over_2mu(reduced_mass_amu: float) -> float:
    """hbar^2/(2 mu) in Kelvin * bohr^2 for a reduced mass in amu."""
    if reduced_mass_amu <= 0:
        raise ValueError("reduced mass must be positive")
    return 0.5 * _HBAR2_OVER_AMU_BOHR2_K / reduced_mass_amu


def wavenumber(energy_K: float, reduced_mass_amu: float) -> float:
    """Channel wavenumber k = sqrt(2 mu E)/hbar in 1/bohr (E in Kelvin)."""
    if energy_K < 0:
        raise ValueError("energy must be nonnegative")
    return (energy_K / hbar2_over_2mu(reduced_mass_amu)) ** 0.5


def velocity_cm_per_s(energy_K: float, reduced_mass_amu: float) -> float:
    """Relative collision velocity v = sqrt(2E/mu) in cm/s (E in Kelvin)."""
    if energy_K < 0:
        raise ValueError("energy must be nonnegative")
    v_m = (2.0 * _const.k * energy_K / (reduced_mass_amu * _const.atomic_mass)) ** 0.5
    return v_m * 100.0


# Default reduced mass for a 3He + (17O)2 collision pair, amu
HE3_MASS_AMU = 3.0160293
O17_MASS_AMU = 16.9991315


def reduced_mass(m1_amu: float, m2_amu: float) -> float:
    return m1_amu * m2_amu / (m1_amu + m2_amu)


DEFAULT_REDUCED_MASS_AMU = reduced_mass(HE3_MASS_AMU, 2.0 * O17_MASS_AMU)
