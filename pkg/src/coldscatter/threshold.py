"""Threshold-law analysis of field-driven spin-changing rates.

In the threshold regime the loss rate into an exit channel released by the
Zeeman energy Delta M_J g mu0 B follows

    K = K0 * E^L_i * ((E + Delta M_J g mu0 B) / E0)^(L_f + 1/2)

with E0 the height of the exit-channel centrifugal barrier.  This module
provides the barrier height, the fitting formula with its validity window,
critical fields from exact Zeeman eigenvalues, one-parameter fits of K0,
and the high-temperature extrapolation recipe for estimating K0 when no
low-energy data exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .monomer import CaseBState, MonomerParams, threshold_energy
from .potential import PotentialModel
from .units import DEFAULT_REDUCED_MASS_AMU, hbar2_over_2mu

__all__ = [
    "barrier_height",
    "ThresholdFit",
    "critical_field",
    "fit_K0",
    "FitReport",
    "extrapolate_K0_from_high_T",
    "crossing_energy",
]


def barrier_height(
    model: PotentialModel,
    l: int,
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU,
) -> float | None:
    """Height (Kelvin) of the centrifugal barrier of the isotropic channel
    potential plus hbar^2 l(l+1)/2 mu R^2, or None when there is none."""
    if l == 0:
        return None
    cent = hbar2_over_2mu(reduced_mass) * l * (l + 1)

    def v_eff(r):
        return float(model.radial_coupling(0, r)) + cent / r**2

    # the barrier sits outside the well: bracket the maximum on a log grid
    r_grid = np.geomspace(2.0, 500.0, 400)
    vals = np.array([v_eff(r) for r in r_grid])
    well = int(np.argmin(vals))
    if well >= len(r_grid) - 2:
        return None
    i_max = well + int(np.argmax(vals[well:]))
    if i_max in (well, len(r_grid) - 1) or vals[i_max] <= 0:
        return None
    res = minimize_scalar(
        lambda r: -v_eff(r),
        bounds=(r_grid[i_max - 1], r_grid[i_max + 1]),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(-res.fun)


@dataclass(frozen=True)
class ThresholdFit:
    """One-parameter threshold fit of a spin-changing rate."""

    k0: float  # overall scale, cm^3/s
    e0: float  # exit-channel barrier height, Kelvin
    l_i: int = 0
    l_f: int = 2
    delta_mj: int = 2  # M_J - M_J', positive for energy release
    params: MonomerParams = field(default_factory=MonomerParams)

    def __post_init__(self):
        if self.k0 <= 0 or self.e0 <= 0:
            raise ValueError("k0 and e0 must be positive")

    def release(self, b_field) -> np.ndarray:
        """Linear Zeeman energy release Delta M_J g mu0 B in Kelvin."""
        p = self.params
        return self.delta_mj * p.g * p.mu0 * np.asarray(b_field, dtype=float)

    def in_window(self, e, b_field) -> np.ndarray:
        """True where both channels stay in the threshold regime."""
        return np.asarray(e) + self.release(b_field) < self.e0

    def evaluate(self, e, b_field) -> np.ndarray:
        """K(E, B) in cm^3/s; values outside in_window are extrapolations."""
        e = np.asarray(e, dtype=float)
        x = (e + self.release(b_field)) / self.e0
        return self.k0 * e**self.l_i * x ** (self.l_f + 0.5)


def critical_field(
    params: MonomerParams,
    initial: CaseBState,
    final: CaseBState,
    e0: float,
    b_max: float = 20000.0,
) -> float | None:
    """Field (gauss) at which the exact Zeeman energy release between the
    two dressed monomer levels equals the barrier height e0; None when no
    such field exists below b_max."""

    def release(b):
        return threshold_energy(params, initial, b) - threshold_energy(
            params, final, b
        )

    f_hi = release(b_max) - e0
    f_lo = release(1e-6) - e0
    if f_lo >= 0 or f_hi <= 0:
        return None
    return float(brentq(lambda b: release(b) - e0, 1e-6, b_max, xtol=1e-6))


@dataclass(frozen=True)
class FitReport:
    fit: ThresholdFit
    n_used: int
    n_rejected: int  # samples outside the validity window
    rms_log_residual: float
    max_log_residual: float


def fit_K0(
    samples,
    e0: float,
    l_i: int = 0,
    l_f: int = 2,
    delta_mj: int = 2,
    params: MonomerParams | None = None,
) -> FitReport:
    """Least-squares fit of log K against the threshold formula with K0 the
    only free parameter.  samples: iterable of (E, B, K) rows."""
    params = params or MonomerParams()
    base = ThresholdFit(1.0, e0, l_i, l_f, delta_mj, params)
    logs = []
    rejected = 0
    for e, b, k in samples:
        if k <= 0 or not base.in_window(e, b):
            rejected += 1
            continue
        logs.append(np.log(k) - np.log(float(base.evaluate(e, b))))
    if not logs:
        raise ValueError("no samples inside the validity window")
    logs = np.array(logs)
    log_k0 = float(np.mean(logs))
    resid = logs - log_k0
    fit = ThresholdFit(float(np.exp(log_k0)), e0, l_i, l_f, delta_mj, params)
    return FitReport(
        fit,
        len(logs),
        rejected,
        float(np.sqrt(np.mean(resid**2))),
        float(np.max(np.abs(resid))),
    )


def extrapolate_K0_from_high_T(
    k_high: float, e_high: float, e0: float, l_f: int = 2
) -> float:
    """Pull a high-temperature rate down to the barrier height along the
    zero-field power law: K0 = K_high (E0/E_high)^(L_f + 1/2)."""
    if e_high < e0:
        raise ValueError("high-temperature energy must be at or above e0")
    if k_high <= 0 or e0 <= 0:
        raise ValueError("rates and energies must be positive")
    return k_high * (e0 / e_high) ** (l_f + 0.5)


def crossing_energy(
    fit: ThresholdFit, k_elastic: float, b_field: float, ratio: float = 100.0
) -> float | None:
    """Energy below which K_el / K_fit exceeds `ratio`, for a constant
    elastic rate; None when the condition never holds (the loss floor set
    by the Zeeman release alone is already too high)."""
    if fit.l_i != 0:
        raise ValueError("closed form requires an s-wave entrance")
    x = (k_elastic / (ratio * fit.k0)) ** (1.0 / (fit.l_f + 0.5))
    e = fit.e0 * x - float(fit.release(b_field))
    return float(e) if e > 0 else None
