"""Distorted-wave Born approximation for weakly coupled inelastic
transitions.

Each channel's regular solution is integrated on its own diagonal potential
and energy normalized, f(R) -> sqrt(2 mu / (pi hbar^2 k)) sin(kR - L pi/2 +
delta); the first-order reactance matrix element is then

    K_if = -pi * integral f_i(R) V_if(R) f_f(R) dR

and |S_if| follows from 2|K_if| / (1 + K_if^2).  With a repulsive inner
wall the integral converges without regularization (the waves vanish at
the wall); an optional small-R cutoff is available for potentials that
are singular at the origin.  Serves as an independent cross-check of the
full close-coupled solution in the weak-coupling regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import spherical_jn, spherical_yn

from .channels import CouplingMatrix
from .units import BOHR2_TO_CM2, DEFAULT_REDUCED_MASS_AMU, hbar2_over_2mu

__all__ = [
    "DistortedWave",
    "distorted_wave",
    "dwba_kmatrix",
    "dwba_pair",
    "DwbaResult",
    "dwba_cross_sections",
]


@dataclass(frozen=True)
class DistortedWave:
    """Energy-normalized regular radial solution of one channel."""

    l: int
    k: float  # 1/bohr
    e_kin: float  # asymptotic kinetic energy, Kelvin
    r: np.ndarray  # uniform radial grid, bohr
    f: np.ndarray  # energy-normalized wavefunction, 1/(bohr sqrt(K))
    delta: float  # elastic phase shift, radians
    turning_point: float  # classical turning point on the inner wall


def _riccati_pair(l, k, r):
    x = k * r
    return x * spherical_jn(l, x), -x * spherical_yn(l, x)


def distorted_wave(
    v_diag,
    l: int,
    e_kin: float,
    r_min: float,
    r_max: float,
    h: float = 0.005,
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU,
) -> DistortedWave:
    """Numerov integration of psi'' = w psi on the diagonal potential
    v_diag(r) (Kelvin, measured from the channel's own threshold, without
    the centrifugal term), normalized by asymptotic amplitude matching.
    """
    if e_kin <= 0:
        raise ValueError("channel must be open: asymptotic kinetic energy <= 0")
    c2 = hbar2_over_2mu(reduced_mass)
    scale = 1.0 / c2
    n = int(np.ceil((r_max - r_min) / h)) + 1
    r = r_min + h * np.arange(n)
    w = scale * (np.asarray(v_diag(r), dtype=float) + c2 * l * (l + 1) / r**2 - e_kin)

    # innermost wall: last sign change of w from + to - scanning outward
    sign = w > 0
    flips = np.flatnonzero(sign[:-1] & ~sign[1:])
    turning = float(r[flips[0] + 1]) if flips.size else float(r[0])

    psi = np.empty(n)
    psi[0] = 0.0
    psi[1] = 1e-20
    t = 1.0 - (h * h / 12.0) * w
    for i in range(1, n - 1):
        psi[i + 1] = ((12.0 - 10.0 * t[i]) * psi[i] - t[i - 1] * psi[i - 1]) / t[i + 1]
        if abs(psi[i + 1]) > 1e100:
            psi[: i + 2] *= 1e-100

    # match psi = a J + b N against exact free solutions at two radii in the
    # potential-free region
    k = np.sqrt(scale * e_kin)
    i2 = n - 1
    sep = min(0.5 / k, 0.2 * (r_max - r_min))
    i1 = max(n - 1 - int(np.ceil(sep / h)), n // 2)
    j1, y1 = _riccati_pair(l, k, r[i1])
    j2, y2 = _riccati_pair(l, k, r[i2])
    a, b = np.linalg.solve([[j1, y1], [j2, y2]], [psi[i1], psi[i2]])
    amp = float(np.hypot(a, b))
    delta = float(np.arctan2(b, a))
    f = psi * (np.sqrt(scale / (np.pi * k)) / amp)
    return DistortedWave(l, k, e_kin, r, f, delta, turning)


def dwba_kmatrix(
    wave_i: DistortedWave, wave_f: DistortedWave, v_coupling,
    r_cutoff: float | None = None,
) -> float:
    """K_if = -pi * int f_i V_if f_f dR over the shared radial grid.

    The waves must share one radial grid; v_coupling(r) is the off-diagonal
    potential element in Kelvin.  r_cutoff truncates the integral at small
    R; it is only needed when the coupling is singular at the origin, since
    the waves themselves vanish at the inner wall.
    """
    r = wave_i.r
    if r.shape != wave_f.r.shape or abs(r[0] - wave_f.r[0]) > 1e-12 or abs(
        r[-1] - wave_f.r[-1]
    ) > 1e-12:
        raise ValueError("distorted waves must share the radial grid")
    mask = r >= r_cutoff if r_cutoff is not None else np.ones(r.size, bool)
    integrand = wave_i.f[mask] * np.asarray(v_coupling(r[mask])) * wave_f.f[mask]
    return float(-np.pi * simpson(integrand, x=r[mask]))


@dataclass(frozen=True)
class DwbaResult:
    k_if: float
    s_if_abs: float
    sigma_cm2: float  # i -> f cross section from the first-order amplitude
    wave_i: DistortedWave
    wave_f: DistortedWave


def dwba_pair(
    coupling: CouplingMatrix,
    idx_i: int,
    idx_f: int,
    e_total: float,
    r_min: float = 4.0,
    r_max: float = 400.0,
    h: float = 0.005,
) -> DwbaResult:
    """First-order transition between two dressed channels of a coupled
    basis, each distorted wave computed on its own diabatic diagonal."""
    basis = coupling.basis
    mu = basis.reduced_mass
    waves = []
    for idx in (idx_i, idx_f):
        ch = basis.channels[idx]
        thr = ch.threshold
        cent = hbar2_over_2mu(mu) * ch.l * (ch.l + 1)

        def v_diag(r, idx=idx, thr=thr, cent=cent):
            return coupling.element(idx, idx, r) - thr - cent / r**2

        waves.append(
            distorted_wave(v_diag, ch.l, e_total - thr, r_min, r_max, h, mu)
        )
    wave_i, wave_f = waves
    k_if = dwba_kmatrix(
        wave_i, wave_f, lambda r: coupling.element(idx_i, idx_f, r)
    )
    s_abs = 2.0 * abs(k_if) / (1.0 + k_if * k_if)
    sigma = np.pi / wave_i.k**2 * s_abs**2 * BOHR2_TO_CM2
    return DwbaResult(k_if, s_abs, sigma, wave_i, wave_f)


def dwba_cross_sections(
    coupling: CouplingMatrix,
    entrance_index: int,
    e_total: float,
    r_min: float = 4.0,
    r_max: float = 400.0,
    h: float = 0.01,
) -> dict:
    """First-order inelastic cross sections (cm^2) out of one entrance
    channel, summed over all open exit channels per final monomer state."""
    basis = coupling.basis
    out: dict = {}
    initial = basis.channels[entrance_index].state
    for idx, ch in enumerate(basis.channels):
        if ch.state == initial or e_total <= ch.threshold:
            continue
        res = dwba_pair(coupling, entrance_index, idx, e_total, r_min, r_max, h)
        out[ch.state] = out.get(ch.state, 0.0) + res.sigma_cm2
    return out
