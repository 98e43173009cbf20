"""State-to-state cross sections, rate constants, and Maxwellian thermal
averages built from S-matrices.

sigma(i->f) = pi/k_i^2 sum |<L' M_L'|S - 1|L M_L>|^2, accumulated over the
total-projection blocks supplied; K = v sigma with v the incident relative
velocity.  Cross sections are reported in cm^2, rates in cm^3/s.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channels import CouplingMatrix, enumerate_basis
from .monomer import CaseBState, MonomerParams
from .potential import PotentialModel
from .propagator import PropagationGrid, SMatrix, smatrix
from .units import (
    BOHR2_TO_CM2,
    DEFAULT_REDUCED_MASS_AMU,
    hbar2_over_2mu,
    velocity_cm_per_s,
)

log = logging.getLogger(__name__)

__all__ = [
    "block_cross_sections",
    "cross_sections",
    "cross_section",
    "loss_bound",
    "rate_constant",
    "thermal_average",
    "ThermalRate",
    "compute_smatrices",
    "RateTable",
]


def block_cross_sections(
    smat: SMatrix, initial: CaseBState
) -> tuple[dict[CaseBState, float], float]:
    """(sigma_by_final, k_initial) for one block; sigma in cm^2.

    Raises ValueError if the initial monomer state has no open channel in
    the block.
    """
    basis = smat.basis
    in_cols = [
        col
        for col, idx in enumerate(smat.open_indices)
        if basis.channels[idx].state == initial
    ]
    if not in_cols:
        raise ValueError(
            f"initial state {initial} has no open channel in block M={basis.m_total}"
        )
    k_i = float(smat.k_open[in_cols[0]])
    t = smat.matrix - np.eye(smat.n_open)
    out: dict[CaseBState, float] = {}
    for row, idx in enumerate(smat.open_indices):
        final = basis.channels[idx].state
        contrib = float(np.sum(np.abs(t[row, in_cols]) ** 2))
        out[final] = out.get(final, 0.0) + contrib
    pref = np.pi / k_i**2 * BOHR2_TO_CM2
    return {f: pref * v for f, v in out.items()}, k_i


def cross_sections(
    smats, initial: CaseBState
) -> dict[CaseBState, float]:
    """State-to-state cross sections (cm^2) summed over the given blocks.

    Blocks that do not contain the initial state are skipped; at least one
    block must contain it.
    """
    total: dict[CaseBState, float] = {}
    k_seen = []
    for smat in smats:
        try:
            sig, k_i = block_cross_sections(smat, initial)
        except ValueError:
            continue
        k_seen.append(k_i)
        for f, v in sig.items():
            total[f] = total.get(f, 0.0) + v
    if not k_seen:
        raise ValueError(f"initial state {initial} open in no supplied block")
    if np.ptp(k_seen) > 1e-9 * max(k_seen):
        raise ValueError("inconsistent incident wavenumbers across blocks")
    return total


def cross_section(smats, initial: CaseBState, final: CaseBState) -> float:
    return cross_sections(smats, initial).get(final, 0.0)


def loss_bound(smat: SMatrix, initial: CaseBState) -> float:
    """Unitarity bound (cm^2) on the summed inelastic cross section out of
    the initial state in one block: pi/k^2 per contributing partial wave."""
    basis = smat.basis
    n_in = sum(
        1 for idx in smat.open_indices if basis.channels[idx].state == initial
    )
    cols = [
        col
        for col, idx in enumerate(smat.open_indices)
        if basis.channels[idx].state == initial
    ]
    if not cols:
        raise ValueError("initial state closed in this block")
    k_i = float(smat.k_open[cols[0]])
    return np.pi / k_i**2 * n_in * BOHR2_TO_CM2


def rate_constant(
    sigma_cm2: float, e_coll: float, reduced_mass: float = DEFAULT_REDUCED_MASS_AMU
) -> float:
    """K = v sigma in cm^3/s for a collision energy in Kelvin."""
    if e_coll <= 0:
        raise ValueError("collision energy must be positive")
    return velocity_cm_per_s(e_coll, reduced_mass) * sigma_cm2


@dataclass(frozen=True)
class ThermalRate:
    temperature: float  # Kelvin
    value: float  # cm^3/s
    tail_mass: float  # fraction of the Boltzmann weight beyond E_max
    tail_dominated: bool  # more than half of the weight extrapolated


def _exp_moments(a: float, b: float, t: float) -> tuple[float, float]:
    """(int_a^b E exp(-E/t) dE, int_a^b E^2 exp(-E/t) dE), closed form."""

    def f1(x):
        return (x + 1.0) * np.exp(-x)

    def f2(x):
        return (x * (x + 2.0) + 2.0) * np.exp(-x)

    xa, xb = a / t, b / t
    return t**2 * (f1(xa) - f1(xb)), t**3 * (f2(xa) - f2(xb))


def thermal_average(
    energies: np.ndarray,
    sigma_cm2: np.ndarray,
    temperature: float,
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU,
) -> ThermalRate:
    """Maxwellian average K(T) = <v sigma> over a tabulated sigma(E).

    The integrand is evaluated in closed form on each interval with sigma
    interpolated linearly, so a constant cross section reproduces the
    analytic identity K = sigma sqrt(8 k_B T / pi mu) to roundoff.  Beyond
    the last tabulated energy sigma is held constant.
    """
    e = np.asarray(energies, dtype=float)
    s = np.asarray(sigma_cm2, dtype=float)
    if e.ndim != 1 or e.shape != s.shape or e.size < 2:
        raise ValueError("need matching 1-D energy and sigma tables")
    if np.any(np.diff(e) <= 0) or e[0] < 0:
        raise ValueError("energies must be increasing and nonnegative")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    t = temperature
    acc = 0.0
    for j in range(e.size - 1):
        de = e[j + 1] - e[j]
        c1 = (s[j + 1] - s[j]) / de
        c0 = s[j] - c1 * e[j]
        m1, m2 = _exp_moments(e[j], e[j + 1], t)
        acc += c0 * m1 + c1 * m2
    # below the first point and beyond the last, hold sigma constant
    m1_lo, _ = _exp_moments(0.0, e[0], t)
    x_hi = e[-1] / t
    m1_hi = t**2 * (x_hi + 1.0) * np.exp(-x_hi)
    acc += s[0] * m1_lo + s[-1] * m1_hi
    tail_mass = (x_hi + 1.0) * np.exp(-x_hi)
    if tail_mass > 0.5:
        log.warning(
            "thermal average at T=%g K: %.0f%% of the Boltzmann weight lies "
            "beyond the tabulated E_max=%g K",
            t,
            100 * tail_mass,
            e[-1],
        )
    v_mean = velocity_cm_per_s(4.0 * t / np.pi, reduced_mass)  # sqrt(8kT/pi mu)
    return ThermalRate(t, v_mean * acc / t**2, tail_mass, tail_mass > 0.5)


def compute_smatrices(
    params: MonomerParams,
    model: PotentialModel,
    initial: CaseBState,
    e_coll: float,
    b_field: float,
    l_max: int,
    n_max: int,
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU,
    m_values=None,
    grid: PropagationGrid | None = None,
) -> list[SMatrix]:
    """Solve the blocks needed for cross sections out of `initial`.

    By default only the block M = M_J(initial), which contains the s-wave
    entrance channel and dominates at ultracold energies; pass m_values="all"
    to include every block reachable through higher entrance partial waves.
    """
    if e_coll <= 0:
        raise ValueError("collision energy must be positive")
    if m_values is None:
        m_values = (initial.m_j,)
    elif m_values == "all":
        m_values = range(initial.m_j - l_max, initial.m_j + l_max + 1)
    out = []
    for m_total in m_values:
        basis = enumerate_basis(
            params, l_max, n_max, m_total, b_field, reduced_mass
        )
        try:
            i0 = next(
                i for i, ch in enumerate(basis.channels) if ch.state == initial
            )
        except StopIteration:
            continue
        e_total = basis.channels[i0].threshold + e_coll
        cm = CouplingMatrix(basis, model)
        out.append(smatrix(cm, e_total, grid))
    if not out:
        raise ValueError(f"initial state {initial} not present in any block")
    return out


@dataclass
class RateTable:
    """Cross sections and rates on an (E, B) grid for one incident state."""

    initial: CaseBState
    energies: np.ndarray  # Kelvin
    fields: np.ndarray  # gauss
    # (initial, final) -> sigma array of shape (n_E, n_B), cm^2
    sigma: dict[tuple[CaseBState, CaseBState], np.ndarray] = field(
        default_factory=dict
    )
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU
    m_blocks: tuple[int, ...] = ()
    l_max: int = 0
    n_max: int = 0

    def rate(self, final: CaseBState) -> np.ndarray:
        sig = self.sigma[(self.initial, final)]
        v = np.array(
            [velocity_cm_per_s(e, self.reduced_mass) for e in self.energies]
        )
        return v[:, None] * sig

    def loss_sigma(self) -> np.ndarray:
        out = np.zeros((len(self.energies), len(self.fields)))
        for (_, final), sig in self.sigma.items():
            if final != self.initial:
                out += sig
        return out

    def elastic_sigma(self) -> np.ndarray:
        return self.sigma[(self.initial, self.initial)]

    def figure_of_merit(self) -> np.ndarray:
        """K_el / K_loss, the trappability ratio."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.elastic_sigma() / self.loss_sigma()

    def rows(self):
        """Flat (E, B, initial, final, sigma, K) records in a stable order."""
        v = np.array(
            [velocity_cm_per_s(e, self.reduced_mass) for e in self.energies]
        )
        keys = sorted(
            self.sigma, key=lambda p: (str(p[1] != p[0]), str(p[1]))
        )
        for i, e in enumerate(self.energies):
            for j, b in enumerate(self.fields):
                for pair in keys:
                    sig = self.sigma[pair][i, j]
                    yield (
                        float(e),
                        float(b),
                        str(pair[0]),
                        str(pair[1]),
                        float(sig),
                        float(v[i] * sig),
                    )
