"""Scattering channel basis |N J M_J L M_L> at fixed total projection M,
and the R-dependent coupling matrix of the close-coupled equations.

The angular structure of the potential is built once in the case-b product
basis (it does not depend on the magnetic field); the field enters only
through the monomer Hamiltonian on the diagonal blocks.  The basis is then
rotated into field-dressed channels, i.e. the representation in which the
asymptotic Hamiltonian is diagonal, and all propagation happens there.

Because N is even (homonuclear molecule) and the interaction conserves
(-1)^(N+L), the partial-wave parity (-1)^L is a good block label; a basis
holds a single parity (the default, +1, contains the s-wave entrance
channel).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .angmom import c_tensor_element, clebsch
from .monomer import (
    SPIN,
    CaseBState,
    MonomerParams,
    build_monomer_hamiltonian,
    case_b_basis,
    monomer_levels,
)
from .potential import PotentialModel
from .units import DEFAULT_REDUCED_MASS_AMU, hbar2_over_2mu

__all__ = [
    "Channel",
    "ChannelBasis",
    "enumerate_basis",
    "potential_matrix_elements",
    "angular_coupling",
    "asymptotic_hamiltonian",
    "CouplingMatrix",
    "build_interaction",
]


@dataclass(frozen=True)
class Channel:
    """A field-dressed channel: monomer level labels plus partial wave."""

    state: CaseBState  # B=0 labels (N, J, M_J) of the dressed level
    l: int
    m_l: int
    threshold: float  # asymptotic energy in Kelvin at the basis field

    def __str__(self):
        return f"{self.state} L={self.l} M_L={self.m_l}"


@dataclass(frozen=True)
class ChannelBasis:
    """Ordered field-dressed channel set of one (M, parity) block."""

    m_total: int
    parity: int
    b_field: float
    params: MonomerParams
    reduced_mass: float
    channels: tuple[Channel, ...]
    # case-b product states (CaseBState, L, M_L) spanning the same space
    caseb: tuple[tuple[CaseBState, int, int], ...] = field(repr=False)
    # orthogonal map, column j = dressed channel j expanded over `caseb`
    transform: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.channels)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([c.threshold for c in self.channels])

    @property
    def l_values(self) -> np.ndarray:
        return np.array([c.l for c in self.channels])

    def index_of(self, state: CaseBState, l: int, m_l: int) -> int:
        for i, c in enumerate(self.channels):
            if c.state == state and c.l == l and c.m_l == m_l:
                return i
        raise KeyError(f"channel {state} L={l} M_L={m_l} not in basis")


def _caseb_products(params, l_max, m_total, parity):
    out = []
    for l in range(0, l_max + 1):
        if (-1) ** l != parity:
            continue
        for m_l in range(-l, l + 1):
            m_j = m_total - m_l
            for st in case_b_basis(params.n_max, m_j):
                out.append((st, l, m_l))
    return tuple(out)


def enumerate_basis(
    params: MonomerParams,
    l_max: int,
    n_max: int,
    m_total: int,
    b_field: float,
    reduced_mass: float = DEFAULT_REDUCED_MASS_AMU,
    parity: int = 1,
) -> ChannelBasis:
    """Enumerate the field-dressed basis of one (M, parity) block.

    Channels are ordered by ascending threshold, then L, then M_L; the order
    is deterministic across runs.
    """
    if l_max < 0 or n_max < 0 or n_max % 2:
        raise ValueError("l_max >= 0 and even n_max >= 0 required")
    if parity not in (-1, 1):
        raise ValueError("parity must be +1 or -1")
    params = replace(params, n_max=n_max)
    caseb = _caseb_products(params, l_max, m_total, parity)

    # dressed levels per M_J block
    m_js = sorted({st.m_j for st, _, _ in caseb})
    levels = {m_j: monomer_levels(params, m_j, b_field) for m_j in m_js}
    eigvecs = {}
    for m_j in m_js:
        _, block_basis = build_monomer_hamiltonian(params, m_j, b_field)
        eigvecs[m_j] = (block_basis, levels[m_j])

    dressed = []
    for l in range(0, l_max + 1):
        if (-1) ** l != parity:
            continue
        for m_l in range(-l, l + 1):
            m_j = m_total - m_l
            if m_j not in levels:
                continue
            for lev in levels[m_j]:
                dressed.append((Channel(lev.labels, l, m_l, lev.energy), lev))

    order = sorted(
        range(len(dressed)),
        key=lambda i: (
            round(dressed[i][0].threshold, 12),
            dressed[i][0].l,
            dressed[i][0].m_l,
            dressed[i][0].state.n,
            dressed[i][0].state.j,
        ),
    )
    channels = tuple(dressed[i][0] for i in order)

    # transform: caseb index -> dressed channel index
    caseb_index = {key: i for i, key in enumerate(caseb)}
    u = np.zeros((len(caseb), len(channels)))
    for j, i_src in enumerate(order):
        ch, lev = dressed[i_src]
        for amp, st in zip(lev.composition, lev.basis):
            u[caseb_index[(st, ch.l, ch.m_l)], j] = amp
    return ChannelBasis(
        m_total, parity, b_field, params, reduced_mass, channels, caseb, u
    )


def angular_coupling(basis: ChannelBasis, lam: int) -> np.ndarray:
    """Case-b matrix of the Legendre operator P_lam(cos theta), i.e.
    C^lam(molecular axis) . C^lam(R direction); spin is a spectator."""
    caseb = basis.caseb
    n_ch = len(caseb)
    a = np.zeros((n_ch, n_ch))
    for i, (st1, l1, ml1) in enumerate(caseb):
        for k in range(i, n_ch):
            st2, l2, ml2 = caseb[k]
            q = st1.m_j - st2.m_j
            if abs(q) > lam or abs(l1 - l2) > lam:
                continue
            if (l1 + l2 + lam) % 2 or (st1.n + st2.n + lam) % 2:
                continue
            orb = c_tensor_element(l1, ml1, lam, -q, l2, ml2)
            if orb == 0.0:
                continue
            rot = 0.0
            for m_s in range(-SPIN, SPIN + 1):
                mn1 = st1.m_j - m_s
                mn2 = st2.m_j - m_s
                if abs(mn1) > st1.n or abs(mn2) > st2.n:
                    continue
                rot += (
                    clebsch(st1.n, mn1, SPIN, m_s, st1.j, st1.m_j)
                    * clebsch(st2.n, mn2, SPIN, m_s, st2.j, st2.m_j)
                    * c_tensor_element(st1.n, mn1, lam, q, st2.n, mn2)
                )
            val = (-1.0) ** (q % 2) * orb * rot
            a[i, k] = val
            a[k, i] = val
    return a


def potential_matrix_elements(
    basis: ChannelBasis, model: PotentialModel, r: float
) -> np.ndarray:
    """Case-b matrix of V(R, theta) at radius r (Kelvin)."""
    if r <= 0:
        raise ValueError("R must be positive")
    out = np.zeros((len(basis.caseb),) * 2)
    for lam in model.lambda_orders:
        out += float(model.radial_coupling(lam, r)) * angular_coupling(basis, lam)
    return out


def asymptotic_hamiltonian(basis: ChannelBasis) -> tuple[np.ndarray, np.ndarray]:
    """(transform, thresholds): the orthogonal map from the case-b product
    basis to dressed channels, and the diagonal asymptotic energies."""
    return basis.transform, basis.thresholds


class CouplingMatrix:
    """R-dependent coupling matrix over a dressed ChannelBasis.

    potential(r) is V + H_monomer + centrifugal in Kelvin, with the
    asymptotic part exactly diagonal; w(r, e_total) is the scaled matrix
    2 mu/hbar^2 (potential - E) entering psi'' = W psi.
    """

    def __init__(self, basis: ChannelBasis, model: PotentialModel):
        self.basis = basis
        self.model = model
        u = basis.transform
        self._a_dressed = {
            lam: u.T @ angular_coupling(basis, lam) @ u
            for lam in model.lambda_orders
        }
        self._ediag = basis.thresholds
        self._cent = hbar2_over_2mu(basis.reduced_mass) * basis.l_values * (
            basis.l_values + 1.0
        )
        self._scale = 1.0 / hbar2_over_2mu(basis.reduced_mass)

    def __len__(self):
        return len(self.basis)

    def potential(self, r: float) -> np.ndarray:
        out = np.zeros((len(self.basis),) * 2)
        for lam, a in self._a_dressed.items():
            out += float(self.model.radial_coupling(lam, r)) * a
        idx = np.diag_indices_from(out)
        out[idx] += self._ediag + self._cent / r**2
        return out

    def element(self, i: int, j: int, r) -> np.ndarray:
        """Single matrix element of potential() vectorized over radii."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for lam, a in self._a_dressed.items():
            out = out + self.model.radial_coupling(lam, r) * a[i, j]
        if i == j:
            out = out + self._ediag[i] + self._cent[i] / r**2
        return out

    def w(self, r: float, e_total: float) -> np.ndarray:
        out = self.potential(r)
        idx = np.diag_indices_from(out)
        out[idx] -= e_total
        return self._scale * out


def build_interaction(basis: ChannelBasis, model: PotentialModel) -> CouplingMatrix:
    return CouplingMatrix(basis, model)
