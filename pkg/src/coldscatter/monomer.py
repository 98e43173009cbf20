"""Isolated-molecule Hamiltonian of a rigid ³Σ rotor in a magnetic field.

The molecule is described in a Hund's case-b basis |N (S=1) J M_J> restricted
to the even-N manifold.  The Hamiltonian contains rotation B_e N(N+1), the
spin-spin and spin-rotation fine structure, and the electron-spin Zeeman
term.  M_J is exactly conserved, so each M_J block is built and diagonalized
independently.

Default constants are literature-typical values for O2 (Kelvin / gauss
units); they are not fitted to anything in this repository and can be
overridden freely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .angmom import c_tensor_element, clebsch, wigner3j, wigner6j
from .units import BOHR_MAGNETON_K_PER_GAUSS, ELECTRON_G_FACTOR

log = logging.getLogger(__name__)

SPIN = 1  # electronic spin S of the molecule


class EmptyBasisError(ValueError):
    """Raised when a requested M_J block contains no basis states."""


@dataclass(frozen=True)
class MonomerParams:
    """Molecular constants, energies in Kelvin, field in gauss."""

    b_rot: float = 2.07  # rotational constant B_e
    lam: float = 2.87  # spin-spin constant
    gamma: float = -0.012  # spin-rotation constant
    g: float = ELECTRON_G_FACTOR
    mu0: float = BOHR_MAGNETON_K_PER_GAUSS  # Bohr magneton, K/gauss
    n_max: int = 6  # even rotational basis cutoff

    def __post_init__(self):
        if self.b_rot <= 0:
            raise ValueError("rotational constant must be positive")
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.n_max < 0 or self.n_max % 2:
            raise ValueError("n_max must be even and nonnegative")


@dataclass(frozen=True, order=True)
class CaseBState:
    """Case-b label |N J M_J> (S = 1 implicit)."""

    n: int
    j: int
    m_j: int

    def __post_init__(self):
        if self.n < 0 or self.n % 2:
            raise ValueError("N must be even and nonnegative")
        if not abs(self.n - SPIN) <= self.j <= self.n + SPIN:
            raise ValueError("J must satisfy the (N, S, J) triangle rule")
        if abs(self.m_j) > self.j:
            raise ValueError("|M_J| must not exceed J")

    def __str__(self):
        return f"|{self.n} {self.j} {self.m_j}>"


@dataclass(frozen=True)
class MonomerLevel:
    """A field-dressed level: B=0 labels, energy, and case-b composition."""

    labels: CaseBState
    energy: float
    composition: np.ndarray = field(repr=False)
    basis: tuple = field(repr=False)


def case_b_basis(n_max: int, m_j: int) -> tuple[CaseBState, ...]:
    """All case-b states with even N <= n_max at fixed M_J, ordered by (N, J)."""
    states = []
    for n in range(0, n_max + 1, 2):
        for j in range(abs(n - SPIN), n + SPIN + 1):
            if abs(m_j) <= j:
                states.append(CaseBState(n, j, m_j))
    return tuple(states)


# --- spin-space operators (S = 1), basis ordered M_S = -1, 0, +1 ---------

def _spin_matrices():
    m = np.arange(-SPIN, SPIN + 1)
    sz = np.diag(m.astype(float))
    sp = np.zeros((3, 3))
    for i, mi in enumerate(m[:-1]):
        sp[i + 1, i] = sqrt(SPIN * (SPIN + 1) - mi * (mi + 1))
    sm = sp.T
    # spherical components T^1_q(S)
    t_p1 = -sp / sqrt(2.0)
    t_m1 = sm / sqrt(2.0)
    return sz, t_m1, sz.copy(), t_p1


_SZ, _T1_M1, _T1_0, _T1_P1 = _spin_matrices()
_T1 = {-1: _T1_M1, 0: _T1_0, 1: _T1_P1}


def spin_tensor2(q: int) -> np.ndarray:
    """[S x S]^2_q as a 3x3 matrix over |S=1 M_S>, M_S = -1, 0, +1."""
    out = np.zeros((3, 3))
    for q1 in (-1, 0, 1):
        q2 = q - q1
        if abs(q2) > 1:
            continue
        out += clebsch(1, q1, 1, q2, 2, q) * (_T1[q1] @ _T1[q2])
    return out


def _reduced_spin(op_by_q: dict[int, np.ndarray], k: int) -> float:
    """Reduced matrix element <S||T^k||S> via Wigner-Eckart, from explicit
    operator matrices (basis M_S = -1..1)."""
    for q, op in op_by_q.items():
        for mi, m in enumerate(range(-SPIN, SPIN + 1)):
            mp = m - q
            if abs(mp) > SPIN:
                continue
            tj = wigner3j(SPIN, k, SPIN, -m, q, mp)
            if abs(tj) > 1e-12:
                val = op[mi, mp + SPIN]
                return val / ((-1.0) ** (SPIN - m) * tj)
    raise RuntimeError("no nonzero component found")


_RED_SPIN_T2 = _reduced_spin({q: spin_tensor2(q) for q in range(-2, 3)}, 2)
_RED_SPIN_SZ = _reduced_spin({0: _SZ}, 1)  # = sqrt(S(S+1)(2S+1))


def _reduced_c(l: int, k: int, lp: int) -> float:
    """Reduced element <l||C^k||l'> in the same Wigner-Eckart convention."""
    for m in range(-l, l + 1):
        for q in range(-k, k + 1):
            mp = m - q
            if abs(mp) > lp:
                continue
            tj = wigner3j(l, k, lp, -m, q, mp)
            if abs(tj) > 1e-12:
                return c_tensor_element(l, m, k, q, lp, mp) / (
                    (-1.0) ** (l - m) * tj
                )
    return 0.0


def spin_spin_element(n1: int, j1: int, n2: int, j2: int, lam: float) -> float:
    """<N1 J M| H_ss |N2 J M> in case b; diagonal in J and M_J.

    H_ss = (2 lam/3) sqrt(6) T^2(C) . T^2(S,S), which reduces to the familiar
    (2 lam/3)(3 S_z'^2 - S^2) in the molecule-fixed frame.
    """
    if j1 != j2:
        return 0.0
    red_rot = _reduced_c(n1, 2, n2)
    if red_rot == 0.0:
        return 0.0
    phase = (-1.0) ** ((j1 + n2 + SPIN) % 2)
    return (
        (2.0 * lam / 3.0)
        * sqrt(6.0)
        * phase
        * wigner6j(n1, SPIN, j1, SPIN, n2, 2)
        * red_rot
        * _RED_SPIN_T2
    )


def spin_rotation_element(n: int, j: int, gamma: float) -> float:
    """gamma N.S, diagonal in (N, J)."""
    return 0.5 * gamma * (j * (j + 1) - n * (n + 1) - SPIN * (SPIN + 1))


def zeeman_element(n: int, j1: int, j2: int, m_j: int) -> float:
    """<N J1 M_J| S_z |N J2 M_J> in case b (couples J, J+-1 at fixed N, M_J);
    multiply by g * mu0 * B for the Zeeman energy."""
    tj = wigner3j(j1, 1, j2, -m_j, 0, m_j)
    if tj == 0.0:
        return 0.0
    red = (
        (-1.0) ** ((n + SPIN + j2 + 1) % 2)
        * sqrt((2 * j1 + 1) * (2 * j2 + 1))
        * wigner6j(SPIN, j1, n, j2, SPIN, 1)
        * _RED_SPIN_SZ
    )
    return (-1.0) ** ((j1 - m_j) % 2) * tj * red


def build_monomer_hamiltonian(
    params: MonomerParams, m_j: int, field_gauss: float = 0.0
) -> tuple[np.ndarray, tuple[CaseBState, ...]]:
    """Hamiltonian matrix of the molecule in the case-b M_J block.

    Returns (H, basis) with H in Kelvin, symmetric by construction.
    """
    basis = case_b_basis(params.n_max, m_j)
    if not basis:
        raise EmptyBasisError(f"no case-b states with |M_J| = |{m_j}| <= N_max+1")
    dim = len(basis)
    h = np.zeros((dim, dim))
    for i, a in enumerate(basis):
        h[i, i] += params.b_rot * a.n * (a.n + 1)
        h[i, i] += spin_rotation_element(a.n, a.j, params.gamma)
        for k, b in enumerate(basis):
            if a.j == b.j:
                h[i, k] += spin_spin_element(a.n, a.j, b.n, b.j, params.lam)
            if a.n == b.n and field_gauss != 0.0:
                h[i, k] += (
                    params.g
                    * params.mu0
                    * field_gauss
                    * zeeman_element(a.n, a.j, b.j, m_j)
                )
    return h, basis


def monomer_levels(
    params: MonomerParams, m_j: int, field_gauss: float
) -> list[MonomerLevel]:
    """Field-dressed levels of one M_J block, labeled by adiabatic connection
    to the B=0 spectrum (eigenvalue order is preserved within a block)."""
    h0, basis = build_monomer_hamiltonian(params, m_j, 0.0)
    e0, v0 = np.linalg.eigh(h0)
    # B=0 labels: dominant case-b component of each zero-field eigenvector
    labels = [basis[int(np.argmax(np.abs(v0[:, k])))] for k in range(len(basis))]
    if field_gauss == 0.0:
        e, v = e0, v0
    else:
        h, _ = build_monomer_hamiltonian(params, m_j, field_gauss)
        e, v = np.linalg.eigh(h)
        for k in range(len(basis)):
            dom = basis[int(np.argmax(np.abs(v[:, k])))]
            if dom != labels[k]:
                log.warning(
                    "level %s at B=%.1f G has dominant component %s "
                    "(diabatic labels retained)",
                    labels[k],
                    field_gauss,
                    dom,
                )
    return [
        MonomerLevel(labels[k], float(e[k]), v[:, k].copy(), basis)
        for k in range(len(basis))
    ]


def threshold_energy(
    params: MonomerParams, label: CaseBState, field_gauss: float
) -> float:
    """Asymptotic channel energy (Kelvin) of the level adiabatically
    connected to the zero-field state `label`."""
    for lev in monomer_levels(params, label.m_j, field_gauss):
        if lev.labels == label:
            return lev.energy
    raise ValueError(f"state {label} not present with N_max = {params.n_max}")


@dataclass(frozen=True)
class ZeemanCurve:
    """One adiabatic level energy curve over a field grid."""

    labels: CaseBState
    field_gauss: np.ndarray
    energy: np.ndarray
    weak_field_seeking: bool


def zeeman_levels(params: MonomerParams, b_grid) -> list[ZeemanCurve]:
    """Adiabatic Zeeman level curves for every M_J block, over b_grid."""
    b_grid = np.asarray(b_grid, dtype=float)
    if b_grid.ndim != 1 or np.any(b_grid < 0):
        raise ValueError("b_grid must be a 1-D nonnegative array")
    curves = []
    j_max = params.n_max + SPIN
    for m_j in range(-j_max, j_max + 1):
        block = [monomer_levels(params, m_j, b) for b in b_grid]
        n_lev = len(block[0])
        for k in range(n_lev):
            energies = np.array([block[ib][k].energy for ib in range(len(b_grid))])
            if len(b_grid) > 1:
                seeker = energies[1] > energies[0]
            else:
                seeker = False
            curves.append(
                ZeemanCurve(block[0][k].labels, b_grid.copy(), energies, seeker)
            )
    return curves
