"""Log-derivative propagation of the close-coupled radial equations and
matching to field-dressed asymptotic solutions.

The radial problem psi'' = W(R) psi is propagated as Y = psi' psi^-1 from a
point deep inside the repulsive wall out to R_max.  Each sector uses the
exact propagator of the locally constant (midpoint) coupling matrix,
obtained by diagonalization, which is stable through deeply classically
forbidden regions.  At R_max the solution is matched against Riccati-Bessel
pairs in the open channels while locally closed channels are eliminated
with exponentially decaying modified spherical Bessel functions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, solve
from scipy.optimize import brentq
from scipy.special import kve, spherical_jn, spherical_yn

from .channels import CouplingMatrix
from .units import hbar2_over_2mu

log = logging.getLogger(__name__)

__all__ = [
    "PropagationGrid",
    "auto_grid",
    "propagate_logderiv",
    "match_to_asymptotics",
    "smatrix",
    "SMatrix",
    "PropagationError",
]

WALL_LOGDERIV = 1e8  # boundary value of Y at R_min (inside the wall)


class PropagationError(RuntimeError):
    """Non-finite log-derivative during propagation; carries the radius."""

    def __init__(self, r: float):
        super().__init__(f"log-derivative became non-finite near R = {r:.3f} bohr")
        self.r = r


@dataclass(frozen=True)
class PropagationGrid:
    """Sector boundaries: fixed step up to r_switch, then geometric sectors
    capped at h_cap (keeps omega*h below ~1 for open channels)."""

    r_min: float
    r_max: float
    h_well: float = 0.05
    r_switch: float = 30.0
    sector_ratio: float = 1.02
    h_cap: float = np.inf

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.h_well <= 0 or self.sector_ratio <= 1.0 or self.h_cap <= 0:
            raise ValueError("invalid step policy")

    def boundaries(self) -> np.ndarray:
        pts = [self.r_min]
        switch = min(self.r_switch, self.r_max)
        n_fixed = max(1, int(np.ceil((switch - self.r_min) / self.h_well)))
        pts.extend(self.r_min + (switch - self.r_min) * np.arange(1, n_fixed + 1) / n_fixed)
        r = pts[-1]
        while r < self.r_max:
            h = min(r * (self.sector_ratio - 1.0), self.h_cap)
            h = max(h, self.h_well)
            r = min(r + h, self.r_max)
            pts.append(r)
        return np.asarray(pts)

    def refined(self, factor: int = 2) -> "PropagationGrid":
        """Same span with every sector width divided by `factor`."""
        return PropagationGrid(
            self.r_min,
            self.r_max,
            self.h_well / factor,
            self.r_switch,
            1.0 + (self.sector_ratio - 1.0) / factor,
            self.h_cap / factor,
        )


def auto_grid(
    coupling: CouplingMatrix,
    e_total: float,
    h_well: float = 0.05,
    length_tol: float = 1e-4,
) -> PropagationGrid:
    """Choose a grid from the physics: R_min inside the repulsive wall,
    R_max where truncating the dispersion tail shifts the scattering length
    by less than length_tol bohr, sector cap from the largest open
    wavenumber."""
    thr = coupling.basis.thresholds
    kinetic = e_total - thr
    open_kin = kinetic[kinetic > 0]
    if open_kin.size == 0:
        raise ValueError("no open channels at this total energy")
    model = coupling.model
    wall_target = max(2000.0, 10.0 * float(np.max(open_kin)))

    def v0(r):
        return float(model.radial_coupling(0, r)) - wall_target

    r_hi = 30.0
    r_lo = 0.3
    r_min = brentq(v0, r_lo, r_hi) if v0(r_lo) > 0 else r_lo
    scale = 1.0 / hbar2_over_2mu(coupling.basis.reduced_mass)
    # Born tail shift: delta a ~ (2 mu/hbar^2) C6 / (3 R^3)
    r_max = max(60.0, (scale * model.tail_c6 / (3.0 * length_tol)) ** (1.0 / 3.0))
    k_max = float(np.sqrt(scale * np.max(open_kin)))
    return PropagationGrid(r_min, r_max, h_well=h_well, h_cap=0.4 / k_max)


def _sector_coeffs(lam: np.ndarray, h: float):
    """Diagonal imbedding propagators (y1 = y4, y2 = y3) of y'' = lam y over
    a sector of width h, elementwise over eigenvalues lam."""
    y1 = np.empty_like(lam)
    y2 = np.empty_like(lam)
    closed = lam > 0
    if np.any(closed):
        w = np.sqrt(lam[closed])
        wh = w * h
        y1[closed] = w / np.tanh(wh)
        # csch underflows harmlessly for very closed channels
        with np.errstate(over="ignore"):
            s = np.sinh(wh)
        y2[closed] = np.where(np.isfinite(s), w / s, 0.0)
    if np.any(~closed):
        w = np.sqrt(-lam[~closed])
        wh = w * h
        with np.errstate(divide="ignore", invalid="ignore"):
            y1[~closed] = np.where(wh > 0, w / np.tan(wh), 1.0 / h)
            y2[~closed] = np.where(wh > 0, w / np.sin(wh), 1.0 / h)
    return y1, y2


def propagate_logderiv(
    w_of_r, n: int, grid: PropagationGrid, y_start: float = WALL_LOGDERIV
) -> np.ndarray:
    """Propagate Y = psi' psi^-1 from grid.r_min to grid.r_max.

    w_of_r(r) must return the symmetric n x n matrix of psi'' = W psi in
    1/bohr^2 units.  y_start may be a scalar (diagonal boundary condition)
    or a full matrix, e.g. the result of an earlier propagation segment.
    """
    y = np.eye(n) * y_start if np.isscalar(y_start) else np.array(y_start, dtype=float)
    bounds = grid.boundaries()
    w_right = w_of_r(bounds[0])
    for a, b in zip(bounds[:-1], bounds[1:]):
        h = b - a
        w_a = w_right
        w_mid = w_of_r(0.5 * (a + b))
        w_right = w_of_r(b)
        lam, t = eigh(w_mid)
        y1, y2 = _sector_coeffs(lam, h)
        # residual W - W(mid) enters as Simpson-weighted endpoint impulses,
        # which lifts the constant-reference sector step to fourth order
        y = y + (h / 6.0) * (w_a - w_mid)
        yt = t.T @ y @ t
        yt[np.diag_indices(n)] += y1
        minv_y2 = solve(yt, np.diag(y2), assume_a="sym")
        ynew = np.diag(y1) - y2[:, None] * minv_y2
        y = t @ ynew @ t.T
        y = y + (h / 6.0) * (w_right - w_mid)
        if not np.all(np.isfinite(y)):
            raise PropagationError(b)
    return y


@dataclass(frozen=True)
class SMatrix:
    """Scattering matrix on the open channels of one (E, B, M) block."""

    matrix: np.ndarray  # complex, n_open x n_open
    open_indices: tuple[int, ...]  # indices into the dressed channel list
    k_open: np.ndarray  # wavenumbers, 1/bohr
    e_total: float  # Kelvin, same zero as the channel thresholds
    basis: object = field(default=None, repr=False)

    @property
    def n_open(self) -> int:
        return len(self.open_indices)

    def unitarity_defect(self) -> float:
        s = self.matrix
        return float(
            np.linalg.norm(s.conj().T @ s - np.eye(s.shape[0]), ord=2)
        )

    def symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.T, ord=2))


def _riccati_open(l: int, k: float, r: float):
    x = k * r
    j, jp = spherical_jn(l, x), spherical_jn(l, x, derivative=True)
    y_, yp = spherical_yn(l, x), spherical_yn(l, x, derivative=True)
    f = x * j
    fp = k * (j + x * jp)
    g = -x * y_
    gp = -k * (y_ + x * yp)
    return f, fp, g, gp


def _riccati_closed(l: int, kappa: float, r: float):
    """Exponentially scaled decaying solution chi = e^x * x k_l(x) and its
    radial derivative; the overall scale cancels in the matching."""
    x = kappa * r
    g = np.sqrt(np.pi * x / 2.0) * kve(l + 0.5, x)
    gm1 = np.sqrt(np.pi * x / 2.0) * kve(max(l - 1, 0) + 0.5, x)  # k_{-1} = k_0
    dg_dx = -gm1 - (l / x) * g + g
    return g, kappa * dg_dx


def match_to_asymptotics(
    y: np.ndarray,
    r: float,
    l_values: np.ndarray,
    thresholds: np.ndarray,
    e_total: float,
    reduced_mass: float,
    basis=None,
) -> SMatrix:
    """K-matrix matching of the log-derivative at radius r, closed channels
    eliminated by decaying modified Riccati-Bessel solutions."""
    scale = 1.0 / hbar2_over_2mu(reduced_mass)
    k2 = scale * (e_total - np.asarray(thresholds))
    open_idx = np.flatnonzero(k2 > 0)
    if open_idx.size == 0:
        raise ValueError("no open channels at this total energy")
    n = len(l_values)
    n_open = open_idx.size

    a_mat = np.zeros((n, n_open))
    ap_mat = np.zeros((n, n_open))
    b_mat = np.zeros((n, n))
    bp_mat = np.zeros((n, n))
    k_open = np.sqrt(k2[open_idx])
    for col, i in enumerate(open_idx):
        f, fp, g, gp = _riccati_open(int(l_values[i]), k_open[col], r)
        # 1/sqrt(k) normalization makes the K matrix symmetric
        rk = 1.0 / np.sqrt(k_open[col])
        a_mat[i, col] = f * rk
        ap_mat[i, col] = fp * rk
        b_mat[i, i] = g * rk
        bp_mat[i, i] = gp * rk
    for i in np.flatnonzero(k2 <= 0):
        kappa = np.sqrt(-k2[i]) if k2[i] < 0 else 1e-30
        g, gp = _riccati_closed(int(l_values[i]), kappa, r)
        b_mat[i, i] = g
        bp_mat[i, i] = gp

    try:
        x = solve(y @ b_mat - bp_mat, ap_mat - y @ a_mat)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "ill-conditioned closed-channel elimination; increase R_max"
        ) from exc
    k_mat = x[open_idx, :]
    eye = np.eye(n_open)
    s = solve(eye - 1j * k_mat, eye + 1j * k_mat)
    return SMatrix(s, tuple(int(i) for i in open_idx), k_open, e_total, basis)


def smatrix(
    coupling: CouplingMatrix,
    e_total: float,
    grid: PropagationGrid | None = None,
) -> SMatrix:
    """Propagate one (E, B, M) block and return its S-matrix."""
    if grid is None:
        grid = auto_grid(coupling, e_total)
    y = propagate_logderiv(
        lambda r: coupling.w(r, e_total), len(coupling), grid
    )
    basis = coupling.basis
    return match_to_asymptotics(
        y,
        grid.r_max,
        basis.l_values,
        basis.thresholds,
        e_total,
        basis.reduced_mass,
        basis,
    )
