import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy.special import lpmv

from coldscatter.angmom import clebsch
from coldscatter.channels import (
    CouplingMatrix,
    angular_coupling,
    asymptotic_hamiltonian,
    enumerate_basis,
    potential_matrix_elements,
)
from coldscatter.monomer import SPIN, CaseBState, MonomerParams, zeeman_levels
from coldscatter.potential import LennardJones, PotentialModel, PotentialTerm, default_model


PARAMS = MonomerParams()


def test_full_basis_channel_count():
    basis = enumerate_basis(PARAMS, l_max=6, n_max=6, m_total=1, b_field=0.0)
    assert len(basis) == 205


def test_minimal_basis():
    basis = enumerate_basis(PARAMS, l_max=0, n_max=0, m_total=1, b_field=0.0)
    assert len(basis) == 1
    (ch,) = basis.channels
    assert ch.state == CaseBState(0, 1, 1) and ch.l == 0 and ch.m_l == 0


def test_enumeration_oracle_small():
    # explicit loop oracle for L_max=2, N_max=0, M=1, even parity
    count = 0
    for l in (0, 2):
        for m_l in range(-l, l + 1):
            m_j = 1 - m_l
            if abs(m_j) <= 1:  # N=0 -> J=1 only
                count += 1
    basis = enumerate_basis(PARAMS, l_max=2, n_max=0, m_total=1, b_field=0.0)
    assert len(basis) == count == 4


def test_ordering_deterministic():
    b1 = enumerate_basis(PARAMS, l_max=4, n_max=2, m_total=1, b_field=100.0)
    b2 = enumerate_basis(PARAMS, l_max=4, n_max=2, m_total=1, b_field=100.0)
    assert b1.channels == b2.channels
    thr = b1.thresholds
    for i in range(len(thr) - 1):
        a, b = b1.channels[i], b1.channels[i + 1]
        assert (round(a.threshold, 12), a.l, a.m_l) <= (round(b.threshold, 12), b.l, b.m_l)


def test_isotropic_term_is_diagonal():
    basis = enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0)
    a0 = angular_coupling(basis, 0)
    assert np.allclose(a0, np.eye(len(basis.caseb)), atol=1e-12)


def test_p2_vanishes_within_n0():
    basis = enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0)
    a2 = angular_coupling(basis, 2)
    for i, (st1, l1, ml1) in enumerate(basis.caseb):
        for k, (st2, l2, ml2) in enumerate(basis.caseb):
            if st1.n == 0 and st2.n == 0:
                assert a2[i, k] == 0.0


def _sph_harm(l, m, x, phi):
    """Spherical harmonic with Condon-Shortley phase (scipy lpmv carries it)."""
    am = abs(m)
    norm = math.sqrt(
        (2 * l + 1) / (4 * np.pi) * math.factorial(l - am) / math.factorial(l + am)
    )
    y = norm * lpmv(am, l, x) * np.exp(1j * am * phi)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y


def test_quadrature_oracle_full_matrix():
    """Brute-force 2D x 2D angular quadrature of <channel|V(R,theta)|channel'>
    in the uncoupled product basis, against the recoupling build."""
    model = default_model()
    basis = enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0)
    r = 6.5

    nt, np_ = 14, 14
    x, wx = leggauss(nt)
    phi = 2 * np.pi * np.arange(np_) / np_
    wphi = 2 * np.pi / np_

    # grids: molecular axis (a) and collision axis (r), shape (nt, np, nt, np)
    xa = x[:, None, None, None]
    pa = phi[None, :, None, None]
    xr = x[None, None, :, None]
    pr = phi[None, None, None, :]
    cosg = xa * xr + np.sqrt(1 - xa**2) * np.sqrt(1 - xr**2) * np.cos(pa - pr)
    v = model.radial_coupling(0, r) + model.radial_coupling(2, r) * 0.5 * (
        3 * cosg**2 - 1
    )
    weight = (wx[:, None, None, None] * wphi) * (wx[None, None, :, None] * wphi)

    # channel angular functions, one spin component at a time
    def chan_fn(st, l, m_l, m_s):
        m_n = st.m_j - m_s
        if abs(m_n) > st.n:
            return None
        cg = clebsch(st.n, m_n, SPIN, m_s, st.j, st.m_j)
        if cg == 0.0:
            return None
        return cg * _sph_harm(st.n, m_n, xa, pa) * _sph_harm(l, m_l, xr, pr)

    n_cb = len(basis.caseb)
    oracle = np.zeros((n_cb, n_cb))
    funcs = {}
    for i, (st, l, m_l) in enumerate(basis.caseb):
        for m_s in range(-SPIN, SPIN + 1):
            f = chan_fn(st, l, m_l, m_s)
            if f is not None:
                funcs[(i, m_s)] = f
    for i in range(n_cb):
        for k in range(i, n_cb):
            acc = 0.0
            for m_s in range(-SPIN, SPIN + 1):
                fi = funcs.get((i, m_s))
                fk = funcs.get((k, m_s))
                if fi is None or fk is None:
                    continue
                acc += np.sum(weight * np.conj(fi) * v * fk).real
            oracle[i, k] = oracle[k, i] = acc

    built = potential_matrix_elements(basis, model, r)
    assert np.max(np.abs(built - oracle)) < 1e-8


def test_coupling_matrix_symmetric_random_r():
    model = default_model()
    basis = enumerate_basis(PARAMS, l_max=4, n_max=2, m_total=1, b_field=250.0)
    cm = CouplingMatrix(basis, model)
    rng = np.random.default_rng(7)
    for r in rng.uniform(3.5, 80.0, size=200):
        m = cm.potential(float(r))
        assert np.max(np.abs(m - m.T)) < 1e-12


def test_isotropic_zero_field_decoupling():
    # anisotropy off, B=0: channels with different (J, M_J, L, M_L) decouple
    model = PotentialModel((PotentialTerm(0, LennardJones(6e10, 2.6e6)),))
    basis = enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0)
    cm = CouplingMatrix(basis, model)
    m = cm.potential(7.0)
    off = m - np.diag(np.diag(m))
    assert np.max(np.abs(off)) < 1e-12


def test_asymptotic_diagonal():
    model = default_model()
    basis = enumerate_basis(PARAMS, l_max=2, n_max=4, m_total=1, b_field=800.0)
    cm = CouplingMatrix(basis, model)
    r = 5e4
    m = cm.potential(r)
    expect = basis.thresholds + (
        cm._cent / r**2
    )
    assert np.max(np.abs(np.diag(m) - expect)) < 1e-12
    assert np.max(np.abs(m - np.diag(np.diag(m)))) < 1e-10


def test_transform_orthogonal():
    basis = enumerate_basis(PARAMS, l_max=2, n_max=4, m_total=1, b_field=1500.0)
    u, thr = asymptotic_hamiltonian(basis)
    assert np.allclose(u.T @ u, np.eye(len(basis)), atol=1e-12)


def test_thresholds_cross_module_consistency():
    for b_field in (0.0, 2500.0):
        basis = enumerate_basis(PARAMS, l_max=0, n_max=6, m_total=1, b_field=b_field)
        curves = {
            c.labels: c for c in zeeman_levels(PARAMS, np.array([b_field]))
        }
        for ch in basis.channels:
            assert ch.threshold == pytest.approx(
                curves[ch.state].energy[0], abs=1e-12
            )


def test_nmax0_thresholds_linear():
    basis = enumerate_basis(PARAMS, l_max=2, n_max=0, m_total=1, b_field=1000.0)
    for ch in basis.channels:
        assert ch.threshold == pytest.approx(
            PARAMS.g * PARAMS.mu0 * 1000.0 * ch.state.m_j, abs=1e-12
        )


def test_zero_field_mj_degenerate_thresholds():
    basis = enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0)
    by_nj = {}
    for ch in basis.channels:
        by_nj.setdefault((ch.state.n, ch.state.j), []).append(ch.threshold)
    for vals in by_nj.values():
        assert np.ptp(vals) < 1e-12


def test_invalid_args():
    with pytest.raises(ValueError):
        enumerate_basis(PARAMS, l_max=2, n_max=3, m_total=1, b_field=0.0)
    with pytest.raises(ValueError):
        enumerate_basis(PARAMS, l_max=2, n_max=2, m_total=1, b_field=0.0, parity=0)
