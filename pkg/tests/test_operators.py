import numpy as np
import pytest

from tbglab import (
    assemble_D,
    assemble_H,
    assemble_T,
    build_T,
    enumerate_basis,
    fine_sector_restrict,
    pairing,
    sector_restrict,
)
from tbglab.magic import DEFAULT_K, SECOND_K


def quadrature_matrix_element(lat, pot, alpha, basis, n=48):
    """Dense quadrature oracle for <e_p', (D(alpha)+k) e_p> over one cell.

    The derivative acts analytically on the plane wave; products of basis
    exponentials are integrated on a uniform cell grid (exact for
    trigonometric polynomials below the aliasing threshold).
    """
    g1, g2 = lat.gamma_gens
    s = np.arange(n) / n
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    z = (S1 * g1 + S2 * g2).ravel()
    u = pot.evaluate(z)
    um = pot.evaluate(z, negate=True)
    dim = basis.dim
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        p_in, c_in = basis.vec_momenta[i], basis.vec_component[i]
        wave = np.exp(1j * pairing(z, np.conj(p_in)).real) if False else \
            np.exp(1j * (z * np.conj(p_in)).real)
        deriv = p_in * wave
        tun = alpha * (u if c_in == 1 else um) * wave
        for j in range(dim):
            p_out, c_out = basis.vec_momenta[j], basis.vec_component[j]
            bra = np.exp(-1j * (z * np.conj(p_out)).real)
            if c_out == c_in:
                out[j, i] += np.mean(bra * deriv)
            else:
                out[j, i] += np.mean(bra * tun)
    return out


def test_assemble_D_matches_quadrature_oracle(lat, pot):
    basis = enumerate_basis(lat, DEFAULT_K, 1.2, 2)
    got = assemble_D(0.5, basis, pot).matrix
    want = quadrature_matrix_element(lat, pot, 0.5, basis)
    # drop rows whose shifted momenta fall outside the ball: the oracle
    # sees them, the Galerkin matrix intentionally does not
    assert np.max(np.abs(got - want)) < 1e-10


def test_assemble_D_alpha_zero_is_diagonal(lat, pot):
    basis = enumerate_basis(lat, DEFAULT_K, 4.0, 2)
    mat = assemble_D(0.0, basis, pot).matrix
    off = mat - np.diag(np.diag(mat))
    assert np.max(np.abs(off)) == 0.0
    assert np.allclose(np.diag(mat), basis.vec_momenta)


def test_assembly_local_in_momentum(lat, pot):
    coarse = enumerate_basis(lat, DEFAULT_K, 4.0, 2)
    fine = enumerate_basis(lat, DEFAULT_K, 6.0, 2)
    mc = assemble_D(0.7, coarse, pot).matrix
    mf = assemble_D(0.7, fine, pot).matrix
    key = {(int(a), int(b), int(c)): i for i, ((a, b), c) in
           enumerate(zip(np.repeat(coarse.coords, 2, axis=0),
                         coarse.vec_component))}
    idx = [key.get((int(a), int(b), int(c)), -1)
           for (a, b), c in zip(np.repeat(fine.coords, 2, axis=0),
                                fine.vec_component)]
    idx = np.array(idx)
    sel_f = np.nonzero(idx >= 0)[0]
    sel_c = idx[sel_f]
    # interior entries agree wherever both shifted momenta are shared;
    # boundary rows of the coarse ball may miss dropped shifts
    interior = np.abs(fine.vec_momenta[sel_f]) < 4.0 - 1.1
    diff = mf[np.ix_(sel_f[interior], sel_f[interior])] \
        - mc[np.ix_(sel_c[interior], sel_c[interior])]
    assert np.max(np.abs(diff)) < 1e-12


def test_H_hermitian_and_chiral(lat, pot):
    H = assemble_H(0.0, 0.4, DEFAULT_K, pot, lat, 5.0)
    assert H.hermiticity_defect() < 1e-12
    w = np.where(H.basis.vec_component < 2, 1.0, -1.0)
    flipped = w[:, None] * H.matrix * w[None, :]
    assert np.max(np.abs(flipped + H.matrix)) == 0.0


def test_mass_quadrature_relation(lat, pot):
    h0 = fine_sector_restrict(assemble_H(0.0, 0.45, SECOND_K, pot, lat, 5.0),
                              0, 0)
    hm = fine_sector_restrict(assemble_H(0.3, 0.45, SECOND_K, pot, lat, 5.0),
                              0, 0)
    e0 = np.linalg.eigvalsh(h0.matrix)
    em = np.linalg.eigvalsh(hm.matrix)
    pos = e0[e0 >= -1e-12]
    want = np.sort(np.concatenate([np.sqrt(pos**2 + 0.09),
                                   -np.sqrt(pos**2 + 0.09)]))
    assert np.max(np.abs(np.sort(em) - want)) < 1e-10


def test_free_massless_spectrum(lat, pot):
    H = assemble_H(0.0, 0.0, DEFAULT_K, pot, lat, 4.0)
    ev = np.linalg.eigvalsh(H.matrix)
    want = np.sort(np.concatenate([np.abs(H.basis.momenta)] * 2
                                  + [-np.abs(H.basis.momenta)] * 2))
    assert np.max(np.abs(np.sort(ev) - want)) < 1e-10


def test_T_odd_traces_vanish(T12):
    m = T12.matrix
    acc = np.eye(m.shape[0], dtype=complex)
    for p in range(7):
        acc = acc @ m
        if (p + 1) % 2 == 1:
            assert abs(np.trace(acc)) < 1e-10


def test_T_requires_valid_momentum(lat, pot):
    basis = enumerate_basis(lat, -1j, 6.0, 2)
    with pytest.raises(ValueError, match="singular resolvent"):
        assemble_T(-1j, basis, pot)


def test_T_block_off_diagonal_structure(lat, pot):
    T = build_T(lat, pot, DEFAULT_K, 5.0)
    c = T.basis.vec_component
    same = np.ix_(c == 0, c == 0)
    assert np.max(np.abs(T.matrix[same])) == 0.0
    same2 = np.ix_(c == 1, c == 1)
    assert np.max(np.abs(T.matrix[same2])) == 0.0


def test_sector_restrict_direct_sum(T12):
    full = np.linalg.eigvals(T12.matrix)
    parts = []
    dims = 0
    for ell in range(3):
        sub = sector_restrict(T12, ell)
        dims += sub.dim
        parts.append(np.linalg.eigvals(sub.matrix))
    assert dims == T12.dim
    union = np.concatenate(parts)
    # multiset equality via moments (robust against tie-ordering jitter)
    for p in range(1, 7):
        assert abs(np.sum(union**p) - np.sum(full**p)) < 1e-9 * T12.dim
    assert np.max(np.abs(np.sort(np.abs(union)) - np.sort(np.abs(full)))) < 1e-9


def test_sector_nonzero_spectra_agree(T12):
    def nz(ell):
        ev = np.linalg.eigvals(sector_restrict(T12, ell).matrix)
        return ev[np.abs(ev) > 0.3]

    s0, s1 = nz(0), nz(1)
    for v in s0:
        assert np.min(np.abs(s1 - v)) < 1e-6
    for v in s1:
        assert np.min(np.abs(s0 - v)) < 1e-6


def test_sector_restrict_of_diagonal_is_diagonal(lat, pot, T12):
    diag = np.diag(np.arange(T12.dim, dtype=complex))
    from tbglab.operators import BlockOperator

    op = BlockOperator(matrix=diag, basis=T12.basis, block_structure="generic")
    sub = sector_restrict(op, 1)
    assert np.count_nonzero(sub.matrix - np.diag(np.diag(sub.matrix))) == 0


def test_empty_sector_errors(lat, pot):
    b = enumerate_basis(lat, DEFAULT_K, 0.4, 2)
    from tbglab.operators import BlockOperator

    op = BlockOperator(matrix=np.zeros((b.dim, b.dim), dtype=complex),
                       basis=b, block_structure="generic")
    present = set(b.sector_labels.tolist())
    missing = ({0, 1, 2} - present)
    if missing:
        with pytest.raises(ValueError, match="empty"):
            sector_restrict(op, missing.pop())


def test_k_independence_of_nonzero_spectra(lat, pot):
    ta = build_T(lat, pot, DEFAULT_K, 12.0)
    tb = build_T(lat, pot, SECOND_K, 12.0)
    ea = np.linalg.eigvals(fine_sector_restrict(ta, 0, 0).matrix)
    eb = np.linalg.eigvals(fine_sector_restrict(tb, 0, 0).matrix)
    ea = ea[np.abs(ea) > 0.5]
    eb = eb[np.abs(eb) > 0.5]
    for v in ea:
        assert np.min(np.abs(eb - v)) < 1e-6
