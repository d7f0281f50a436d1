"""Assembly of the model operators as dense complex matrices.

The derivative acts diagonally (multiplication by the momentum p) and the
tunnelling potential acts by momentum shifts, so all operators here are
sparse in momentum space; they are materialized densely because the
spectral routines downstream are dense anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import PlaneWaveBasis, enumerate_basis
from .lattice import MoireLattice, PotentialSpec

HERMITIAN_TOL = 1e-12


@dataclass
class BlockOperator:
    """Dense complex matrix tagged with its basis and block structure."""

    matrix: np.ndarray
    basis: PlaneWaveBasis
    block_structure: str
    hermitian: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _shift_blocks(basis: PlaneWaveBasis, pot: PotentialSpec, negate: bool):
    """Momentum-shift matrix of U(z) (or U(-z)) on the scalar momentum set.

    Shifts leaving the cutoff ball are dropped (Galerkin truncation).
    """
    lat = basis.lattice
    n = basis.momenta.size
    lookup = basis.index_of_coords()
    mat = np.zeros((n, n), dtype=complex)
    sign = -1 if negate else 1
    for q, c in pot.modes:
        d = lat.dual_coords(sign * q).round().astype(int)
        d1, d2 = int(d[0]), int(d[1])
        for i, (n1, n2) in enumerate(basis.coords):
            j = lookup.get((int(n1) + d1, int(n2) + d2))
            if j is not None:
                mat[j, i] += c
    return mat


def _interleave(blocks, components):
    """Assemble a (components*n) square matrix from a dict {(c_out, c_in): block}."""
    n = next(iter(blocks.values())).shape[0]
    out = np.zeros((components * n, components * n), dtype=complex)
    for (co, ci), b in blocks.items():
        out[co::components, ci::components] = b
    return out


def assemble_D(alpha: complex, basis: PlaneWaveBasis, pot: PotentialSpec) -> BlockOperator:
    """Matrix of D(alpha) + k on a 2-component basis.

    The diagonal derivative part multiplies the plane wave exp(i<z,p>) by
    its momentum p (the quasi-momentum k is already folded into p); the
    off-diagonal tunnelling blocks are alpha times momentum-shift matrices.
    """
    if basis.components != 2:
        raise ValueError("assemble_D needs a 2-component basis")
    diag = np.diag(basis.momenta)
    u_plus = _shift_blocks(basis, pot, negate=False)
    u_minus = _shift_blocks(basis, pot, negate=True)
    mat = _interleave(
        {(0, 0): diag, (1, 1): diag,
         (0, 1): alpha * u_plus, (1, 0): alpha * u_minus},
        2,
    )
    return BlockOperator(matrix=mat, basis=basis, block_structure="D")


def assemble_H(m: float, alpha: complex, k: complex, pot: PotentialSpec,
               lat: MoireLattice, cutoff: float) -> BlockOperator:
    """Hermitian Bloch Hamiltonian [[m, (D+k)^*], [(D+k), -m]] at quasi-momentum k."""
    if m < 0:
        raise ValueError("mass must be nonnegative")
    basis2 = enumerate_basis(lat, k, cutoff, 2)
    d = assemble_D(alpha, basis2, pot).matrix
    basis4 = enumerate_basis(lat, k, cutoff, 4)
    n = basis2.momenta.size
    h = np.zeros((4 * n, 4 * n), dtype=complex)
    for a in range(2):
        for b in range(2):
            h[a::4, 2 + b::4] = d.conj().T[a::2, b::2]
            h[2 + a::4, b::4] = d[a::2, b::2]
    idx = np.arange(4 * n)
    h[idx, idx] += np.where(basis4.vec_component < 2, m, -m)
    h = 0.5 * (h + h.conj().T)
    op = BlockOperator(matrix=h, basis=basis4, block_structure="H", hermitian=True)
    defect = op.hermiticity_defect()
    if defect > HERMITIAN_TOL:
        raise AssertionError(f"Hamiltonian not Hermitian: defect {defect:.2e}")
    return op


def assemble_T(k: complex, basis: PlaneWaveBasis, pot: PotentialSpec,
               tol_singular: float = 1e-10) -> BlockOperator:
    """Compact Birman-Schwinger operator (2 D_zbar + k)^(-1) [[0, U], [U(-.), 0]].

    The resolvent is diagonal with entries 1/p on the shifted momenta, so
    any momentum inside the cutoff ball with |p| < tol_singular makes the
    assembly ill-posed; callers must then move the quasi-momentum k.
    Works on full and on sector-restricted bases (the potential shifts
    preserve the translation characters, so a restricted basis is closed
    under them).
    """
    if basis.components != 2:
        raise ValueError("assemble_T needs a 2-component basis")
    if abs(complex(k) - basis.k) > 1e-12:
        raise ValueError("k must match the basis quasi-momentum")
    if (np.abs(basis.vec_momenta) < tol_singular).any():
        raise ValueError(
            "singular resolvent: momentum p = k + dual vector with |p| < "
            f"{tol_singular:g} present; change k (it lies on the dual lattice)"
        )
    lat = basis.lattice
    vec_coords = lat.dual_coords(basis.vec_momenta - basis.k).round().astype(int)
    lookup = {(int(n1), int(n2), int(c)): i
              for i, ((n1, n2), c) in enumerate(zip(vec_coords,
                                                    basis.vec_component))}
    dim = basis.dim
    mat = np.zeros((dim, dim), dtype=complex)
    inv = 1.0 / basis.vec_momenta
    for q, c in pot.modes:
        d = lat.dual_coords(q).round().astype(int)
        d1, d2 = int(d[0]), int(d[1])
        for i in range(dim):
            n1, n2 = int(vec_coords[i][0]), int(vec_coords[i][1])
            if basis.vec_component[i] == 1:       # U block: comp 1 -> comp 0
                j = lookup.get((n1 + d1, n2 + d2, 0))
            else:                                  # U(-.) block: comp 0 -> 1
                j = lookup.get((n1 - d1, n2 - d2, 1))
            if j is not None:
                mat[j, i] += c * inv[j]
    return BlockOperator(matrix=mat, basis=basis, block_structure="T")


def build_T(lat: MoireLattice, pot: PotentialSpec, k: complex,
            cutoff: float) -> BlockOperator:
    """Convenience: enumerate a validated basis and assemble T in one call."""
    basis = enumerate_basis(lat, k, cutoff, 2, require_invertible=True)
    return assemble_T(k, basis, pot)


def sector_restrict(op: BlockOperator, ell: int) -> BlockOperator:
    """Restrict an operator commuting with the refined translations to a sector."""
    labels = op.basis.sector_labels
    mask = labels == ell
    if not mask.any():
        raise ValueError(f"sector {ell} is empty at this cutoff")
    idx = np.nonzero(mask)[0]
    sub = op.matrix[np.ix_(idx, idx)]
    off = op.matrix[np.ix_(idx, np.nonzero(~mask)[0])]
    if off.size and np.max(np.abs(off)) > 1e-10:
        raise ValueError("operator does not commute with the sector grading")
    return BlockOperator(
        matrix=sub,
        basis=op.basis.subset(idx),
        block_structure=op.block_structure,
        hermitian=op.hermitian,
    )


def fine_sector_restrict(op: BlockOperator, m1: int, m2: int) -> BlockOperator:
    """Restrict to a single joint translation character (m1, m2)."""
    fine = op.basis.fine_labels
    mask = (fine[:, 0] == m1) & (fine[:, 1] == m2)
    if not mask.any():
        raise ValueError(f"fine sector ({m1},{m2}) is empty at this cutoff")
    idx = np.nonzero(mask)[0]
    return BlockOperator(
        matrix=op.matrix[np.ix_(idx, idx)],
        basis=op.basis.subset(idx),
        block_structure=op.block_structure,
        hermitian=op.hermitian,
    )


def smallest_singular_value(mat: np.ndarray) -> float:
    """sigma_min of a dense matrix."""
    return float(np.linalg.svd(mat, compute_uv=False)[-1])


def operator_norm(mat: np.ndarray) -> float:
    return float(np.linalg.svd(mat, compute_uv=False)[0])
