"""Magic-angle extraction and flat-band certification.

A twist parameter alpha is magic exactly when 1/alpha is an eigenvalue of
the compact operator assembled in :mod:`tbglab.operators`.  The
translation grading splits that operator into nine equivalent blocks; the
block with trivial joint character is the subspace the criterion refers
to, so eigenvalues (and kernel multiplicities) are computed there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import enumerate_basis
from .lattice import MoireLattice, PotentialSpec
from .operators import (
    BlockOperator,
    assemble_D,
    assemble_T,
    fine_sector_restrict,
)

# Quasi-momenta for full-basis assemblies: C3-symmetric, at distance 1/3
# from the dual lattice (every momentum in k + Gamma^* is nonzero there).
DEFAULT_K = -1j / 3
SECOND_K = 1j / 3
# Corner of the moire Brillouin zone: the canonical momentum for the
# sector-restricted compact operator.  -i itself lies on the dual lattice,
# so the full-basis resolvent is singular there, but the nonsingular
# translation-character blocks have unit distance to the nearest momentum,
# which is exactly the normalization behind the a priori norm bounds
# (operator norm <= 3, fourth Schatten norm <= 4) used by the stability
# machinery.
MAGIC_K = -1j

DEGENERACY_RTOL = 1e-6


@dataclass
class MagicAngleSet:
    """Magic angles found at one (cutoff, k) with per-angle diagnostics."""

    alphas: list  # of (alpha, eigenvalue, degeneracy, sector)
    cutoff: float
    k_used: complex
    residuals: list = field(default_factory=list)
    non_generic: list = field(default_factory=list)

    def real_positive(self, atol=1e-6):
        return sorted(
            a.real for a, _, _, _ in self.alphas
            if abs(a.imag) < atol and a.real > 0
        )


def best_sector(basis, tol=1e-8):
    """The translation character (m1, m2) whose momenta stay farthest from
    zero: the best-conditioned block to assemble the compact operator on."""
    best = None
    best_dist = tol
    fine = basis.fine_labels
    for m1 in range(3):
        for m2 in range(3):
            mask = (fine[:, 0] == m1) & (fine[:, 1] == m2)
            if not mask.any():
                continue
            dist = float(np.abs(basis.vec_momenta[mask]).min())
            if dist > best_dist + 1e-12:
                best, best_dist = (m1, m2), dist
    if best is None:
        raise ValueError("every translation character touches a singular "
                         "momentum; change the quasi-momentum")
    return best


def magic_operator(lat: MoireLattice, pot: PotentialSpec,
                   k: complex = MAGIC_K, cutoff: float = 12.0) -> BlockOperator:
    """T restricted to its best-conditioned translation-character block.

    At the Brillouin-zone corner k = -i this is the block with character
    (1, 1) and unit distance to the nearest momentum; all blocks share the
    same nonzero spectrum, so the magic-angle content is unaffected by the
    choice.
    """
    basis = enumerate_basis(lat, k, cutoff, 2)
    m1, m2 = best_sector(basis)
    fine = basis.fine_labels
    sub = basis.subset((fine[:, 0] == m1) & (fine[:, 1] == m2))
    return assemble_T(k, sub, pot)


def kernel_residual(lat, pot, alpha, k, cutoff=8.0):
    """sigma_min of D(alpha)+k on the fiber; near zero iff alpha is magic."""
    basis = enumerate_basis(lat, k, cutoff, 2)
    fib = fine_sector_restrict(assemble_D(alpha, basis, pot), 0, 0)
    return float(np.linalg.svd(fib.matrix, compute_uv=False)[-1])


def classify_degeneracy(T: BlockOperator, alpha: complex,
                        rtol: float = DEGENERACY_RTOL) -> int:
    """Numerical kernel multiplicity of (T - 1/alpha) by singular-value count.

    Raises ValueError when 1/alpha is not within the multiplicity
    threshold of the spectrum, i.e. alpha is not magic at this cutoff.
    """
    lam = 1.0 / alpha
    mat = T.matrix - lam * np.eye(T.dim)
    s = np.linalg.svd(mat, compute_uv=False)
    scale = float(np.linalg.svd(T.matrix, compute_uv=False)[0])
    nu = int(np.sum(s < rtol * scale))
    if nu == 0:
        raise ValueError(
            f"1/alpha = {lam:.6g} is not an eigenvalue of T at this cutoff "
            f"(smallest deviation {s[-1]:.3e} vs threshold {rtol * scale:.3e})"
        )
    return nu


def compute_magic_angles(lat: MoireLattice, pot: PotentialSpec,
                         cutoff: float = 12.0, k: complex = MAGIC_K,
                         alpha_max: float = 1.0,
                         residual_cutoff: float = 10.0) -> MagicAngleSet:
    """All magic angles with |alpha| <= alpha_max from the sector eigensolve.

    Eigenvalues lam of the restricted operator give alpha = 1/lam; each
    distinct alpha is reported once with its kernel multiplicity, ordered
    by (|alpha|, arg alpha).  Every reported angle is cross-checked
    against the kernel residual of D(alpha)+k' at an independent k'.
    """
    if alpha_max <= 0:
        raise ValueError("alpha_max must be positive")
    T = magic_operator(lat, pot, k, cutoff)
    ev = np.linalg.eigvals(T.matrix)
    keep = np.abs(ev) >= 1.0 / alpha_max
    lams = ev[keep]
    alphas = 1.0 / lams
    order = np.lexsort((np.round(np.angle(alphas), 10),
                        np.round(np.abs(alphas), 10)))
    alphas = alphas[order]
    lams = lams[order]

    # cluster numerically-split multiplets
    entries = []
    used = np.zeros(alphas.size, dtype=bool)
    for i in range(alphas.size):
        if used[i]:
            continue
        close = np.abs(alphas - alphas[i]) < 1e-7 * max(1.0, abs(alphas[i]))
        close &= ~used
        used |= close
        a = complex(np.mean(alphas[close]))
        entries.append((a, complex(np.mean(lams[close])), int(close.sum())))

    residual_k = SECOND_K if abs(k - SECOND_K) > 1e-9 else DEFAULT_K
    result = MagicAngleSet(alphas=[], cutoff=float(cutoff), k_used=complex(k))
    for a, lam, mult in entries:
        nu = mult
        try:
            nu = classify_degeneracy(T, a)
        except ValueError:
            pass
        result.alphas.append((a, lam, nu, 0))
        result.residuals.append(kernel_residual(lat, pot, a, residual_k,
                                                cutoff=residual_cutoff))
        if nu > 2:
            result.non_generic.append(a)
    return result


def refine_magic_angle(lat, pot, alpha_guess, cutoff=16.0, k=MAGIC_K):
    """Polish one magic angle with a higher-cutoff sector eigensolve."""
    T = magic_operator(lat, pot, k, cutoff)
    ev = np.linalg.eigvals(T.matrix)
    alphas = 1.0 / ev[np.abs(ev) > 1e-8]
    return complex(alphas[np.argmin(np.abs(alphas - alpha_guess))])


def flat_band_certificate(lat, pot, alpha, m=0.0, kgrid_size=8,
                          cutoff=6.0) -> float:
    """max over a Brillouin-zone grid of | |E_{+-1}(k)| - m |.

    The middle-band energies at mass m are +-sqrt(s^2 + m^2) with s the
    smallest singular value of the fiber operator, so the certificate is
    max_k (sqrt(s_min(k)^2 + m^2) - m); tiny iff the band is flat at +-m.
    """
    if kgrid_size < 4:
        raise ValueError("kgrid_size must be at least 4")
    q1, q2 = lat.gamma_star_gens
    worst = 0.0
    for i in range(kgrid_size):
        for j in range(kgrid_size):
            kk = 3.0 * ((i + 0.5) / kgrid_size * q1 + (j + 0.5) / kgrid_size * q2)
            basis = enumerate_basis(lat, kk, cutoff, 2)
            fib = fine_sector_restrict(assemble_D(alpha, basis, pot), 0, 0)
            s = np.linalg.svd(fib.matrix, compute_uv=False)[-1]
            worst = max(worst, float(np.sqrt(s * s + m * m) - m))
    return worst
