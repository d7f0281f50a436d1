"""Bloch band diagrams and the flat-band spectral gap.

Band energies are eigenvalues of the Hamiltonian fiber carrying the
trivial joint translation character; its Brillouin zone is the cell of
the refined dual lattice (generators 3 q1, 3 q2), with corner K = -i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import enumerate_basis
from .lattice import MoireLattice, PotentialSpec
from .operators import assemble_D, assemble_H, fine_sector_restrict

PARTICLE_HOLE_TOL = 1e-10


@dataclass
class BandResult:
    kpath: np.ndarray          # complex momenta
    path_coord: np.ndarray     # cumulative path length
    energies: np.ndarray       # (n_k, n_bands), ascending rows
    m: float
    alpha: complex
    gap: float


def high_symmetry_points(lat: MoireLattice):
    """K, Gamma, M of the moire Brillouin zone (cell of 3 Gamma^*)."""
    q1, _ = lat.gamma_star_gens
    return {"K": -1j, "G": 0j, "M": 1.5 * q1}


def standard_path(lat: MoireLattice, points_per_leg=24):
    """K -> Gamma -> M -> K polyline, deduplicated at the joints."""
    pts = high_symmetry_points(lat)
    legs = [(pts["K"], pts["G"]), (pts["G"], pts["M"]), (pts["M"], pts["K"])]
    path = []
    for a, b in legs:
        for t in np.linspace(0.0, 1.0, points_per_leg, endpoint=False):
            path.append((1 - t) * a + t * b)
    path.append(pts["K"])
    return np.array(path)


def fiber_hamiltonian(m, alpha, k, lat, pot, cutoff):
    H = assemble_H(m, alpha, k, pot, lat, cutoff)
    return fine_sector_restrict(H, 0, 0)


def bands_on_path(m, alpha, lat, pot, path, cutoff=6.0) -> BandResult:
    """Sorted fiber eigenvalues along a momentum path."""
    path = np.asarray(path, dtype=complex)
    if path.size == 0:
        raise ValueError("empty momentum path")
    rows = []
    nb = None
    for kk in path:
        ev = np.linalg.eigvalsh(fiber_hamiltonian(m, alpha, kk, lat, pot,
                                                  cutoff).matrix)
        rows.append(np.sort(ev))
        nb = ev.size if nb is None else min(nb, ev.size)
    # basis size varies slightly with k; keep the common central bands
    energies = np.stack([r[(r.size - nb) // 2:(r.size - nb) // 2 + nb]
                         for r in rows])
    coord = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(path)))])
    n = energies.shape[1] // 2
    flat_top = np.max(np.abs(energies[:, n - 1:n + 1]))
    rest = np.min(np.abs(np.delete(energies, [n - 1, n], axis=1)))
    return BandResult(kpath=path, path_coord=coord, energies=energies,
                      m=float(m), alpha=complex(alpha),
                      gap=float(max(0.0, rest - flat_top)))


def spectral_gap(lat, pot, alpha, m=0.0, kgrid=12, cutoff=6.0,
                 flat_tol=1e-4):
    """Distance from the flat bands to the rest of the fiber spectrum.

    Uses the singular values of the fiber operator: the smallest one must
    be flat-band-tiny on the whole grid (else alpha is not magic and a
    ValueError explains it); the second-smallest is minimized over the
    grid and then polished by a local search, so the value is stable
    under grid refinement.  For m > 0 the actual resolvent gap of the
    Hamiltonian is sqrt(gap^2 + m^2) - m.
    """
    from scipy.optimize import minimize

    q1, q2 = lat.gamma_star_gens

    def second_sv(kk):
        basis = enumerate_basis(lat, kk, cutoff, 2)
        fib = fine_sector_restrict(assemble_D(alpha, basis, pot), 0, 0)
        return np.linalg.svd(fib.matrix, compute_uv=False)[-2:]

    gap = np.inf
    argmin = None
    worst_flat = 0.0
    for i in range(kgrid):
        for j in range(kgrid):
            kk = 3.0 * ((i + 0.5) / kgrid * q1 + (j + 0.5) / kgrid * q2)
            s2, s1 = second_sv(kk)
            worst_flat = max(worst_flat, float(s1))
            if s2 < gap:
                gap, argmin = float(s2), kk
    if worst_flat > flat_tol:
        raise ValueError(
            f"no flat-band cluster: smallest band energy reaches "
            f"{worst_flat:.3e} (> {flat_tol:g}); alpha is not magic here"
        )
    res = minimize(lambda x: second_sv(complex(x[0], x[1]))[0],
                   [argmin.real, argmin.imag], method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12})
    gap = min(gap, float(res.fun))
    if m > 0:
        return float(np.sqrt(gap * gap + m * m) - m)
    return float(gap)
