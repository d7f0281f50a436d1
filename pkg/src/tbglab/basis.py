"""Truncated plane-wave basis with translation-symmetry sector labels.

Basis vectors are exp(i <z, p>) tensor e_c with p in k + Gamma^* inside a
rotation-symmetric cutoff ball and c a spinor component.  The refined
translation operators act diagonally on this basis; their eigenvalue
phases provide per-vector sector labels used to block-diagonalize the
compact operator assembled downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import MoireLattice, pairing

# component index carrying the extra omega phase of the refined translation
_PHASED_COMPONENTS = {2: (0,), 4: (0, 2)}


@dataclass(frozen=True)
class PlaneWaveBasis:
    """Momentum ball around k with per-basis-vector bookkeeping.

    momenta/coords are per distinct momentum; vec_* arrays are per basis
    vector (momentum-major, component-minor ordering).  sector_labels is
    the coarse 3-way label ell; fine_labels is the pair (m1, m2) of
    translation characters, whose diagonal m1 == m2 classes are the
    invariant subspaces the magic-angle criterion refers to.
    """

    k: complex
    cutoff: float
    components: int
    momenta: np.ndarray
    coords: np.ndarray
    vec_momenta: np.ndarray
    vec_component: np.ndarray
    sector_labels: np.ndarray
    fine_labels: np.ndarray
    lattice: MoireLattice

    @property
    def dim(self) -> int:
        return self.vec_momenta.size

    def index_of_coords(self):
        """dict (n1, n2) -> momentum index."""
        return {(int(n1), int(n2)): i for i, (n1, n2) in enumerate(self.coords)}

    def subset(self, mask) -> "PlaneWaveBasis":
        """Basis restricted to the selected basis vectors (sector restriction)."""
        mask = np.asarray(mask)
        idx = np.nonzero(mask)[0] if mask.dtype == bool else mask
        mom = self.vec_momenta[idx]
        uniq = np.unique(mom)
        return PlaneWaveBasis(
            k=self.k,
            cutoff=self.cutoff,
            components=self.components,
            momenta=uniq,
            coords=self.lattice.dual_coords(uniq - self.k).round().astype(int),
            vec_momenta=mom,
            vec_component=self.vec_component[idx],
            sector_labels=self.sector_labels[idx],
            fine_labels=self.fine_labels[idx],
            lattice=self.lattice,
        )


def enumerate_basis(lat: MoireLattice, k: complex, cutoff: float,
                    components: int, require_invertible: bool = False,
                    tol_singular: float = 1e-8) -> PlaneWaveBasis:
    """Enumerate the plane-wave basis for momenta k + Gamma^* with |p| <= cutoff.

    The ball is taken in the shifted momenta p themselves, which keeps the
    set closed under p -> conj(w) p whenever k is a C3-symmetric momentum
    (conj(w) k = k mod Gamma^*).  Ordering is deterministic:
    (|p|, arg p, n1, n2) lexicographic.

    With require_invertible=True the enumeration rejects k for which some
    momentum in the ball vanishes, i.e. -k lies in Gamma^* (the assembly
    of the compact operator would divide by that momentum).
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if components not in (1, 2, 4):
        raise ValueError("components must be 1, 2 or 4")
    q1, q2 = lat.gamma_star_gens
    # bounding box of dual coordinates covering the ball around k
    nmax = int(np.ceil((cutoff + abs(k)) / min(abs(q1), abs(q2)))) + 2
    n1, n2 = np.meshgrid(np.arange(-nmax, nmax + 1),
                         np.arange(-nmax, nmax + 1), indexing="ij")
    n1 = n1.ravel()
    n2 = n2.ravel()
    p = k + n1 * q1 + n2 * q2
    keep = np.abs(p) <= cutoff + 1e-12
    n1, n2, p = n1[keep], n2[keep], p[keep]

    if require_invertible and (np.abs(p) < tol_singular).any():
        raise ValueError(
            "k + Gamma^* contains a (near-)zero momentum: k is (numerically) "
            "a dual lattice point; choose a different quasi-momentum"
        )

    order = np.lexsort((n2, n1, np.round(np.mod(np.angle(p), 2 * np.pi), 12),
                        np.round(np.abs(p), 12)))
    n1, n2, p = n1[order], n2[order], p[order]

    nmom = p.size
    vec_mom = np.repeat(p, components)
    vec_comp = np.tile(np.arange(components), nmom)
    phased = np.isin(vec_comp, _PHASED_COMPONENTS[components]) if components > 1 \
        else np.zeros(vec_mom.size, dtype=bool)
    m1 = np.mod(phased.astype(int) + np.repeat(n1, components), 3)
    m2 = np.mod(phased.astype(int) + np.repeat(n2, components), 3)
    fine = np.stack([m1, m2], axis=1)
    coarse = np.mod(m1 - m2, 3)
    return PlaneWaveBasis(
        k=complex(k),
        cutoff=float(cutoff),
        components=components,
        momenta=p,
        coords=np.stack([n1, n2], axis=1).astype(int),
        vec_momenta=vec_mom,
        vec_component=vec_comp,
        sector_labels=coarse,
        fine_labels=fine,
        lattice=lat,
    )
