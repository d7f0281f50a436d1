"""Numerical laboratory for flat bands of the chiral continuum model:
magic-angle extraction, determinant-based stability bounds, disordered
ensembles, and topological/transport diagnostics.
"""

from .lattice import (
    OMEGA,
    MoireLattice,
    PotentialSpec,
    build_lattice,
    default_potential,
    pairing,
)
from .basis import PlaneWaveBasis, enumerate_basis
from .operators import (
    BlockOperator,
    assemble_D,
    assemble_H,
    assemble_T,
    build_T,
    fine_sector_restrict,
    sector_restrict,
)

__all__ = [
    "OMEGA",
    "MoireLattice",
    "PotentialSpec",
    "build_lattice",
    "default_potential",
    "pairing",
    "PlaneWaveBasis",
    "enumerate_basis",
    "BlockOperator",
    "assemble_D",
    "assemble_H",
    "assemble_T",
    "build_T",
    "sector_restrict",
    "fine_sector_restrict",
]

__version__ = "0.1.0"
