"""Moire lattice geometry and the tunnelling potential.

Everything downstream (operators, bands, disorder) is built on the
triangular lattice G = 4*pi*i*w*(Z + w*Z) with w = exp(2*pi*i/3), its dual
lattice under the pairing <z, p> = Re(z * conj(p)), and a G-periodic
tunnelling potential given as a finite list of Fourier modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OMEGA = np.exp(2j * np.pi / 3)
TWO_PI = 2.0 * np.pi


def pairing(z, p):
    """Real pairing <z, p> = Re(z * conj(p)), vectorized."""
    return (np.asarray(z) * np.conj(p)).real


@dataclass(frozen=True)
class MoireLattice:
    """Lattice generators, dual generators and derived geometry."""

    omega: complex
    gamma_gens: tuple
    gamma_star_gens: tuple
    gamma3_gens: tuple
    cell_area: float

    def dual_coords(self, q):
        """Coordinates (n1, n2) of q in the dual basis (floats)."""
        q1, q2 = self.gamma_star_gens
        mat = np.array([[q1.real, q2.real], [q1.imag, q2.imag]])
        qv = np.atleast_1d(np.asarray(q, dtype=complex))
        rhs = np.stack([qv.real, qv.imag])
        sol = np.linalg.solve(mat, rhs)
        return sol.T.reshape(np.shape(q) + (2,))

    def dual_vector(self, n1, n2):
        q1, q2 = self.gamma_star_gens
        return n1 * q1 + n2 * q2

    def in_dual_lattice(self, q, tol=1e-9):
        """True if q is a dual lattice vector (integer dual coordinates)."""
        c = self.dual_coords(q)
        return bool(np.all(np.abs(c - np.round(c)) < tol))

    def dist_to_dual(self, k):
        """Distance from k to the nearest dual lattice point."""
        c = self.dual_coords(k)
        base = np.floor(c)
        best = np.inf
        for d1 in (0.0, 1.0):
            for d2 in (0.0, 1.0):
                q = self.dual_vector(base[..., 0] + d1, base[..., 1] + d2)
                best = np.minimum(best, np.abs(np.asarray(k) - q))
        return best


def build_lattice() -> MoireLattice:
    """Construct the moire lattice with duality solved exactly.

    Dual generators are obtained from the 2x2 linear system
    <gamma_i, q_j> = 2*pi*delta_ij.
    """
    g1 = 4j * np.pi * OMEGA
    g2 = 4j * np.pi * OMEGA**2
    mat = np.array([[g1.real, g1.imag], [g2.real, g2.imag]])
    q1v = np.linalg.solve(mat, np.array([TWO_PI, 0.0]))
    q2v = np.linalg.solve(mat, np.array([0.0, TWO_PI]))
    q1 = complex(q1v[0], q1v[1])
    q2 = complex(q2v[0], q2v[1])
    area = abs((np.conj(g1) * g2).imag)
    return MoireLattice(
        omega=complex(OMEGA),
        gamma_gens=(complex(g1), complex(g2)),
        gamma_star_gens=(q1, q2),
        gamma3_gens=(complex(g1 / 3), complex(g2 / 3)),
        cell_area=float(area),
    )


def gamma3_point(lat: MoireLattice, a1: int, a2: int) -> complex:
    """Point a = 4*pi*i*(a1*w + a2*w^2)/3 of the refined lattice."""
    b1, b2 = lat.gamma3_gens
    return a1 * b1 + a2 * b2


@dataclass(frozen=True)
class PotentialSpec:
    """Tunnelling potential U(z) = sum_j c_j exp(i <z, q_j>).

    All mode momenta must be dual lattice vectors so that U is
    G-periodic up to the refined-translation phase.
    """

    modes: tuple
    label: str

    def evaluate(self, z, negate=False):
        """Evaluate U(z) (or U(-z) with negate=True) at complex points z."""
        z = np.asarray(z, dtype=complex)
        sign = -1.0 if negate else 1.0
        out = np.zeros_like(z, dtype=complex)
        for q, c in self.modes:
            out += c * np.exp(1j * pairing(sign * z, q))
        return out

    def mode_momenta(self):
        return np.array([q for q, _ in self.modes], dtype=complex)

    def mode_coeffs(self):
        return np.array([c for _, c in self.modes], dtype=complex)


def default_potential() -> PotentialSpec:
    """The standard tunnelling potential U(z) = sum_j w^j exp(i <z, i w^j>)."""
    modes = tuple((1j * OMEGA**j, OMEGA**j) for j in range(3))
    return PotentialSpec(modes=modes, label="default")


def check_periodicity(lat: MoireLattice, pot: PotentialSpec, tol=1e-9):
    """Every mode momentum must pair with the lattice into 2*pi*Z."""
    for q, _ in pot.modes:
        for g in lat.gamma_gens:
            val = pairing(g, q) / TWO_PI
            if abs(val - round(val)) > tol:
                raise ValueError(
                    f"potential mode {q} is not dual-lattice periodic"
                )


def check_symmetries(lat: MoireLattice, pot: PotentialSpec, n_samples=100,
                     tol=1e-12, seed=7):
    """Verify the three tunnelling-potential symmetries at random points.

    Checks, for sampled z and the refined-lattice generators a:
      U(z + a) = conj(w)^(a1+a2) U(z),  U(w z) = w U(z),
      conj(U(z)) = U(conj(z)).
    Raises ValueError when any identity fails beyond tol.
    """
    rng = np.random.default_rng(seed)
    z = (rng.uniform(-1, 1, n_samples) + 1j * rng.uniform(-1, 1, n_samples)) * 8.0
    u = pot.evaluate(z)
    w = lat.omega
    err_rot = np.max(np.abs(pot.evaluate(w * z) - w * u))
    err_conj = np.max(np.abs(np.conj(u) - pot.evaluate(np.conj(z))))
    err_trans = 0.0
    for a1, a2 in ((1, 0), (0, 1), (1, 1)):
        a = gamma3_point(lat, a1, a2)
        expect = np.conj(w) ** (a1 + a2) * u
        err_trans = max(err_trans, np.max(np.abs(pot.evaluate(z + a) - expect)))
    worst = max(err_rot, err_conj, err_trans)
    if worst > tol:
        raise ValueError(f"potential symmetry violated by {worst:.3e}")
    return worst
