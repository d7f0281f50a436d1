import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbglab import build_lattice, default_potential, pairing
from tbglab.lattice import check_periodicity, check_symmetries, gamma3_point


def test_duality_pairing(lat):
    for i, g in enumerate(lat.gamma_gens):
        for j, q in enumerate(lat.gamma_star_gens):
            expect = 2 * np.pi if i == j else 0.0
            assert abs(pairing(g, q) - expect) < 1e-12


def test_omega_root_of_unity(lat):
    w = lat.omega
    assert abs(w**3 - 1) < 1e-15
    assert abs(1 + w + w**2) < 1e-15


def test_cell_area_oracle(lat):
    g1, g2 = lat.gamma_gens
    direct = abs((np.conj(g1) * g2).imag)
    assert abs(lat.cell_area - direct) < 1e-12 * direct
    assert lat.cell_area > 0


def test_gamma_inside_gamma3(lat):
    # every coarse generator is an integer combination of the refined ones
    b1, b2 = lat.gamma3_gens
    mat = np.array([[b1.real, b2.real], [b1.imag, b2.imag]])
    for g in lat.gamma_gens:
        coeff = np.linalg.solve(mat, [g.real, g.imag])
        assert np.allclose(coeff, np.round(coeff), atol=1e-12)


def test_dual_membership(lat):
    q1, q2 = lat.gamma_star_gens
    assert lat.in_dual_lattice(3 * q1 - 2 * q2)
    assert lat.in_dual_lattice(-1j)      # q1 + q2
    assert not lat.in_dual_lattice(-1j / 3)
    assert abs(lat.dist_to_dual(-1j / 3) - 1 / 3) < 1e-12


def test_default_potential_modes_are_dual_vectors(lat, pot):
    check_periodicity(lat, pot)


def test_potential_rotation_symmetry(lat, pot):
    rng = np.random.default_rng(0)
    z = rng.normal(size=100) * 5 + 1j * rng.normal(size=100) * 5
    u = pot.evaluate(z)
    assert np.max(np.abs(pot.evaluate(lat.omega * z) - lat.omega * u)) < 1e-12


def test_potential_conjugation_symmetry(lat, pot):
    rng = np.random.default_rng(1)
    z = rng.normal(size=100) * 5 + 1j * rng.normal(size=100) * 5
    assert np.max(np.abs(np.conj(pot.evaluate(z))
                         - pot.evaluate(np.conj(z)))) < 1e-12


def test_potential_translation_symmetry_pointwise(lat, pot):
    # oracle: evaluate on a sample grid and compare against the phase rule
    rng = np.random.default_rng(2)
    z = rng.normal(size=64) * 7 + 1j * rng.normal(size=64) * 7
    w = lat.omega
    for a1, a2 in ((1, 0), (0, 1), (1, 1), (2, 1)):
        a = gamma3_point(lat, a1, a2)
        lhs = pot.evaluate(z + a)
        rhs = np.conj(w) ** (a1 + a2) * pot.evaluate(z)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_check_symmetries_passes_default(lat, pot):
    assert check_symmetries(lat, pot) < 1e-12


def test_check_symmetries_rejects_broken(lat, pot):
    from tbglab.lattice import PotentialSpec

    bad = PotentialSpec(modes=(pot.modes[0], pot.modes[1],
                               (pot.modes[2][0], 1.1 * pot.modes[2][1])),
                        label="broken")
    with pytest.raises(ValueError):
        check_symmetries(lat, bad)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=50, allow_nan=False,
                          allow_infinity=False),
       st.complex_numbers(max_magnitude=50, allow_nan=False,
                          allow_infinity=False))
def test_pairing_is_real_bilinear(z, w):
    assert abs(pairing(z, w) - pairing(w, z).conjugate()) < 1e-9
    assert abs(pairing(2.5 * z, w) - 2.5 * pairing(z, w)) < 1e-7
