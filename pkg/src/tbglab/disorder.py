"""Disordered finite-torus ensembles: alloy-type potentials, integrated
density of states, and eigenvalue-count (Wegner-type) scaling.

The clean operator is assembled on the plane-wave basis of the torus
C/(L Gamma); the random potential is sampled on a real-space grid and
moved to momentum space by FFT, so a single dense Hermitian matrix per
realization feeds all spectral statistics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import PlaneWaveBasis
from .lattice import MoireLattice, PotentialSpec, pairing


def derived_seed(base: int, *parts) -> int:
    """Stable stream seed from a base seed and labels."""
    text = ":".join([str(base)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


# ---------------------------------------------------------------------------
# configuration and sampling


def bump_profile(r, radius):
    """Smooth compactly supported radial bump, max value 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    t2 = np.clip((r / radius) ** 2, 0.0, 1.0)
    out = np.zeros_like(r)
    inside = t2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t2[inside]))
    return out


@dataclass
class DisorderConfig:
    """Alloy-type disorder: case 1 (chiral blocks) or case 2 (signed)."""

    lambda_: float
    case: str = "case2"            # "case1" | "case2"
    bump_radius: float = 5.0
    density: str = "uniform"       # amplitude law on [-1, 1]
    density_scale: float = 1.0     # < 1 concentrates mass near zero
    relax_radius: float = 0.0
    case1_z_factor: float = 0.3
    normalization: float = field(default=0.0)  # filled by normalize()

    def __post_init__(self):
        if self.case not in ("case1", "case2"):
            raise ValueError("case must be 'case1' or 'case2'")
        if self.lambda_ < 0:
            raise ValueError("coupling must be nonnegative")

    def sum_profile(self, lat, n=48, images=2):
        """min and max over a cell grid of the periodized bump sum."""
        g1, g2 = lat.gamma_gens
        s = (np.arange(n) + 0.5) / n
        S1, S2 = np.meshgrid(s, s, indexing="ij")
        z = (S1 * g1 + S2 * g2).ravel()
        tot = np.zeros(z.size)
        for a in range(-images, images + 1):
            for b in range(-images, images + 1):
                tot += bump_profile(np.abs(z - (a * g1 + b * g2)),
                                    self.bump_radius)
        return float(tot.min()), float(tot.max())

    def normalize(self, lat):
        """Scale so the periodized bump sum has unit sup-norm (with a
        margin for the largest admissible site displacement)."""
        lo, hi = self.sum_profile(lat)
        margin = 1.0
        if self.relax_radius > 0:
            margin = 1.0 + 0.5 * self.relax_radius / self.bump_radius
        self.normalization = 1.0 / (hi * margin)
        return self

    def globally_positive(self, lat) -> bool:
        lo, _ = self.sum_profile(lat)
        return lo > 0.0


@dataclass
class DisorderRealization:
    L: int
    amplitudes: np.ndarray     # (L*L,) site amplitudes, raster order
    displacements: np.ndarray  # (L*L,) complex
    seed: int


def sample_realization(cfg: DisorderConfig, L: int, seed: int) -> DisorderRealization:
    """Site amplitudes ~ density on [-1,1], displacements uniform on a disk."""
    if L < 1:
        raise ValueError("torus size must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=L * L) * cfg.density_scale
    if cfg.relax_radius > 0:
        radii = cfg.relax_radius * np.sqrt(rng.uniform(0.0, 1.0, size=L * L))
        angles = rng.uniform(0.0, 2 * np.pi, size=L * L)
        xi = radii * np.exp(1j * angles)
    else:
        xi = np.zeros(L * L, dtype=complex)
    return DisorderRealization(L=L, amplitudes=x, displacements=xi, seed=seed)


# ---------------------------------------------------------------------------
# finite Hamiltonian


@dataclass
class FiniteHamiltonian:
    matrix: np.ndarray
    basis: PlaneWaveBasis
    L: int
    m: float
    alpha: complex
    lambda_: float
    realization: DisorderRealization
    hermit_defect: float = 0.0


def torus_basis(lat: MoireLattice, L: int, cutoff: float,
                components: int = 4) -> PlaneWaveBasis:
    """Plane waves at momenta (Gamma^*)/L inside the cutoff ball."""
    from .basis import enumerate_basis

    fine = MoireLattice(
        omega=lat.omega,
        gamma_gens=(lat.gamma_gens[0] * L, lat.gamma_gens[1] * L),
        gamma_star_gens=(lat.gamma_star_gens[0] / L, lat.gamma_star_gens[1] / L),
        gamma3_gens=(lat.gamma3_gens[0] * L, lat.gamma3_gens[1] * L),
        cell_area=lat.cell_area * L * L,
    )
    return enumerate_basis(fine, 0.0 + 0.0j, cutoff, components)


def _clean_torus_H(m, alpha, lat, pot, basis4):
    n = basis4.momenta.size
    lookup = basis4.index_of_coords()
    dmat = np.zeros((2 * n, 2 * n), dtype=complex)
    idx = np.arange(n)
    dmat[2 * idx, 2 * idx] = basis4.momenta
    dmat[2 * idx + 1, 2 * idx + 1] = basis4.momenta
    L = int(round(abs(basis4.lattice.gamma_gens[0] / lat.gamma_gens[0])))
    for q, c in pot.modes:
        d = (lat.dual_coords(q) * L).round().astype(int)
        for i, (n1, n2) in enumerate(basis4.coords):
            j = lookup.get((int(n1) + int(d[0]), int(n2) + int(d[1])))
            if j is not None:
                dmat[2 * j, 2 * i + 1] += alpha * c
        dm = (lat.dual_coords(-q) * L).round().astype(int)
        for i, (n1, n2) in enumerate(basis4.coords):
            j = lookup.get((int(n1) + int(dm[0]), int(n2) + int(dm[1])))
            if j is not None:
                dmat[2 * j + 1, 2 * i] += alpha * c
    h = np.zeros((4 * n, 4 * n), dtype=complex)
    for a in range(2):
        for b in range(2):
            h[a::4, 2 + b::4] = dmat.conj().T[a::2, b::2]
            h[2 + a::4, b::4] = dmat[a::2, b::2]
    iv = np.arange(4 * n)
    h[iv, iv] += np.where(basis4.vec_component < 2, m, -m)
    return h


def _potential_fields(cfg, lat, real: DisorderRealization, ngrid):
    """Scalar disorder fields sampled on the torus grid (row-major s1, s2)."""
    L = real.L
    g1, g2 = lat.gamma_gens
    s = np.arange(ngrid) / ngrid
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    Z = (S1 * L * g1 + S2 * L * g2)
    y = np.zeros_like(Z, dtype=float)
    sites = [(a, b) for a in range(L) for b in range(L)]
    reach = int(np.ceil(cfg.bump_radius / min(abs(g1), abs(g2)))) + 1
    for s_i, (a, b) in enumerate(sites):
        x = real.amplitudes[s_i]
        if x == 0.0:
            continue
        xi = real.displacements[s_i]
        for da in range(-reach, reach + 1):
            for db in range(-reach, reach + 1):
                zc = (a + da * L) * g1 + (b + db * L) * g2 + xi
                r = np.abs(Z - zc)
                if r.min() > cfg.bump_radius:
                    continue
                y += x * bump_profile(r, cfg.bump_radius)
    return y * cfg.normalization


def assemble_finite_H(m, alpha, cfg: DisorderConfig, lat, pot,
                      real: DisorderRealization, cutoff: float,
                      grid_factor: int = 6) -> FiniteHamiltonian:
    """Clean torus Hamiltonian plus the FFT-truncated alloy potential."""
    if cfg.normalization == 0.0:
        cfg.normalize(lat)
    L = real.L
    basis4 = torus_basis(lat, L, cutoff, 4)
    h = _clean_torus_H(m, alpha, lat, pot, basis4)

    span = int(np.abs(basis4.coords).max())
    ngrid = grid_factor * span
    if ngrid < 4 * span:
        raise ValueError("aliasing guard: grid must be at least 4x the "
                         "momentum coordinate span")
    if cfg.lambda_ > 0:
        y = _potential_fields(cfg, lat, real, ngrid)
        yhat = np.fft.fft2(y) / (ngrid * ngrid)
        n1 = basis4.coords[:, 0]
        n2 = basis4.coords[:, 1]
        d1 = np.mod(n1[:, None] - n1[None, :], ngrid)
        d2 = np.mod(n2[:, None] - n2[None, :], ngrid)
        yblock = yhat[d1, d2]
        v = np.zeros_like(h)
        if cfg.case == "case2":
            for c in range(4):
                v[c::4, c::4] = yblock
        else:
            zfac = cfg.case1_z_factor * np.exp(1j * np.pi / 5)
            for c in range(2):
                v[c::4, c::4] = yblock
                v[2 + c::4, 2 + c::4] = -yblock
                v[2 + c::4, c::4] = zfac * yblock
                v[c::4, 2 + c::4] = np.conj(zfac) * yblock.conj().T
        h = h + cfg.lambda_ * v
    defect = float(np.max(np.abs(h - h.conj().T)))
    h = 0.5 * (h + h.conj().T)
    if defect > 1e-10:
        raise AssertionError(f"hermitian symmetrization correction {defect:.2e}")
    return FiniteHamiltonian(matrix=h, basis=basis4, L=L, m=float(m),
                             alpha=complex(alpha), lambda_=cfg.lambda_,
                             realization=real, hermit_defect=defect)


def eigenvalues_near(H: FiniteHamiltonian, center: float, count: int,
                     seed: int = 0) -> np.ndarray:
    """count eigenvalues nearest `center` via dense-LU shift-invert Lanczos."""
    n = H.matrix.shape[0]
    if count >= n // 12:
        # Lanczos with this many interior pairs costs more than a full solve
        return np.linalg.eigvalsh(H.matrix)
    shifted = H.matrix - center * np.eye(n)
    lu, piv = sla.lu_factor(shifted)

    def solve(x):
        return sla.lu_solve((lu, piv), x)

    op = spla.LinearOperator((n, n), matvec=solve, dtype=complex)
    rng = np.random.default_rng(seed)
    v0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    w = spla.eigsh(op, k=count, which="LM", v0=v0,
                   return_eigenvectors=False, tol=1e-10)
    return np.sort(center + 1.0 / w)


# ---------------------------------------------------------------------------
# ensemble statistics


@dataclass
class EnsembleStats:
    n_realizations: int
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    ids_estimates: dict              # interval -> (mean, stderr)
    wegner_fit: dict = field(default_factory=dict)
    gap_violations: int = 0
    torus_area: float = 0.0


def ids_estimate(spectra, lat, L, intervals, n_states_total=None) -> EnsembleStats:
    """Per-interval eigenvalue-count means over an ensemble of spectra.

    N(I) estimates are counts divided by the torus area; monotone in
    interval inclusion by construction.
    """
    if len(spectra) == 0:
        raise ValueError("need at least one realization")
    area = lat.cell_area * L * L
    lo = min(s.min() for s in spectra)
    hi = max(s.max() for s in spectra)
    edges = np.linspace(lo - 1e-9, hi + 1e-9, 201)
    counts = np.zeros(edges.size - 1)
    per_interval = {iv: [] for iv in intervals}
    for s in spectra:
        counts += np.histogram(s, bins=edges)[0]
        for (a, b) in intervals:
            per_interval[(a, b)].append(np.sum((s >= a) & (s <= b)) / area)
    ids = {}
    for iv, vals in per_interval.items():
        vals = np.array(vals)
        ids[iv] = (float(vals.mean()),
                   float(vals.std(ddof=1) / np.sqrt(vals.size))
                   if vals.size > 1 else 0.0)
    return EnsembleStats(n_realizations=len(spectra),
                         histogram_edges=edges, histogram_counts=counts,
                         ids_estimates=ids, torus_area=area)


def _loglog_fit(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def wegner_scaling(lat, pot, cfg: DisorderConfig, m, alpha, *,
                   L_list=(3, 4, 5, 6), width_list=None, n_real=32,
                   width_L=3, width_n_real=200, seed=0, cutoff=2.0,
                   e_gap=None, count_margin=3.0) -> EnsembleStats:
    """Eigenvalue-count scaling in window width and in torus area.

    Windows are centered at +m inside the disorder-broadened flat band.
    Returns EnsembleStats with wegner_fit = {exponent_width, exponent_area,
    r2_width, r2_area} and the count of eigenvalues found inside the
    gap intervals (which must stay empty for small coupling).
    """
    if cfg.lambda_ <= 0:
        raise ValueError("flat band at zero coupling makes the count "
                         "discontinuous in the window width; use lambda > 0")
    if cfg.normalization == 0.0:
        cfg.normalize(lat)
    lam = cfg.lambda_
    if width_list is None:
        # the eigenvalue-count law is probed deep inside the broadened
        # cluster, where the ensemble density is locally flat
        width_list = lam * np.array([0.05, 0.08, 0.125, 0.2, 0.3])
    k_minus, k_plus = m - lam, m + lam
    gap_hi = None
    if e_gap is not None:
        gap_hi = np.sqrt(e_gap**2 + m**2) - lam   # K_-

    def window_counts(L, n, tag):
        nflat = 2 * (3 * L) ** 2
        take = int(count_margin * nflat / 2) + 8
        rows = []
        violations = 0
        for i in range(n):
            r = sample_realization(cfg, L, derived_seed(seed, "wegner", tag, L, i))
            H = assemble_finite_H(m, alpha, cfg, lat, pot, r, cutoff)
            ev = eigenvalues_near(H, m, min(take, H.matrix.shape[0] - 3),
                                  seed=derived_seed(seed, "v0", tag, L, i))
            rows.append(ev)
            if gap_hi is not None:
                violations += int(np.sum((ev > k_plus + 1e-9) & (ev < gap_hi - 1e-9)))
        return rows, violations

    # width scaling at fixed L
    rows_w, viol_w = window_counts(width_L, width_n_real, "w")
    mean_w = []
    for w in width_list:
        cnt = [np.sum(np.abs(ev - m) <= w / 2) for ev in rows_w]
        mean_w.append(np.mean(cnt))
    exp_w, _, r2_w = _loglog_fit(width_list, mean_w)

    # area scaling at fixed width; realizations rebalanced so larger tori
    # (better self-averaging) need fewer samples.  The window here may be
    # wide: extensivity in the torus area holds regardless of the local
    # density profile, and wide windows carry better statistics.
    fixed_w = lam * 1.0
    mean_a, areas = [], []
    viol_a = 0
    n_total = 0
    for L in L_list:
        n_L = max(6, int(round(n_real * (L_list[0] / L) ** 2)))
        rows, viol = window_counts(L, n_L, f"a{L}")
        n_total += n_L
        viol_a += viol
        cnt = [np.sum(np.abs(ev - m) <= fixed_w / 2) for ev in rows]
        mean_a.append(np.mean(cnt))
        areas.append(lat.cell_area * L * L)
    exp_a, _, r2_a = _loglog_fit(areas, mean_a)

    stats = EnsembleStats(
        n_realizations=width_n_real + n_total,
        histogram_edges=np.array([]), histogram_counts=np.array([]),
        ids_estimates={},
        wegner_fit={"exponent_width": exp_w, "r2_width": r2_w,
                    "exponent_area": exp_a, "r2_area": r2_a,
                    "mean_width_counts": [float(v) for v in mean_w],
                    "mean_area_counts": [float(v) for v in mean_a]},
        gap_violations=viol_w + viol_a,
        torus_area=float(lat.cell_area * width_L**2),
    )
    return stats
