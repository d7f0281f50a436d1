"""Chern numbers (momentum-space plaquettes and real-space commutator
traces), partial sublattice Chern numbers, projection-kernel decay,
transport moments and Wannier localization moments.

Real-space objects live on a uniform grid over the torus C/(L Gamma);
spectral projections are carried as orthonormal frames of grid-evaluated
states, so every trace reduces to small Gram-matrix algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import enumerate_basis
from .lattice import MoireLattice, PotentialSpec
from .operators import assemble_D, assemble_H, fine_sector_restrict

# ---------------------------------------------------------------------------
# torus grids and frames


@dataclass
class TorusGrid:
    """Uniform quadrature grid on C/(L Gamma), cell-offset to midpoints."""

    lat: MoireLattice
    L: int
    pts_per_cell: int

    def __post_init__(self):
        g1, g2 = self.lat.gamma_gens
        ng = self.pts_per_cell * self.L
        s = (np.arange(ng) + 0.5) / ng
        self.ng = ng
        self.s = s
        S1, S2 = np.meshgrid(s, s, indexing="ij")
        self.z = (S1 * self.L * g1 + S2 * self.L * g2).ravel()
        self.npoints = self.z.size

    def torus_distance(self, z0):
        g1, g2 = self.lat.gamma_gens
        best = np.full(self.npoints, np.inf)
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                best = np.minimum(best,
                                  np.abs(self.z - z0 + self.L * (a * g1 + b * g2)))
        return best

    def bracket_weight(self, z0, power):
        """<z - z0>^power with the capped (minimum-image) torus distance."""
        d = self.torus_distance(z0)
        return (1.0 + d * d) ** (power / 2.0)

    def cell_coords(self, refined=True):
        """Integer cell coordinates of each grid point (refined lattice
        cells by default, else the coarse ones)."""
        gens = self.lat.gamma3_gens if refined else self.lat.gamma_gens
        mat = np.array([[gens[0].real, gens[1].real],
                        [gens[0].imag, gens[1].imag]])
        c = np.linalg.solve(mat, np.stack([self.z.real, self.z.imag]))
        return np.floor(c + 1e-9).astype(int)

    def cell_indicator(self, cell, refined=True):
        cc = self.cell_coords(refined)
        return ((cc[0] == cell[0]) & (cc[1] == cell[1])).astype(float)

    def center_cell(self, refined=True):
        n = 3 * self.L if refined else self.L
        return (n // 2, n // 2)

    def center_of_cell(self, cell, refined=True):
        gens = self.lat.gamma3_gens if refined else self.lat.gamma_gens
        return (cell[0] + 0.5) * gens[0] + (cell[1] + 0.5) * gens[1]


@dataclass
class ProjectionData:
    """Orthonormal frame spanning a spectral window, evaluated on a grid.

    frame has shape (grid points, spinor components, rank); idempotency
    and hermiticity hold by construction, trace equals the rank.
    """

    frame: np.ndarray
    grid: TorusGrid
    window: tuple
    source: str

    @property
    def rank(self):
        return self.frame.shape[2]

    def flat(self):
        g, c, r = self.frame.shape
        return self.frame.reshape(g * c, r)

    def gram(self, weight=None):
        """Frame Gram matrix in the quadrature inner product."""
        f = self.flat()
        if weight is None:
            return f.conj().T @ f / self.grid.npoints
        w = np.repeat(weight, self.frame.shape[1])
        return (f.conj() * w[:, None]).T @ f / self.grid.npoints


def _phase_factors(grid: TorusGrid, momenta):
    """Separable phase tables: exp(i <z, p>) = A[s1, p] * B[s2, p]."""
    g1, g2 = grid.lat.gamma_gens
    L = grid.L
    pa = np.exp(1j * np.outer(grid.s, L * (g1 * np.conj(momenta)).real))
    pb = np.exp(1j * np.outer(grid.s, L * (g2 * np.conj(momenta)).real))
    return pa, pb


def evaluate_modes(grid: TorusGrid, basis, coeff_cols, components=4,
                   component_offset=0):
    """Grid values of plane-wave combinations given by coefficient columns."""
    ng = grid.ng
    ncols = coeff_cols.shape[1]
    out = np.zeros((ng * ng, components, ncols), dtype=complex)
    pa, pb = _phase_factors(grid, basis.vec_momenta)
    for c in range(basis.components):
        sel = basis.vec_component == c
        if not sel.any():
            continue
        pa_c, pb_c = pa[:, sel], pb[:, sel]
        for t in range(ncols):
            vals = (pa_c * coeff_cols[sel, t][None, :]) @ pb_c.T
            out[:, component_offset + c, t] = vals.reshape(-1)
    return out


def flat_band_frame(lat, pot, alpha, L, cutoff=4.0, pts_per_cell=15,
                    sublattice=None, flat_tol=1e-4) -> ProjectionData:
    """Clean flat-band projection frame on the L-torus.

    Collects the kernel elements of the fiber operators over the
    commensurate quasi-momentum grid; sublattice 1 keeps the ker D side
    (energy +m states), 2 the ker D^* side, None both.
    """
    grid = TorusGrid(lat, L, pts_per_cell)
    q1, q2 = lat.gamma_star_gens
    cols = []
    for i in range(3 * L):
        for j in range(3 * L):
            kk = (i * q1 + j * q2) / L
            fib = fine_sector_restrict(
                assemble_D(alpha, enumerate_basis(lat, kk, cutoff, 2), pot),
                0, 0)
            U, sv, Vh = np.linalg.svd(fib.matrix)
            if sv[-1] > flat_tol:
                raise ValueError(
                    f"no flat band at alpha={alpha}: kernel residual "
                    f"{sv[-1]:.2e} at quasi-momentum ({i},{j})/L")
            if sublattice in (None, 1):
                cols.append(evaluate_modes(grid, fib.basis,
                                           Vh[-1].conj()[:, None], 4, 0))
            if sublattice in (None, 2):
                cols.append(evaluate_modes(grid, fib.basis,
                                           U[:, -1][:, None], 4, 2))
    frame = np.concatenate(cols, axis=2)
    data = ProjectionData(frame=frame, grid=grid,
                          window=(-flat_tol, flat_tol), source="clean-flat")
    return _orthonormalize(data)


def _orthonormalize(data: ProjectionData) -> ProjectionData:
    gram = data.gram()
    w, v = np.linalg.eigh(gram)
    if w.min() < 1e-8:
        raise ValueError("frame is numerically rank-deficient; refine the "
                         "grid or cutoff")
    data.frame = data.frame @ (v / np.sqrt(w)) @ v.conj().T
    return data


def window_frame(H_fin, grid_pts: int, window, eig=None) -> ProjectionData:
    """Spectral-window frame of a finite disordered Hamiltonian on its grid."""
    lo, hi = window
    ev, vec = np.linalg.eigh(H_fin.matrix) if eig is None else eig
    sel = (ev >= lo) & (ev <= hi)
    if not sel.any():
        raise ValueError(f"no eigenvalues inside window [{lo}, {hi}]")
    lat0 = _parent_lattice(H_fin)
    span = int(np.abs(H_fin.basis.coords).max())
    need = -(-(2 * span + 2) // H_fin.L)
    grid = TorusGrid(lat0, H_fin.L, max(grid_pts, need))
    frame = evaluate_modes(grid, H_fin.basis, vec[:, sel], 4, 0)
    data = ProjectionData(frame=frame, grid=grid, window=(float(lo), float(hi)),
                          source="finite-window")
    return _orthonormalize(data)


def _parent_lattice(H_fin):
    fine = H_fin.basis.lattice
    L = H_fin.L
    return MoireLattice(
        omega=fine.omega,
        gamma_gens=(fine.gamma_gens[0] / L, fine.gamma_gens[1] / L),
        gamma_star_gens=(fine.gamma_star_gens[0] * L,
                         fine.gamma_star_gens[1] * L),
        gamma3_gens=(fine.gamma3_gens[0] / L, fine.gamma3_gens[1] / L),
        cell_area=fine.cell_area / (L * L),
    )


# ---------------------------------------------------------------------------
# switch functions and commutator-trace Chern numbers


@dataclass
class SwitchFunctions:
    """Sharp half-plane switches at Re/Im = 1/2 + offset, optionally
    premultiplied by a sublattice projector."""

    theta1_offset: float = 0.0
    theta2_offset: float = 0.0
    sublattice: int | None = None

    def masks(self, grid: TorusGrid, center=None):
        z0 = center if center is not None else (grid.L / 2) * sum(grid.lat.gamma_gens)
        w = grid.z - z0
        t1 = (w.real >= 0.5 + self.theta1_offset).astype(float)
        t2 = (w.imag >= 0.5 + self.theta2_offset).astype(float)
        return t1, t2

    def component_mask(self, ncomp=4):
        mask = np.ones(ncomp)
        if self.sublattice == 1:
            mask[ncomp // 2:] = 0.0
        elif self.sublattice == 2:
            mask[:ncomp // 2] = 0.0
        return mask


def _region_mask(grid: TorusGrid, pad_cells: int):
    cc = grid.cell_coords(refined=False)
    L = grid.L
    return ((cc[0] >= pad_cells) & (cc[0] < L - pad_cells)
            & (cc[1] >= pad_cells) & (cc[1] < L - pad_cells)).astype(float)


def hall_conductance(P: ProjectionData, sw: SwitchFunctions,
                     trace_pad_cells: int = 2):
    """Region-restricted commutator trace Omega and Cher = -2 pi i Omega.

    The trace is restricted to the central (L - 2 pad)^2 cells; the switch
    seams must cross inside that region, several decay lengths from its
    boundary, for the boundary-image error to be negligible.
    """
    grid = P.grid
    if grid.L <= 2 * trace_pad_cells:
        raise ValueError("torus too small for the requested trace region")
    t1, t2 = sw.masks(grid)
    cmask = sw.component_mask(P.frame.shape[1])
    gn = grid.npoints
    f = P.flat()
    r = P.rank
    ncomp = P.frame.shape[1]
    w1 = (np.repeat(t1, ncomp) * np.tile(cmask, gn))
    w2 = (np.repeat(t2, ncomp) * np.tile(cmask, gn))
    m1 = f * w1[:, None]
    m2 = f * w2[:, None]
    a1 = f.conj().T @ m1 / gn
    a2 = f.conj().T @ m2 / gn
    c12 = m1.conj().T @ m2 / gn
    c21 = m2.conj().T @ m1 / gn
    kern = (a1 @ a2 - c12) - (a2 @ a1 - c21)
    dens = np.einsum("gr,gr->g", f @ kern, f.conj()).reshape(gn, ncomp).sum(1)
    region = _region_mask(grid, trace_pad_cells)
    omega = complex((region * dens).sum() / gn)
    cher = -2j * np.pi * omega
    return omega, cher


def partial_chern(P: ProjectionData, i: int, sw: SwitchFunctions = None,
                  trace_pad_cells: int = 2):
    """Sublattice-resolved commutator trace Omega_i."""
    if i not in (1, 2):
        raise ValueError("sublattice index must be 1 or 2")
    base = sw if sw is not None else SwitchFunctions()
    swi = SwitchFunctions(theta1_offset=base.theta1_offset,
                          theta2_offset=base.theta2_offset, sublattice=i)
    return hall_conductance(P, swi, trace_pad_cells)


# ---------------------------------------------------------------------------
# momentum-space plaquette Chern numbers


def _fixed_coords_fiber(lat, cutoff):
    """Dual-coordinate stencil of the trivial-character fiber around the
    Brillouin-zone cell, reused for every grid momentum."""
    q1, q2 = lat.gamma_star_gens
    out = []
    for n1 in range(-24, 25):
        for n2 in range(-24, 25):
            comp = None
            if (n1 + 1) % 3 == 0 and (n2 + 1) % 3 == 0:
                comp = 0
            elif n1 % 3 == 0 and n2 % 3 == 0:
                comp = 1
            if comp is None:
                continue
            q = n1 * q1 + n2 * q2
            if abs(q) <= cutoff:
                out.append((n1, n2, comp))
    return sorted(out)


def _fiber_H_fixed(lat, pot, m, alpha, k, stencil):
    index = {(n1, n2, c): i for i, (n1, n2, c) in enumerate(stencil)}
    n = len(stencil)
    d = np.zeros((n, n), dtype=complex)
    q1, q2 = lat.gamma_star_gens
    for i, (n1, n2, c) in enumerate(stencil):
        d[i, i] = k + n1 * q1 + n2 * q2
    for q, coef in pot.modes:
        dc = lat.dual_coords(q).round().astype(int)
        for i, (n1, n2, c) in enumerate(stencil):
            if c == 1:
                j = index.get((n1 + int(dc[0]), n2 + int(dc[1]), 0))
                if j is not None:
                    d[j, i] += alpha * coef
            else:
                j = index.get((n1 - int(dc[0]), n2 - int(dc[1]), 1))
                if j is not None:
                    d[j, i] += alpha * coef
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, n:] = d.conj().T
    h[n:, :n] = d
    h[np.arange(n), np.arange(n)] += m
    h[np.arange(n, 2 * n), np.arange(n, 2 * n)] -= m
    return 0.5 * (h + h.conj().T)


def chern_fhs(lat, pot, alpha, m, band_selector, kgrid=6, cutoff=4.5,
              link_tol=1e-9) -> int:
    """Plaquette Berry-flux Chern number of the selected bands.

    band_selector picks eigenvector columns from the ascending spectrum,
    e.g. lambda nb: [nb // 2] for the first band above zero.  The output
    is an exact integer; a vanishing link (band crossing on the grid)
    raises instead of silently rounding.
    """
    q1, q2 = lat.gamma_star_gens
    b1, b2 = 3 * q1, 3 * q2
    stencil = _fixed_coords_fiber(lat, cutoff)
    nb = 2 * len(stencil)
    bands = band_selector(nb)
    vecs = {}
    for i in range(kgrid):
        for j in range(kgrid):
            kk = (i / kgrid) * b1 + (j / kgrid) * b2 + 0.123 * q1 / kgrid
            ev, vec = np.linalg.eigh(_fiber_H_fixed(lat, pot, m, alpha, kk,
                                                    stencil))
            vecs[(i, j)] = vec[:, bands]

    def link(v_a, v_b):
        ov = np.linalg.det(v_a.conj().T @ v_b)
        if abs(ov) < link_tol:
            raise ValueError("vanishing plaquette link: band crossing or "
                             "window closure on the k-grid")
        return ov / abs(ov)

    total = 0.0
    for i in range(kgrid):
        for j in range(kgrid):
            va = vecs[(i, j)]
            vb = vecs[((i + 1) % kgrid, j)]
            vc = vecs[((i + 1) % kgrid, (j + 1) % kgrid)]
            vd = vecs[(i, (j + 1) % kgrid)]
            flux = np.angle(link(va, vb) * link(vb, vc)
                            * link(vc, vd) * link(vd, va))
            total += flux
    chern = total / (2 * np.pi)
    rounded = int(np.rint(chern))
    if abs(chern - rounded) > 1e-6:
        raise ValueError(f"plaquette fluxes do not sum to an integer: {chern}")
    return rounded


# ---------------------------------------------------------------------------
# projection-kernel decay


def combes_thomas_decay(P: ProjectionData, max_cells=None, floor_factor=3.0):
    """Exponential-decay fit of cell-block norms of the projection.

    Returns (rate, r_squared, pairs) where pairs is the fitted
    (distance, norm) table over refined-lattice cells along a lattice ray
    from the central cell; separations whose norms sit at the numerical
    floor are trimmed before fitting.
    """
    grid = P.grid
    cc = grid.cell_coords(refined=True)
    ncell = 3 * grid.L
    if max_cells is None:
        max_cells = ncell // 2
    f = P.flat()
    gn = grid.npoints
    ncomp = P.frame.shape[1]

    def gram_of_cell(a, b):
        mask = np.repeat((cc[0] == a % ncell) & (cc[1] == b % ncell), ncomp)
        m = f * mask[:, None]
        return f.conj().T @ m / gn

    c0 = ncell // 2
    x0 = gram_of_cell(c0, c0)
    pairs = []
    for d in range(0, max_cells + 1):
        xd = gram_of_cell(c0 + d, c0)
        lam = np.abs(np.linalg.eigvals(x0 @ xd)).max()
        pairs.append((abs(d * grid.lat.gamma3_gens[0]), float(np.sqrt(lam))))
    floor = min(n for _, n in pairs) * floor_factor
    usable = [(d, n) for d, n in pairs[1:] if n > floor]
    if len(usable) < 4:
        raise ValueError("fewer than 4 usable separations above the noise "
                         "floor; increase the torus or the grid accuracy")
    ds = np.array([d for d, _ in usable])
    ys = np.log([n for _, n in usable])
    a = np.vstack([ds, np.ones_like(ds)]).T
    coef, *_ = np.linalg.lstsq(a, ys, rcond=None)
    pred = a @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(r2), pairs


# ---------------------------------------------------------------------------
# transport moments


def smooth_window(lo, hi, plateau=0.5):
    """C-infinity bump equal to 1 on the middle `plateau` fraction of
    [lo, hi], vanishing outside."""
    lo, hi = float(lo), float(hi)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    flat = plateau * half

    def chi(e):
        e = np.asarray(e, dtype=float)
        t = (np.abs(e - mid) - flat) / (half - flat)
        out = np.zeros_like(e)
        out[t <= 0] = 1.0
        ramp = (t > 0) & (t < 1)
        x = t[ramp]
        a = np.exp(-1.0 / np.maximum(1.0 - x, 1e-300))
        b = np.exp(-1.0 / np.maximum(x, 1e-300))
        out[ramp] = a / (a + b)
        return out

    return chi


def transport_moment(H_fin, p, chi, times, grid_pts=6, cell=None):
    """M(p, chi, t): spread of the energy-filtered one-cell indicator.

    Computes || <z>^{p/2} exp(-itH) chi(H) 1_cell ||_HS^2 on the torus,
    with the cell a refined-lattice cell and <z> the capped torus distance
    from its center.  Returns a list aligned with `times`.
    """
    if p < 0:
        raise ValueError("moment power must be nonnegative")
    ev, vec = np.linalg.eigh(H_fin.matrix)
    lat0 = _parent_lattice(H_fin)
    span = int(np.abs(H_fin.basis.coords).max())
    need = -(-(2 * span + 2) // H_fin.L)
    grid = TorusGrid(lat0, H_fin.L, max(grid_pts, need))
    if cell is None:
        cell = grid.center_cell(refined=True)
    ind = grid.cell_indicator(cell, refined=True)
    nsel = int(ind.sum())
    if nsel == 0:
        raise ValueError("empty cell indicator on this grid")
    weight = grid.bracket_weight(grid.center_of_cell(cell, refined=True), p)
    chi_ev = chi(ev)
    if chi_ev.max() == 0:
        raise ValueError("window function vanishes on the whole spectrum")

    # columns: delta functions at the grid nodes of the cell, all components
    pa, pb = _phase_factors(grid, H_fin.basis.vec_momenta)
    idx = np.nonzero(ind)[0]
    s1 = idx // grid.ng
    s2 = idx % grid.ng
    ncols = idx.size * 4
    cols = np.zeros((H_fin.basis.dim, ncols), dtype=complex)
    for c in range(4):
        sel = H_fin.basis.vec_component == c
        phase = (pa[s1][:, sel] * pb[s2][:, sel]).conj()
        cols[sel, c::4] = phase.T
    # one-cell delta columns carry 1/sqrt(Gn), the spatial trace a 1/Gn;
    # both are folded into a single 1/Gn^2 at the end
    filt = vec @ (chi_ev[:, None] * (vec.conj().T @ cols))
    out = []
    gn = grid.npoints
    for t in times:
        prop = vec @ (np.exp(-1j * ev * t)[:, None] * (vec.conj().T @ filt))
        vals = evaluate_modes(grid, H_fin.basis, prop, 4, 0)
        dens = (np.abs(vals) ** 2).sum(1)
        out.append(float((weight[:, None] * dens).sum() / gn**2))
    return out


def time_averaged_moment(times, m_values, T_list):
    """(1/T) integral of M(t) e^{-t/T} dt by trapezoid over the given grid."""
    times = np.asarray(times, dtype=float)
    m_values = np.asarray(m_values, dtype=float)
    if times.ndim != 1 or times.size != m_values.shape[-1]:
        raise ValueError("times and moments misaligned")
    out = []
    for T in T_list:
        if times[-1] < 5.0 * T:
            raise ValueError(f"time grid covers {times[-1]}, need >= 5*T = {5*T}")
        integrand = m_values * np.exp(-times / T) / T
        out.append(float(np.trapezoid(integrand, times)))
    return out


# ---------------------------------------------------------------------------
# Wannier localization moments


def flat_band_grams(lat, pot, alpha, L, weight_funs, cutoff=3.0,
                    pts_per_cell=13, flat_tol=2e-3, chunk_rows=4):
    """Weighted Gram matrices of the flat-band frame, accumulated in grid
    chunks so large tori never materialize the full frame.

    weight_funs maps a TorusGrid to a list of real weight arrays; returns
    the corresponding r x r Grams plus the plain Gram for normalization.
    """
    grid = TorusGrid(lat, L, pts_per_cell)
    q1, q2 = lat.gamma_star_gens
    fibers = []
    for i in range(3 * L):
        for j in range(3 * L):
            kk = (i * q1 + j * q2) / L
            fib = fine_sector_restrict(
                assemble_D(alpha, enumerate_basis(lat, kk, cutoff, 2), pot),
                0, 0)
            U, sv, Vh = np.linalg.svd(fib.matrix)
            if sv[-1] > flat_tol:
                raise ValueError(f"no flat band at alpha={alpha}")
            fibers.append((fib.basis, Vh[-1].conj(), U[:, -1]))
    weights = weight_funs(grid)
    r = 2 * len(fibers)
    grams = [np.zeros((r, r), dtype=complex) for _ in range(len(weights) + 1)]
    ng = grid.ng
    g1, g2 = lat.gamma_gens
    for row0 in range(0, ng, chunk_rows):
        rows = np.arange(row0, min(row0 + chunk_rows, ng))
        flat_idx = (rows[:, None] * ng + np.arange(ng)[None, :]).ravel()
        cols = np.empty((rows.size * ng * 4, r), dtype=complex)
        for fi, (bb, u, v) in enumerate(fibers):
            pa = np.exp(1j * np.outer(grid.s[rows],
                                      L * (g1 * np.conj(bb.vec_momenta)).real))
            pb = np.exp(1j * np.outer(grid.s,
                                      L * (g2 * np.conj(bb.vec_momenta)).real))
            for t, vec in ((0, u), (1, v)):
                block = np.zeros((rows.size * ng, 4), dtype=complex)
                for c in range(2):
                    sel = bb.vec_component == c
                    vals = (pa[:, sel] * vec[sel][None, :]) @ pb[:, sel].T
                    block[:, 2 * t + c] = vals.reshape(-1)
                cols[:, 2 * fi + t] = block.reshape(-1)
        for wi, wv in enumerate([np.ones(grid.npoints)] + list(weights)):
            w = np.repeat(wv[flat_idx], 4)
            grams[wi] += (cols.conj() * w[:, None]).T @ cols / grid.npoints
    gram0, rest = grams[0], grams[1:]
    # orthonormalize the frame inside every weighted Gram
    w, vmat = np.linalg.eigh(gram0)
    if w.min() < 1e-8:
        raise ValueError("flat frame numerically rank-deficient")
    trans = (vmat / np.sqrt(w)) @ vmat.conj().T
    return [trans.conj().T @ g @ trans for g in rest], grid


def wannier_moment(lat, pot, alpha, p, L_list, cutoff=3.0, pts_per_cell=13,
                   degeneracy=1):
    """|| <z>^{p/2} P_flat 1_cell ||_HS^2 over torus sizes.

    Built gauge-free from the flat-band spectral projection on the
    commensurate quasi-momentum grid; the proposition behind the trend
    test assumes a simple magic angle, so degeneracy != 1 is rejected.
    """
    if p <= 0:
        raise ValueError("moment power must be positive")
    if degeneracy != 1:
        raise ValueError("localization moments assume a simple magic angle")
    out = []
    for L in L_list:
        def weights(grid):
            cell = grid.center_cell(refined=True)
            z0 = grid.center_of_cell(cell, refined=True)
            return [grid.bracket_weight(z0, p),
                    grid.cell_indicator(cell, refined=True)]

        (a_gram, b_gram), _ = flat_band_grams(lat, pot, alpha, L, weights,
                                              cutoff=cutoff,
                                              pts_per_cell=pts_per_cell)
        out.append((L, float(np.trace(a_gram @ b_gram).real)))
    return out
