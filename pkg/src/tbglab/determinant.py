"""Trace table, regularized 4-determinant, stability/instability bounds,
pseudospectra and random potential perturbations.

The determinant arithmetic runs in log-space throughout: the analytic
bound carries a factor exp(3(4|a|+1)^4/4) which overflows doubles well
before the first magic angle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import enumerate_basis
from .lattice import MoireLattice, PotentialSpec, pairing
from .magic import DEFAULT_K, MAGIC_K, magic_operator
from .operators import BlockOperator, assemble_T, fine_sector_restrict

NORM4_BOUND = 4.0
TAIL_FACTOR = 4.0 * np.exp(0.75)

LOG_ZERO = -np.inf


# ---------------------------------------------------------------------------
# traces


@dataclass
class TraceTable:
    """sigma_p = tr T^{2p} on one translation-character block.

    sigma_1 is only conditionally summable (the squared operator is not
    trace class); it is computed with the symmetric rotation-closed
    truncation and carries a flag instead of a convergence guarantee.
    """

    sigma: dict
    cutoff: float
    k_used: complex
    sigma1_conditional: bool = True

    def series_sigma(self, j: int) -> complex:
        """Traces tr T^j entering the determinant recursion.

        Odd powers vanish, everything below the fourth power is zeroed,
        and even powers are twice the tabulated scalar-block entries: the
        determinant lives on the two-component character block, whose
        squared operator is the direct sum of two scalar blocks with
        identical traces.
        """
        if j < 4 or j % 2:
            return 0.0
        return 2.0 * self.sigma[j // 2]


def _scalar_shift_csr(basis, pot, negate):
    lat = basis.lattice
    lookup = basis.index_of_coords()
    sign = -1 if negate else 1
    rows, cols, vals = [], [], []
    for q, c in pot.modes:
        d = lat.dual_coords(sign * q).round().astype(int)
        d1, d2 = int(d[0]), int(d[1])
        for i, (n1, n2) in enumerate(basis.coords):
            j = lookup.get((int(n1) + d1, int(n2) + d2))
            if j is not None:
                rows.append(j)
                cols.append(i)
                vals.append(c)
    n = basis.momenta.size
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)


def _cycle_sum(lat, pot, k, power, radius):
    """Ball-restricted sum of the exact diagonal of the infinite operator
    (T^2)^power; intermediate momenta are not truncated, which removes the
    slowly-decaying boundary error of the plain Galerkin product."""
    basis = enumerate_basis(lat, k, radius, 1)
    p = basis.momenta
    qs = pot.mode_momenta()
    cs = pot.mode_coeffs()
    tot = 0.0 + 0.0j
    for pat in itertools.product(range(3), repeat=2 * power):
        shift = 0.0 + 0.0j
        coeff = 1.0 + 0.0j
        w = np.ones_like(p)
        for i in range(power):
            jm, jp = pat[2 * i], pat[2 * i + 1]
            shift -= qs[jm]
            w = w / (p + shift)
            shift += qs[jp]
            w = w / (p + shift)
            coeff *= cs[jm] * cs[jp]
        if abs(shift) > 1e-9:
            continue
        tot += coeff * w.sum()
    return tot / 9.0


def trace_table(lat: MoireLattice, pot: PotentialSpec, k: complex = DEFAULT_K,
                cutoff: float = 16.0, pmax: int = 8,
                refine_radius: float = 48.0) -> TraceTable:
    """Traces sigma_p, p = 1..pmax, per translation-character block.

    p >= 4 via sparse matrix powers of the scalar block of T^2 at the
    requested cutoff (already converged to ~1e-8 there); p <= 3 via the
    exact-diagonal lattice sums at refine_radius, which converge orders of
    magnitude faster than the Galerkin product.
    """
    if pmax < 2:
        raise ValueError("pmax must be at least 2")
    basis = enumerate_basis(lat, k, cutoff, 1, require_invertible=True)
    inv = sp.diags(1.0 / basis.momenta)
    a_mat = (inv @ _scalar_shift_csr(basis, pot, False)
             @ inv @ _scalar_shift_csr(basis, pot, True)).tocsr()
    a2 = (a_mat @ a_mat).tocsr()
    a3 = (a2 @ a_mat).tocsr()
    sigma = {1: a_mat.diagonal().sum(), 2: a2.diagonal().sum(),
             3: a3.diagonal().sum()}
    if pmax >= 4:
        dense2 = a2.toarray()
        a4 = dense2 @ dense2          # the single dense product
        pair = {4: (a4, None), 5: (a4, a_mat.T), 6: (a4, a2.T),
                7: (a4, a3.T), 8: (a4, None)}
        for p in range(4, pmax + 1):
            if p == 4:
                sigma[p] = np.trace(a4)
            elif p == 8:
                sigma[p] = np.sum(a4 * a4.T)
            elif p > 8:
                raise ValueError("pmax beyond 8 is not supported")
            else:
                left, right = pair[p]
                sigma[p] = (sp.csr_matrix(right).multiply(left)).sum()
    sigma = {p: v / 9.0 for p, v in sigma.items()}
    for p in (1, 2, 3, 4):
        if p <= pmax:
            sigma[p] = complex(_cycle_sum(lat, pot, k, p,
                                          max(refine_radius, cutoff)))
    return TraceTable(sigma={p: complex(v) for p, v in sigma.items()},
                      cutoff=float(cutoff), k_used=complex(k))


def compute_traces(T: BlockOperator, pmax: int) -> TraceTable:
    """Trace table from an assembled T (per translation-character block)."""
    if pmax < 2:
        raise ValueError("pmax must be at least 2")
    fine = T.basis.fine_labels
    if not ((fine[:, 0] == fine[:, 0][0]).all()
            and (fine[:, 1] == fine[:, 1][0]).all()):
        T = fine_sector_restrict(T, 0, 0)
    t2 = T.matrix @ T.matrix
    sigma = {}
    acc = np.eye(T2_dim := t2.shape[0], dtype=complex)
    for p in range(1, pmax + 1):
        acc = acc @ t2
        sigma[p] = complex(np.trace(acc)) / 2.0
    return TraceTable(sigma=sigma, cutoff=T.basis.cutoff, k_used=T.basis.k)


# ---------------------------------------------------------------------------
# determinant, two routes


@dataclass
class ComplexLog:
    """log|w| and a continuously tracked phase of a nonzero complex w."""

    log_mag: float
    phase: float

    def value(self):
        return np.exp(self.log_mag + 1j * self.phase)


@dataclass
class DetSeries:
    mu: list
    order: int
    tail_bound_params: tuple = (NORM4_BOUND, np.exp(0.75))


def plemelj_smithies_mu(traces: TraceTable, order: int) -> list:
    """mu_j from the finite determinant recursion over the zeroed traces."""
    mus = [1.0 + 0.0j]
    for j in range(1, order + 1):
        mat = np.zeros((j, j), dtype=complex)
        for i in range(1, j + 1):
            for c in range(1, j + 1):
                if c <= i:
                    mat[i - 1, c - 1] = traces.series_sigma(i - c + 1)
                elif c == i + 1:
                    mat[i - 1, c - 1] = j - i
        mus.append(complex(np.linalg.det(mat)) if j > 0 else 1.0)
    return mus


def det_series(traces: TraceTable, order: int) -> DetSeries:
    return DetSeries(mu=plemelj_smithies_mu(traces, order), order=order)


def _log_tail(order, alpha_abs):
    """log of sum_{j>order} (TAIL_FACTOR*|alpha|)^j / (j!)^(1/4)."""
    if alpha_abs == 0:
        return LOG_ZERO
    x = np.log(TAIL_FACTOR * alpha_abs)
    peak = int(np.ceil(np.exp(4 * x)))  # terms grow until j ~ (B|a|)^4
    jmax = max(order + 1, peak) + 200
    js = np.arange(order + 1, jmax + 1, dtype=float)
    logs = js * x - 0.25 * (js * np.log(js) - js + 0.5 * np.log(2 * np.pi * js))
    top = logs.max()
    while logs[-1] > top - 46:  # extend until terms are negligible
        nxt = np.arange(js[-1] + 1, js[-1] + 2000)
        more = nxt * x - 0.25 * (nxt * np.log(nxt) - nxt
                                 + 0.5 * np.log(2 * np.pi * nxt))
        js = np.concatenate([js, nxt])
        logs = np.concatenate([logs, more])
        top = logs.max()
    return float(top + np.log(np.exp(logs - top).sum()))


def det4_series(traces: TraceTable, alpha: complex, order: int = 16):
    """(value, tail) of the determinant power series through mu_order.

    The tail is the a priori bound, summed in log-space (it dwarfs any
    float for |alpha| approaching 1, which just renders the bound vacuous
    there, not wrong).
    """
    if order < 4:
        raise ValueError("series order must be at least 4")
    missing = [p for p in range(2, order // 2 + 1) if p not in traces.sigma]
    if missing:
        raise ValueError(f"trace table lacks sigma_p for p in {missing}")
    mus = plemelj_smithies_mu(traces, order)
    val = sum(mus[j] * (-alpha) ** j / float(math.factorial(j))
              for j in range(order + 1))
    log_tail = _log_tail(order, abs(alpha))
    tail = float(np.exp(log_tail)) if log_tail < 700 else np.inf
    return complex(val), tail


class Det4Evaluator:
    """Cached-eigenvalue evaluator of log det_4(1 - alpha T)."""

    def __init__(self, T: BlockOperator):
        fine = T.basis.fine_labels
        if not ((fine[:, 0] == fine[:, 0][0]).all()
                and (fine[:, 1] == fine[:, 1][0]).all()):
            T = fine_sector_restrict(T, 0, 0)
        self.lam = np.linalg.eigvals(T.matrix)

    def at(self, alpha: complex, steps: int = 64) -> ComplexLog:
        return _det4_from_eigs(self.lam, alpha, steps)

    def log_abs(self, alpha: complex) -> ComplexLog:
        """Magnitude-only evaluation (phase reported as 0): enough for the
        stability bound, and needs no ray tracking."""
        w = 1.0 - alpha * self.lam
        if (np.abs(w) < 1e-300).any():
            return ComplexLog(log_mag=LOG_ZERO, phase=0.0)
        x = alpha * self.lam
        reg = (x + x**2 / 2 + x**3 / 3).real.sum()
        return ComplexLog(log_mag=float(np.log(np.abs(w)).sum() + reg),
                          phase=0.0)


def det4_eig(T: BlockOperator, alpha: complex, steps: int = 64) -> ComplexLog:
    """log det_4(1 - alpha T) from the truncated eigenvalues of T.

    Summands log(1 - a*lam) + a*lam + (a*lam)^2/2 + (a*lam)^3/3 are
    accumulated with the phase unwrapped along the ray t*alpha, t in
    [0, 1], halving the step wherever the phase moves by more than pi/2.
    """
    return Det4Evaluator(T).at(alpha, steps)


def _det4_from_eigs(lam, alpha, steps=64) -> ComplexLog:

    def raw(a):
        w = 1.0 - a * lam
        if (np.abs(w) < 1e-300).any():
            return None
        x = a * lam
        log_mag = float(np.log(np.abs(w)).sum() + (x + x**2 / 2 + x**3 / 3).real.sum())
        ph = float(np.angle(w).sum() + (x + x**2 / 2 + x**3 / 3).imag.sum())
        return log_mag, ph

    ts = np.linspace(0.0, 1.0, steps + 1)
    phase = 0.0
    prev = 0.0
    i = 1
    t_prev = 0.0
    while i <= steps:
        t = ts[i]
        got = raw(t * alpha)
        if got is None:
            return ComplexLog(log_mag=LOG_ZERO, phase=phase)
        _, ph = got
        dph = np.mod(ph - prev + np.pi, 2 * np.pi) - np.pi
        if abs(dph) > np.pi / 2 and t - t_prev > 1e-6:
            ts = np.concatenate([ts[:i], [(t_prev + t) / 2], ts[i:]])
            steps += 1
            continue
        phase += dph
        prev = ph
        t_prev = t
        i += 1
    final = raw(alpha)
    if final is None:
        return ComplexLog(log_mag=LOG_ZERO, phase=phase)
    return ComplexLog(log_mag=final[0], phase=phase)


def stability_bound(alpha: complex, log_det4: ComplexLog) -> float:
    """log10 of the admissible perturbation size at this alpha.

    Evaluates 1/(|a| ((1+3|a|)^2 + e^{3(4|a|+1)^4/4}/|det4|)) entirely in
    log-space; -inf at exactly magic alpha (det4 = 0).
    """
    a = abs(alpha)
    if a == 0:
        raise ValueError("alpha must be nonzero")
    if log_det4.log_mag == LOG_ZERO:
        return -np.inf
    term1 = 2.0 * np.log1p(3.0 * a)
    term2 = 3.0 * (4.0 * a + 1.0) ** 4 / 4.0 - log_det4.log_mag
    hi = max(term1, term2)
    log_denom = hi + np.log(np.exp(term1 - hi) + np.exp(term2 - hi))
    return float((-np.log(a) - log_denom) / np.log(10.0))


# ---------------------------------------------------------------------------
# pseudospectrum


@dataclass
class PseudospectrumGrid:
    re: np.ndarray
    im: np.ndarray
    values: np.ndarray          # sigma_min(T - z) on the grid
    epsilon_levels: tuple = (1e-2, 1e-1)


def _smin_shifted(mat_csc, z, dim, rng, iters=40, tol=1e-3):
    """sigma_min(M - z) via sparse LU inverse iteration on (M-z)(M-z)^*."""
    shifted = (mat_csc - sp.identity(dim, dtype=complex, format="csc") * z).tocsc()
    try:
        lu = spla.splu(shifted)
    except RuntimeError:
        return 0.0
    x = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    x /= np.linalg.norm(x)
    s_prev = None
    for _ in range(iters):
        y = lu.solve(x)
        y = lu.solve(y, trans="H")
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            return 0.0
        s = 1.0 / np.sqrt(ny)
        x = y / ny
        if s_prev is not None and abs(s - s_prev) < tol * s + 1e-300:
            return float(s)
        s_prev = s
    return float(s_prev)


def smin_at(T: BlockOperator, z: complex, seed: int = 11) -> float:
    """sigma_min(T - z), sparse path with dense fallback for small blocks."""
    dim = T.dim
    if dim <= 600:
        return float(np.linalg.svd(T.matrix - z * np.eye(dim),
                                   compute_uv=False)[-1])
    rng = np.random.default_rng(seed)
    return _smin_shifted(sp.csc_matrix(T.matrix), z, dim, rng)


def pseudospectrum_grid(T: BlockOperator, region, resolution,
                        epsilon_levels=(1e-2, 1e-1), seed: int = 11):
    """sigma_min(T - z) over a rectangle; region = (re0, re1, im0, im1)."""
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2x2")
    re0, re1, im0, im1 = region
    res = np.linspace(re0, re1, nx)
    ims = np.linspace(im0, im1, ny)
    rng = np.random.default_rng(seed)
    mat = sp.csc_matrix(T.matrix)
    dense = T.dim <= 600
    vals = np.empty((ny, nx))
    for iy, b in enumerate(ims):
        for ix, a in enumerate(res):
            z = a + 1j * b
            if dense:
                vals[iy, ix] = np.linalg.svd(T.matrix - z * np.eye(T.dim),
                                             compute_uv=False)[-1]
            else:
                vals[iy, ix] = _smin_shifted(mat, z, T.dim, rng)
    return PseudospectrumGrid(re=res, im=ims, values=vals,
                              epsilon_levels=tuple(epsilon_levels))


class ResolventNormEvaluator:
    """Fast repeated sigma_min(T - z) via a one-time Schur factorization.

    sigma_min(T - z) = 1 / ||(R - z)^{-1}|| for the triangular Schur
    factor R, computed by inverse power iteration with triangular solves.
    """

    def __init__(self, matrix: np.ndarray, seed: int = 23):
        import scipy.linalg as sla

        self.r_factor, _ = sla.schur(np.asarray(matrix, dtype=complex),
                                     output="complex")
        self.n = matrix.shape[0]
        rng = np.random.default_rng(seed)
        x = rng.normal(size=self.n) + 1j * rng.normal(size=self.n)
        self.x0 = x / np.linalg.norm(x)

    def smin(self, z: complex, iters: int = 50, tol: float = 1e-6) -> float:
        import scipy.linalg as sla

        shifted = self.r_factor - z * np.eye(self.n)
        x = self.x0
        s_prev = None
        for _ in range(iters):
            try:
                y = sla.solve_triangular(shifted, x)
                y = sla.solve_triangular(shifted, y, trans="C")
            except np.linalg.LinAlgError:
                return 0.0
            ny = np.linalg.norm(y)
            if not np.isfinite(ny) or ny == 0:
                return 0.0
            s = 1.0 / np.sqrt(ny)
            x = y / ny
            if s_prev is not None and abs(s - s_prev) < tol * s + 1e-300:
                return float(s)
            s_prev = s
        return float(s_prev)


def min_rank1_norm(T: BlockOperator, mu: complex):
    """Smallest-norm rank-1 R with mu in Spec(T + R), plus that R.

    If (T - mu) v = s u is the smallest singular triple, R = -s u v^* has
    norm s and (T + R) v = mu v.
    """
    mat = T.matrix - mu * np.eye(T.dim)
    u_all, s_all, vh_all = np.linalg.svd(mat)
    s = float(s_all[-1])
    u = u_all[:, -1]
    v = vh_all[-1].conj()
    r_opt = -s * np.outer(u, v.conj())
    return s, r_opt


# ---------------------------------------------------------------------------
# random symmetry-respecting perturbations


@dataclass
class PerturbationSpec:
    """Random trig-polynomial perturbation of the tunnelling structure.

    v_plus/v_minus share the symmetries of U(z)/U(-z); a_plus/a_minus are
    periodic with respect to the refined lattice.  Coefficients sit on the
    lowest `shells` symmetry-allowed momentum shells and the whole 2x2
    symbol is normalized to unit sup-norm before scaling by lambda.
    """

    a_plus: tuple
    a_minus: tuple
    v_plus: tuple
    v_minus: tuple
    seed: int
    shells: int = 2


def _coset_modes(lat, coset, shells, include_zero=False):
    """Lowest momentum shells of a dual-coordinate coset (mod 3)."""
    q1, q2 = lat.gamma_star_gens
    cands = []
    for n1 in range(-9, 10):
        for n2 in range(-9, 10):
            if (n1 - coset[0]) % 3 or (n2 - coset[1]) % 3:
                continue
            q = n1 * q1 + n2 * q2
            if not include_zero and abs(q) < 1e-12:
                continue
            cands.append((round(abs(q), 9), n1, n2))
    cands.sort()
    radii = sorted({r for r, _, _ in cands})
    keep = set(radii[:shells])
    return [(n1, n2) for r, n1, n2 in cands if r in keep]


def _rotate_coords(n1, n2):
    # multiplication of the momentum by omega in dual coordinates
    return (-n1 - n2, n1)


def _symmetrize_u_like(lat, coeffs):
    """Project mode coefficients onto the U-type symmetry subspace."""
    out = {}
    for (n1, n2), c in coeffs.items():
        # rotation covariance: c(omega q) = omega c(q)
        r1 = _rotate_coords(n1, n2)
        r2 = _rotate_coords(*r1)
        for (m1, m2), w in ((tuple((n1, n2)), 1.0),
                            (r1, lat.omega), (r2, lat.omega**2)):
            out[(m1, m2)] = out.get((m1, m2), 0.0) + w * c / 3.0
    sym = {}
    for (n1, n2), c in out.items():
        # reality: conj(V(z)) = V(conj z) pairs q with -conj(q) = (n2, n1)
        partner = (n2, n1)
        cp = out.get(partner, 0.0)
        sym[(n1, n2)] = (c + np.conj(cp)) / 2.0
    return sym


def sample_perturbation(lat: MoireLattice, seed: int,
                        shells: int = 2) -> PerturbationSpec:
    rng = np.random.default_rng(seed)

    def draw(coords):
        return {c: complex(rng.normal(), rng.normal()) for c in coords}

    vp = _symmetrize_u_like(lat, draw(_coset_modes(lat, (-1, -1), shells)))
    vm_raw = draw(_coset_modes(lat, (1, 1), shells))
    # U(-z)-type symmetry == U-type symmetry of the reflected coefficients
    vm = {(-n1, -n2): c for (n1, n2), c
          in _symmetrize_u_like(lat, {(-n1, -n2): c for (n1, n2), c
                                      in vm_raw.items()}).items()}
    ap = draw(_coset_modes(lat, (0, 0), shells))
    am = draw(_coset_modes(lat, (0, 0), shells))

    def pack(d):
        q1, q2 = lat.gamma_star_gens
        items = sorted(d.items())
        return tuple((n1 * q1 + n2 * q2, c) for (n1, n2), c in items)

    spec = PerturbationSpec(a_plus=pack(ap), a_minus=pack(am),
                            v_plus=pack(vp), v_minus=pack(vm), seed=seed,
                            shells=shells)
    return _normalize_perturbation(lat, spec)


def _eval_modes(modes, z):
    out = np.zeros_like(z, dtype=complex)
    for q, c in modes:
        out += c * np.exp(1j * pairing(z, q))
    return out


def _normalize_perturbation(lat, spec: PerturbationSpec):
    g1, g2 = lat.gamma_gens
    s = np.linspace(0.0, 1.0, 48, endpoint=False)
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    z = (S1 * g1 + S2 * g2).ravel()
    w11 = _eval_modes(spec.a_plus, z)
    w12 = _eval_modes(spec.v_plus, z)
    w21 = _eval_modes(spec.v_minus, z)
    w22 = _eval_modes(spec.a_minus, z)
    # spectral norm of a 2x2 matrix field
    mats = np.stack([np.stack([w11, w12], -1), np.stack([w21, w22], -1)], -2)
    norms = np.linalg.svd(mats, compute_uv=False)[..., 0]
    scale = float(norms.max())
    if scale == 0:
        raise ValueError("degenerate zero perturbation draw")

    def rescale(modes):
        return tuple((q, c / scale) for q, c in modes)

    return PerturbationSpec(a_plus=rescale(spec.a_plus),
                            a_minus=rescale(spec.a_minus),
                            v_plus=rescale(spec.v_plus),
                            v_minus=rescale(spec.v_minus),
                            seed=spec.seed, shells=spec.shells)


def _coord_index_map(basis):
    """Dense (n1, n2, component) -> basis index map for vectorized shifts."""
    lat = basis.lattice
    vec_coords = lat.dual_coords(basis.vec_momenta - basis.k).round().astype(int)
    span = int(np.abs(vec_coords).max()) + 1
    table = np.full((2 * span + 1, 2 * span + 1, basis.components), -1,
                    dtype=int)
    table[vec_coords[:, 0] + span, vec_coords[:, 1] + span,
          basis.vec_component] = np.arange(basis.dim)
    return vec_coords, table, span


def perturbed_T(T: BlockOperator, pert: PerturbationSpec, lam: float):
    """T_lambda = T + (2 D_zbar + k)^{-1} lambda W on the basis of T.

    The diagonal perturbations shift momenta within a character block and
    the tunnelling ones between the two components of the same block, so
    the construction works on sector-restricted bases directly.
    """
    basis = T.basis
    lat = basis.lattice
    vec_coords, table, span = _coord_index_map(basis)
    inv = 1.0 / basis.vec_momenta
    delta = np.zeros((basis.dim, basis.dim), dtype=complex)
    block_modes = {(0, 0): pert.a_plus, (0, 1): pert.v_plus,
                   (1, 0): pert.v_minus, (1, 1): pert.a_minus}
    idx = np.arange(basis.dim)
    for (co, ci), modes in block_modes.items():
        src = idx[basis.vec_component == ci]
        for q, c in modes:
            d = lat.dual_coords(q).round().astype(int)
            t1 = vec_coords[src, 0] + int(d[0]) + span
            t2 = vec_coords[src, 1] + int(d[1]) + span
            inside = ((t1 >= 0) & (t1 < table.shape[0])
                      & (t2 >= 0) & (t2 < table.shape[1]))
            js = np.full(src.size, -1, dtype=int)
            js[inside] = table[t1[inside], t2[inside], co]
            ok = js >= 0
            delta[js[ok], src[ok]] += lam * c * inv[js[ok]]
    return BlockOperator(matrix=T.matrix + delta, basis=basis,
                         block_structure="T")


def perturbed_magic_scatter(lat, pot, lam, n_samples, seed,
                            cutoff=10.0, k=MAGIC_K, alpha_max=8.0,
                            shells=2):
    """Eigenvalue clouds of the perturbed operator, mapped to alpha = 1/ev.

    Returns a list of dicts, one per realization, with the sector-reduced
    perturbation norm and the cloud; realization i uses seed + i.
    """
    T = magic_operator(lat, pot, k, cutoff)
    clouds = []
    for i in range(n_samples):
        pert = sample_perturbation(lat, seed + i, shells=shells)
        Tl = perturbed_T(T, pert, lam)
        delta = Tl.matrix - T.matrix
        ev = np.linalg.eigvals(Tl.matrix)
        sel = np.abs(ev) >= 1.0 / alpha_max
        clouds.append({
            "seed": seed + i,
            "delta_norm": float(np.linalg.svd(delta, compute_uv=False)[0]),
            "eigenvalues": ev[sel],
            "alphas": 1.0 / ev[sel],
        })
    return clouds
