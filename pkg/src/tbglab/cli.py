"""Batch front-end: config parsing, subcommand dispatch, CSV/JSON artifacts.

Every run writes its outputs plus a manifest (config echo, seed, library
versions, wall time).  Numeric CSV bodies are byte-reproducible for a
fixed (config, seed) pair; manifests carry the only timestamps.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bands import bands_on_path, spectral_gap, standard_path
from .determinant import (
    det4_eig,
    det4_series,
    min_rank1_norm,
    perturbed_magic_scatter,
    pseudospectrum_grid,
    stability_bound,
    trace_table,
)
from .disorder import (
    DisorderConfig,
    assemble_finite_H,
    derived_seed,
    ids_estimate,
    sample_realization,
    wegner_scaling,
)
from .lattice import build_lattice, default_potential
from .magic import DEFAULT_K, compute_magic_angles, flat_band_certificate, magic_operator
from .operators import sector_restrict
from .topology import (
    SwitchFunctions,
    chern_fhs,
    combes_thomas_decay,
    flat_band_frame,
    hall_conductance,
    partial_chern,
    smooth_window,
    time_averaged_moment,
    transport_moment,
    wannier_moment,
    window_frame,
)

SUBCOMMANDS = (
    "magic", "bands", "traces", "det4", "stability-bound", "pseudospec",
    "instability", "perturb-scatter", "disorder-ids", "wegner", "chern",
    "transport", "wannier-moment",
)

_DEFAULTS = {
    "model": {"m": 0.0, "alpha": 0.5856635566, "potential": "default"},
    "numerics": {"cutoff": 12.0, "kgrid": 8, "L": 3, "L_list": [4, 6, 8],
                 "k_re": 0.0, "k_im": -1.0 / 3.0, "pmax": 8,
                 "series_order": 16, "alpha_max": 1.0,
                 "region": [-2.0, 2.0, -1.5, 1.5], "resolution": [40, 30],
                 "alpha_scan": [0.8, 4.0, 17], "times": [0.0, 1.0, 50.0],
                 "T_list": [2.0, 5.0], "p_moment": 2.0,
                 "intervals": [[-0.01, 0.01]], "n_samples": 20,
                 "lambda": 0.05, "window": [-0.01, 0.01]},
    "disorder": {"lambda": 0.1, "case": "case2", "bump_radius": 5.0,
                 "relax_radius": 0.0, "density_scale": 1.0},
    "seed": 0,
}


class ConfigError(ValueError):
    pass


def _merge_strict(defaults, override, path=""):
    out = dict(defaults)
    for key, val in override.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key: {path}{key}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key} must be a table")
            out[key] = _merge_strict(defaults[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def load_config(path=None, seed=None, overrides=()):
    raw = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
    cfg = _merge_strict(_DEFAULTS, raw)
    for item in overrides:
        key, _, val = item.partition("=")
        parts = key.split(".")
        node = cfg
        for part in parts[:-1]:
            if part not in node:
                raise ConfigError(f"unknown override key: {key}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override key: {key}")
        node[parts[-1]] = json.loads(val)
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


def format_float(x):
    return f"{float(x):.17g}"


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(format_float(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _model(cfg):
    lat = build_lattice()
    pot = default_potential()
    if cfg["model"]["potential"] != "default":
        raise ConfigError("only the default potential spec is shipped")
    return lat, pot


def _k(cfg):
    return complex(cfg["numerics"]["k_re"], cfg["numerics"]["k_im"])


# ---------------------------------------------------------------------------
# subcommand bodies: each returns a list of (filename, header, rows)


def _run_magic(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    res = compute_magic_angles(lat, pot, cutoff=nm["cutoff"], k=_k(cfg),
                               alpha_max=nm["alpha_max"])
    rows = [(a.real, a.imag, lam.real, lam.imag, deg, sec, r)
            for (a, lam, deg, sec), r in zip(res.alphas, res.residuals)]
    return [("magic.csv",
             ["re_alpha", "im_alpha", "re_eigenvalue", "im_eigenvalue",
              "degeneracy", "sector", "kernel_residual"], rows)]


def _run_bands(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    path = standard_path(lat)
    res = bands_on_path(cfg["model"]["m"], cfg["model"]["alpha"], lat, pot,
                        path, cutoff=min(nm["cutoff"], 6.0))
    header = ["path_coord", "re_k", "im_k"] + \
        [f"E_{i+1}" for i in range(res.energies.shape[1])]
    rows = [[c, kk.real, kk.imag] + list(row)
            for c, kk, row in zip(res.path_coord, res.kpath, res.energies)]
    return [("bands.csv", header, rows)]


def _run_traces(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    tab = trace_table(lat, pot, k=_k(cfg), cutoff=max(nm["cutoff"], 16.0),
                      pmax=nm["pmax"])
    from fractions import Fraction
    ref = {1: Fraction(2, 9), 2: Fraction(4, 9), 3: Fraction(32, 63),
           4: Fraction(40, 81), 5: Fraction(9560, 20007),
           6: Fraction(245120, 527877),
           7: Fraction(1957475168, 4337177481),
           8: Fraction(13316086960, 30360242367)}
    rows = []
    for p in sorted(tab.sigma):
        val = tab.sigma[p].real
        known = 3.0**p * (np.pi / np.sqrt(3.0)) * float(ref[p]) if p in ref else np.nan
        rel = abs(val - known) / known if p in ref else np.nan
        rows.append((p, val, known, rel,
                     "conditional" if p == 1 else "absolute"))
    return [("traces.csv",
             ["p", "sigma_p", "reference_value", "rel_err", "convergence"],
             rows)]


def _run_det4(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    tab = trace_table(lat, pot, k=_k(cfg), cutoff=max(nm["cutoff"], 12.0),
                      pmax=nm["pmax"])
    T = magic_operator(lat, pot, _k(cfg), nm["cutoff"])
    lo, hi, npts = nm["alpha_scan"]
    rows = []
    for a in np.linspace(lo, hi, int(npts)):
        lg = det4_eig(T, a)
        val, tail = det4_series(tab, a, order=nm["series_order"])
        rows.append((a, lg.log_mag, lg.phase, val.real, val.imag, tail))
    return [("det4.csv",
             ["alpha", "log_mag_eig", "phase_eig", "re_series", "im_series",
              "tail_bound"], rows)]


def _run_stability_bound(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    T = magic_operator(lat, pot, _k(cfg), nm["cutoff"])
    lo, hi, npts = nm["alpha_scan"]
    rows = []
    for a in np.linspace(lo, hi, int(npts)):
        lg = det4_eig(T, a)
        rows.append((a, stability_bound(a, lg), lg.log_mag))
    return [("bound.csv", ["alpha", "log10_bound", "log_mag_det4"], rows)]


def _run_pseudospec(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    T = magic_operator(lat, pot, _k(cfg), nm["cutoff"])
    grid = pseudospectrum_grid(T, nm["region"], nm["resolution"])
    rows = []
    for iy, b in enumerate(grid.im):
        for ix, a in enumerate(grid.re):
            rows.append((a, b, grid.values[iy, ix]))
    return [("pseudospec.csv", ["re_z", "im_z", "sigma_min"], rows)]


def _run_instability(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    T = magic_operator(lat, pot, _k(cfg), nm["cutoff"])
    lo, hi, npts = nm["alpha_scan"]
    rows = []
    for a in np.linspace(lo, hi, int(npts)):
        s, _ = min_rank1_norm(T, -1.0 / a)
        rows.append((a, s, np.log(s)))
    return [("instability.csv", ["alpha", "sigma_min", "log_sigma_min"], rows)]


def _run_perturb_scatter(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    clouds = perturbed_magic_scatter(lat, pot, nm["lambda"], nm["n_samples"],
                                     cfg["seed"], cutoff=nm["cutoff"],
                                     k=_k(cfg), alpha_max=8.0)
    rows = []
    for i, cloud in enumerate(clouds):
        for a in cloud["alphas"]:
            rows.append((i, cloud["seed"], cloud["delta_norm"],
                         a.real, a.imag))
    return [("scatter.csv",
             ["realization", "seed", "delta_norm", "re_alpha", "im_alpha"],
             rows)]


def _run_disorder_ids(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    dd = cfg["disorder"]
    dcfg = DisorderConfig(lambda_=dd["lambda"], case=dd["case"],
                          bump_radius=dd["bump_radius"],
                          relax_radius=dd["relax_radius"],
                          density_scale=dd["density_scale"]).normalize(lat)
    L = nm["L"]
    spectra = []
    for i in range(nm["n_samples"]):
        real = sample_realization(dcfg, L, derived_seed(cfg["seed"], "ids", i))
        H = assemble_finite_H(cfg["model"]["m"], cfg["model"]["alpha"], dcfg,
                              lat, pot, real, cutoff=min(nm["cutoff"], 1.5))
        spectra.append(np.linalg.eigvalsh(H.matrix))
    intervals = [tuple(iv) for iv in nm["intervals"]]
    stats = ids_estimate(spectra, lat, L, intervals)
    rows = [(a, b, *stats.ids_estimates[(a, b)]) for a, b in intervals]
    hist_rows = list(zip(stats.histogram_edges[:-1], stats.histogram_edges[1:],
                         stats.histogram_counts))
    return [
        ("ids.csv", ["interval_lo", "interval_hi", "ids_mean", "ids_stderr"],
         rows),
        ("dos_histogram.csv", ["edge_lo", "edge_hi", "count"], hist_rows),
    ]


def _run_wegner(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    dd = cfg["disorder"]
    dcfg = DisorderConfig(lambda_=dd["lambda"], case=dd["case"],
                          bump_radius=dd["bump_radius"],
                          relax_radius=dd["relax_radius"],
                          density_scale=dd["density_scale"]).normalize(lat)
    stats = wegner_scaling(lat, pot, dcfg, cfg["model"]["m"],
                           cfg["model"]["alpha"],
                           L_list=tuple(nm["L_list"]),
                           n_real=nm["n_samples"],
                           width_n_real=nm["n_samples"],
                           seed=cfg["seed"], cutoff=min(nm["cutoff"], 1.5))
    fit = stats.wegner_fit
    rows = [(fit["exponent_width"], fit["r2_width"], fit["exponent_area"],
             fit["r2_area"], stats.gap_violations, stats.n_realizations)]
    return [("wegner.csv",
             ["exponent_width", "r2_width", "exponent_area", "r2_area",
              "gap_violations", "n_realizations"], rows)]


def _run_chern(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    m = cfg["model"]["m"] if cfg["model"]["m"] > 0 else 0.2
    alpha = cfg["model"]["alpha"]
    upper = chern_fhs(lat, pot, alpha, m, lambda nb: [nb // 2],
                      kgrid=nm["kgrid"])
    lower = chern_fhs(lat, pot, alpha, m, lambda nb: [nb // 2 - 1],
                      kgrid=nm["kgrid"])
    L = max(nm["L"], 6)
    P1 = flat_band_frame(lat, pot, alpha, L, sublattice=1)
    P2 = flat_band_frame(lat, pot, alpha, L, sublattice=2)
    sw = SwitchFunctions()
    om1, ch1 = hall_conductance(P1, sw)
    om2, ch2 = hall_conductance(P2, sw)
    rows = [("fhs_upper", upper, 0.0),
            ("fhs_lower", lower, 0.0),
            ("commutator_kerD", ch1.real, ch1.imag),
            ("commutator_kerDstar", ch2.real, ch2.imag)]
    return [("chern.csv", ["band", "chern_re", "chern_im"], rows)]


def _run_transport(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    dd = cfg["disorder"]
    dcfg = DisorderConfig(lambda_=dd["lambda"], case=dd["case"],
                          bump_radius=dd["bump_radius"],
                          relax_radius=dd["relax_radius"],
                          density_scale=dd["density_scale"]).normalize(lat)
    L = nm["L"]
    real = sample_realization(dcfg, L, derived_seed(cfg["seed"], "transport"))
    H = assemble_finite_H(cfg["model"]["m"], cfg["model"]["alpha"], dcfg,
                          lat, pot, real, cutoff=min(nm["cutoff"], 1.5))
    lo, hi = nm["window"]
    chi = smooth_window(lo, hi)
    times = list(nm["times"])
    mm = transport_moment(H, nm["p_moment"], chi, times)
    rows = list(zip(times, mm))
    tavg = time_averaged_moment(np.linspace(0, 5 * max(nm["T_list"]), 128),
                                np.interp(np.linspace(0, 5 * max(nm["T_list"]), 128),
                                          times, mm), nm["T_list"])
    rows2 = list(zip(nm["T_list"], tavg))
    return [("transport.csv", ["t", "M"], rows),
            ("transport_avg.csv", ["T", "M_avg"], rows2)]


def _run_wannier_moment(cfg):
    lat, pot = _model(cfg)
    nm = cfg["numerics"]
    vals = wannier_moment(lat, pot, cfg["model"]["alpha"], nm["p_moment"],
                          nm["L_list"])
    return [("wannier.csv", ["L", "moment"], vals)]


_RUNNERS = {
    "magic": _run_magic,
    "bands": _run_bands,
    "traces": _run_traces,
    "det4": _run_det4,
    "stability-bound": _run_stability_bound,
    "pseudospec": _run_pseudospec,
    "instability": _run_instability,
    "perturb-scatter": _run_perturb_scatter,
    "disorder-ids": _run_disorder_ids,
    "wegner": _run_wegner,
    "chern": _run_chern,
    "transport": _run_transport,
    "wannier-moment": _run_wannier_moment,
}


def run(subcommand, config_path=None, out_dir="out", seed=None,
        overrides=(), threads=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    t0 = time.time()
    try:
        cfg = load_config(config_path, seed=seed, overrides=overrides)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if subcommand not in _RUNNERS:
        print(f"unknown subcommand: {subcommand}", file=sys.stderr)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        if threads:
            _limit_threads(int(threads))
        tables = _RUNNERS[subcommand](cfg)
        for name, header, rows in tables:
            write_csv(out / name, header, rows)
            written.append(name)
    except Exception as exc:  # structured failure: clean partial outputs
        for name in written:
            (out / name).unlink(missing_ok=True)
        print(f"error [{subcommand}]: {exc}", file=sys.stderr)
        return 1
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    manifest = {
        "subcommand": subcommand,
        "config": cfg,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": cfg["seed"],
        "outputs": written,
        "versions": {"tbglab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": round(time.time() - t0, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")
    return 0


def _limit_threads(n):
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=n)
    except ImportError:
        pass


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="tbglab",
        description="flat-band laboratory: magic angles, determinant "
                    "stability bounds, disordered ensembles, topology")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=JSON",
                        help="dotted-path config override, e.g. "
                             "numerics.cutoff=10")
    args = parser.parse_args(argv)
    return run(args.subcommand, config_path=args.config, out_dir=args.out,
               seed=args.seed, overrides=args.set, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
