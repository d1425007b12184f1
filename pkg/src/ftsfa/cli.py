"""
Command-line front end.

    ftsfa saddle  --preset fig1 --out out/
    ftsfa cep     --config my.json --threads 4
    ftsfa tdse    --preset fig6
    ftsfa compare --model out/model_full_wavefunction.csv --tdse out/tdse_grid.csv

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .amplitudes import AmplitudeOptions, grid_from_scan, scan_roots
from .compare import AlignmentError, compare_grids, correlation
from .config import ConfigError, RunConfig, load_config, load_preset
from .export import (FAMILY_COLUMNS, TRAJECTORY_COLUMNS, config_hash, csv_text, family_rows,
                     read_grid, root_row, trajectory_rows, write_grid, write_json, write_text)
from .problem import FtProblem, SingularityError
from .pulse import excursion, field_peaks
from .saddle import (VERIFY_TOL, NonConvergence, avoided_collision, closest_approach,
                     continue_family, critical_ell, find_all)
from .tdse import (InstabilityError, InsufficientGridError, build_basis, cep_scan_tdse,
                   checkpoint, load_basis, modify_continuum, propagate, save_basis)

log = logging.getLogger("ftsfa")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


class UnverifiedRoot(ArithmeticError):
    pass


NUMERIC_ERRORS = (NonConvergence, SingularityError, InstabilityError, InsufficientGridError,
                  UnverifiedRoot, FloatingPointError, ArithmeticError)


# --------------------------------------------------------------------------
# saddle


def _central_roots(roots, pulse, classes, window):
    peaks = field_peaks(pulse)
    if not peaks:
        return []
    tc = min(peaks, key=abs)
    half = window * pulse.period
    picked = {}
    for r in roots:
        if r.class_label in classes and abs(r.t_s.real - tc) <= half and r.class_label not in picked:
            picked[r.class_label] = r
    return [picked[c] for c in classes if c in picked]


def cmd_saddle(cfg: RunConfig, out: Path, threads: int = 1) -> dict:
    """ℓ-continuation of the α/β/γ/δ families at the central field peak, per n."""
    chash = config_hash(cfg.to_dict())
    pulse = cfg.pulse.pulse()
    T = pulse.period
    dG0 = float(np.real(excursion(pulse, pulse.t_f, 0.0)))
    th = cfg.model.thresholds
    fam_rows, listing, traj = [], [], []
    summary = {"config_hash": chash, "delta_G0": dG0, "period": T, "per_n": {}}
    for n in cfg.target.n:
        n = int(n)
        pr = FtProblem(pulse, n, 0, cfg.target.Z, cfg.target.Ip)
        roots = find_all(pr, thresholds=th)
        listing += [root_row(n, "ell", 0.0, r) for r in roots]
        start = _central_roots(roots, pulse, cfg.saddle.classes, cfg.saddle.window)
        stop = cfg.saddle.ell_stop if cfg.saddle.ell_stop is not None else n - 1
        curves = continue_family(pr, "ell", 0.0, float(stop), cfg.saddle.ell_step, start, thresholds=th)
        for c in curves:
            bad = [r for r in c.roots if not r.residual_norm < VERIFY_TOL]
            if bad:
                raise UnverifiedRoot(f"n={n} {c.label}: residual {bad[0].residual_norm:.2e}")
        fam_rows += family_rows(n, curves)
        by = {c.label: c for c in curves}
        info = {"critical_ell": critical_ell(n, cfg.target.Z, dG0),
                "classes": {c.label: {"broken_at": c.broken_at, "branch_flips": c.branch_flips,
                                      "passes_at_integer_ell": {str(int(round(c.values[i]))): c.roots[i].passes
                                                                for i in c.marks}}
                            for c in curves}}
        if "alpha" in by and "beta" in by:
            at, dist = closest_approach(by["alpha"], by["beta"])
            info["alpha_beta_collision_ell"] = avoided_collision(by["alpha"], by["beta"])
            info["alpha_beta_closest"] = {"ell": at, "distance_cycles": dist / T}
        summary["per_n"][str(n)] = info
        wanted = cfg.saddle.trajectory_ells
        for c in curves:
            if c.label not in ("alpha", "beta"):
                continue
            for i in c.marks:
                ell = int(round(c.values[i]))
                if wanted is None or ell in wanted:
                    traj += trajectory_rows(n, c.roots[i], cfg.saddle.trajectory_samples)
    if cfg.pulse.cep_grid is not None:
        # roots over the CEP grid, labelled per solve
        cep_rows = []
        for n in cfg.target.n:
            ells = cfg.target.ell if cfg.target.ell is not None else range(int(n))
            for ell in ells:
                for cep in cfg.pulse.ceps():
                    pr = FtProblem(pulse.with_cep(float(cep)), int(n), int(ell), cfg.target.Z, cfg.target.Ip)
                    for r in find_all(pr, thresholds=th):
                        if r.class_label != "other":
                            cep_rows.append([*root_row(int(n), "cep", float(cep), r), ell])
        write_text(out / "saddle_cep_roots.csv", csv_text(FAMILY_COLUMNS + ("ell",), cep_rows, chash))
    write_text(out / "saddle_families.csv", csv_text(FAMILY_COLUMNS, fam_rows, chash))
    write_text(out / "saddle_roots.csv", csv_text(FAMILY_COLUMNS, listing, chash))
    write_text(out / "saddle_trajectories.csv", csv_text(TRAJECTORY_COLUMNS, traj, chash))
    write_json(out / "saddle_summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# model CEP scan


def cmd_cep(cfg: RunConfig, out: Path, threads: int = 1) -> dict:
    """Model population grids over the CEP grid, one per prefactor mode."""
    chash = config_hash(cfg.to_dict())
    ceps = cfg.pulse.ceps()
    ns = [int(n) for n in cfg.target.n]
    ells = None if cfg.target.ell is None else [int(l) for l in cfg.target.ell]
    scan = scan_roots(cfg.pulse.pulse(), ceps, ns, ells, cfg.target.Z, cfg.target.Ip,
                      cfg.model.thresholds, workers=threads)
    options = AmplitudeOptions(cfg.model.diffusion, cfg.model.diffusion_time)
    missing = sum(v is None for v in scan.cells.values())
    summary = {"config_hash": chash, "missing_cells": missing, "modes": {}}
    grids = {}
    for mode in cfg.model.modes:
        variants = [True, False] if cfg.model.incoherent else [True]
        for coherent in variants:
            g = grid_from_scan(scan, mode, coherent, options)
            g.meta["filter"] = {"pz_real_ratio": cfg.model.pz_real_ratio, "pz_max": cfg.model.pz_max}
            name = f"model_{mode}" + ("" if coherent else "_incoherent")
            write_grid(out / f"{name}.csv", g, chash)
            if coherent:
                grids[mode] = g
            summed = g.summed_over_ell()
            summary["modes"][name] = {
                str(n): {"argmax_cep": float(ceps[np.nanargmax(summed[:, j])]),
                         "argmin_cep": float(ceps[np.nanargmin(summed[:, j])]),
                         "ell_fraction": [float(x) for x in g.ell_distribution(n)]}
                for j, n in enumerate(g.ns)}
    if len(grids) == 2:
        a, b = (grids[m] for m in cfg.model.modes)
        na, nb = a.normalized_to_max(), b.normalized_to_max()
        summary["mode_difference"] = {
            str(n): {"trace_correlation": correlation(na[:, j], nb[:, j]),
                     "max_abs_normalised_difference": float(np.nanmax(np.abs(na[:, j] - nb[:, j])))}
            for j, n in enumerate(a.ns)}
    write_json(out / "cep_summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# TDSE


def _basis(cfg: RunConfig):
    tc = cfg.tdse_config()
    path = cfg.tdse.basis_cache
    if path and Path(path).exists():
        try:
            return load_basis(path, tc)
        except ValueError as exc:
            log.warning("ignoring basis cache %s: %s", path, exc)
    basis = build_basis(tc)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        save_basis(basis, path)
    return basis


def cmd_tdse(cfg: RunConfig, out: Path, threads: int = 1) -> dict:
    """P(n) bars for each continuum treatment, plus a CEP grid when one is configured."""
    chash = config_hash(cfg.to_dict())
    basis = _basis(cfg)
    write_json(out / "tdse_checkpoint.json", dict(checkpoint(basis, cfg.tdse_config()), config_hash=chash))
    pulse = cfg.pulse.pulse()
    rows, summary = [], {"config_hash": chash, "runs": []}
    for mode in cfg.tdse.modes:
        for gamma in (cfg.tdse.gammas if mode == "damped" else [0.0]):
            tc = cfg.tdse_config(continuum_mode=mode, gamma=gamma)
            res = propagate(modify_continuum(basis, mode, gamma), pulse, tc)
            P, Pn = res.populations(), res.population_n()
            for n in range(1, tc.n_report_max + 1):
                for ell in range(n):
                    rows.append([mode, gamma, n, ell, P[n, ell]])
                rows.append([mode, gamma, n, "all", Pn[n]])
            excited = Pn[2:]
            summary["runs"].append({"mode": mode, "gamma": gamma, "norm": res.norm,
                                    "peak_n": int(2 + np.nanargmax(excited)),
                                    "P_n": [float(x) for x in Pn[1:]]})
    write_text(out / "tdse_bars.csv", csv_text(("mode", "gamma", "n", "ell", "population"), rows, chash))
    if cfg.pulse.cep_grid is not None:
        tc = cfg.tdse_config()
        grid = cep_scan_tdse(tc, pulse, cfg.pulse.ceps(), basis, workers=threads)
        write_grid(out / "tdse_grid.csv", grid, chash)
        summary["grid_missing_cells"] = int(np.isnan(grid.values).any(axis=(1, 2)).sum())
    write_json(out / "tdse_summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# comparison


def cmd_compare(cfg: RunConfig, out: Path, model_path=None, tdse_path=None) -> dict:
    model_path = model_path or cfg.compare.model
    tdse_path = tdse_path or cfg.compare.tdse
    if not model_path or not tdse_path:
        raise ConfigError("compare needs a model grid and a TDSE grid")
    for p in (model_path, tdse_path):
        if not Path(p).exists():
            raise ConfigError(f"grid file not found: {p}")
    chash = config_hash({"model": str(model_path), "tdse": str(tdse_path), **cfg.to_dict()})
    cmp = compare_grids(read_grid(model_path), read_grid(tdse_path))
    report = dict(cmp.as_dict(), config_hash=chash, summary=cmp.summary_lines())
    rows = []
    for n in cmp.ns:
        for k, ell in enumerate(cmp.ells):
            if ell < n:
                rows.append([n, ell, cmp.model_ell[n][k], cmp.tdse_ell[n][k]])
    write_text(out / "compare_ell.csv", csv_text(("n", "ell", "model_fraction", "tdse_fraction"), rows, chash))
    trace_rows = [[c, n, cmp.model_traces[i, j], cmp.tdse_traces[i, j]]
                  for i, c in enumerate(cmp.ceps) for j, n in enumerate(cmp.ns)]
    write_text(out / "compare_traces.csv",
               csv_text(("cep", "n", "model_normalised", "tdse_normalised"), trace_rows, chash))
    write_json(out / "compare_report.json", report)
    write_text(out / "compare_report.txt", f"# config_hash={chash}\n" + "\n".join(report["summary"]) + "\n")
    return report


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftsfa", description="Frustrated-tunneling saddle-point model and TDSE reference.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("saddle", "root families versus ℓ"), ("cep", "model CEP population grids"),
                        ("tdse", "TDSE reference populations"), ("compare", "compare model and TDSE grids")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--preset", help="bundled configuration (fig1 ... fig6)")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for independent cells")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "compare":
            p.add_argument("--model", type=Path, help="model grid CSV")
            p.add_argument("--tdse", type=Path, help="TDSE grid CSV")
    return parser


def _resolve(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        return load_config(args.config)
    if args.preset:
        return load_preset(args.preset)
    if args.command == "compare" and args.model and args.tdse:
        return RunConfig.from_dict({"pulse": {"intensity": 1.5e14}})
    raise ConfigError("one of --config or --preset is required")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        out = args.out if args.out is not None else Path(cfg.output)
        if args.command == "saddle":
            cmd_saddle(cfg, out, args.threads)
        elif args.command == "cep":
            cmd_cep(cfg, out, args.threads)
        elif args.command == "tdse":
            cmd_tdse(cfg, out, args.threads)
        else:
            for line in cmd_compare(cfg, out, args.model, args.tdse)["summary"]:
                print(line)
    except (ConfigError, AlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
