"""
CSV/JSON writers and readers for root families, trajectories and population grids.

Files are written with '.' decimals, LF newlines and a fixed column order.
The first line of every CSV is a comment carrying the configuration hash.
Times are exported in optical cycles.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .amplitudes import PopulationGrid
from .classifier import apply_filter
from .problem import SaddleRoot
from .saddle import FamilyCurve
from .trajectory import TrajectoryContext, sample_real_trajectory

FAMILY_COLUMNS = ("n", "parameter", "value", "class", "re_ts_cycles", "im_ts_cycles",
                  "re_pz", "im_pz", "re_action", "im_action", "passes",
                  "im_ts_positive", "im_action_negative", "pz_nearly_real", "pz_small",
                  "s_real", "s_imag", "s_pz", "residual")
TRAJECTORY_COLUMNS = ("n", "ell", "class", "t_cycles", "re_rz", "abs_r")


def config_hash(config: dict) -> str:
    """Short SHA-256 of the canonical JSON form of a configuration."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def fmt(x) -> str:
    """Locale-free shortest round-trip formatting."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], chash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={chash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(text)
    return path


def write_json(path: Path, data: dict) -> Path:
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Returns (comment key/values, header, rows)."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith("#"):
                for item in line[1:].split():
                    if "=" in item:
                        k, v = item.split("=", 1)
                        meta[k] = v
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, [r for r in reader]


# --------------------------------------------------------------------------
# root families and trajectories


def root_row(n: int, parameter: str, value: float, root: SaddleRoot) -> list:
    T = root.problem.pulse.period
    v = root.filter if root.filter is not None else apply_filter(root)
    return [n, parameter, value, root.class_label, root.t_s.real / T, root.t_s.imag / T,
            root.p_z.real, root.p_z.imag, root.action.real, root.action.imag, v.passes,
            v.im_ts_positive, v.im_action_negative, v.pz_nearly_real, v.pz_small,
            root.branch.s_real, root.branch.s_imag, root.branch.s_pz, root.residual_norm]


def family_rows(n: int, curves: Sequence[FamilyCurve]) -> list[list]:
    rows = []
    for c in curves:
        for value, root in zip(c.values, c.roots):
            rows.append(root_row(n, c.parameter, value, root))
    return rows


def trajectory_rows(n: int, root: SaddleRoot, count: int) -> list[list]:
    ctx = TrajectoryContext.from_root(root)
    T = root.problem.pulse.period
    samples = sample_real_trajectory(ctx, count)
    return [[n, root.problem.ell, root.class_label, t / T, rz, r] for t, rz, r in samples]


# --------------------------------------------------------------------------
# population grids


def grid_csv(grid: PopulationGrid, chash: str) -> str:
    """Header row of CEP values; rows per (n, ℓ) followed by ℓ-summed rows (ell='all')."""
    columns = ["n", "ell"] + [fmt(c) for c in grid.ceps]
    rows = []
    for j, n in enumerate(grid.ns):
        for k, ell in enumerate(grid.ells):
            rows.append([n, ell, *grid.values[:, j, k]])
    summed = grid.summed_over_ell()
    for j, n in enumerate(grid.ns):
        rows.append([n, "all", *summed[:, j]])
    return csv_text(columns, rows, chash)


def write_grid(path, grid: PopulationGrid, chash: str) -> tuple[Path, Path]:
    path = Path(path)
    meta = dict(grid.metadata(), config_hash=chash)
    return (write_text(path, grid_csv(grid, chash)),
            write_json(path.with_suffix(".json"), meta))


def read_grid(path) -> PopulationGrid:
    """Read a grid CSV (and its JSON sidecar if present)."""
    path = Path(path)
    _, header, rows = read_csv(path)
    ceps = np.array([float(c) for c in header[2:]])
    per_ell = [r for r in rows if r[1] != "all"]
    ns = sorted({int(r[0]) for r in per_ell})
    ells = sorted({int(r[1]) for r in per_ell})
    values = np.full((len(ceps), len(ns), len(ells)), np.nan)
    for r in per_ell:
        values[:, ns.index(int(r[0])), ells.index(int(r[1]))] = [float(x) for x in r[2:]]
    side = path.with_suffix(".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    core = {"source", "mode", "coherent", "normalized", "ceps", "ns", "ells"}
    return PopulationGrid(ceps, ns, ells, values, meta.get("mode", "unknown"),
                          bool(meta.get("coherent", True)), meta.get("source", "unknown"),
                          bool(meta.get("normalized", False)),
                          {k: v for k, v in meta.items() if k not in core})
