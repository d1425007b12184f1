"""
Frustrated-tunneling excitation amplitudes and CEP population grids.

The amplitude of |n ℓ 0> is a coherent sum over the filtered saddle roots,

    a_nℓ = Σ_roots  projection(p) × (2πi/(t_f - t_s))^{3/2}
                    × [d²S0/dt'²]^{-η/2-1/2} × exp(-i S0),

in atomic units with no further constant factors; only ratios are meaningful.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import DEFAULT_THRESHOLDS, FilterThresholds, partition
from .prefactors import PrefactorMode, diffusion_factor, projection, tunneling_weight
from .problem import FtProblem, SaddleRoot
from .pulse import PulseParams
from .saddle import find_all
from .trajectory import TrajectoryContext

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmplitudeOptions:
    """Switches for the amplitude assembly.

    ``diffusion_time`` selects whether the diffusion factor uses the complex
    saddle time ('complex') or its real part ('real').
    """

    diffusion: bool = True
    diffusion_time: str = "complex"


@dataclass(frozen=True)
class AmplitudeTerm:
    root: SaddleRoot
    prefactor: complex
    weight: complex
    diffusion: complex
    phase: complex

    @property
    def term(self) -> complex:
        return self.prefactor * self.weight * self.diffusion * self.phase


def amplitude_term(root: SaddleRoot, mode: PrefactorMode | str,
                   options: AmplitudeOptions = AmplitudeOptions()) -> AmplitudeTerm:
    pr = root.problem
    ctx = TrajectoryContext.from_root(root)
    pref = projection(mode, int(round(pr.n)), int(round(pr.ell)), root.p_z, ctx.p_perp, pr.Z)
    if options.diffusion:
        t_s = root.t_s if options.diffusion_time == "complex" else root.t_s.real
        diff = diffusion_factor(pr.pulse.t_f, t_s)
    else:
        diff = 1.0 + 0j
    return AmplitudeTerm(root=root, prefactor=complex(pref), weight=tunneling_weight(ctx, pr.eta),
                         diffusion=complex(diff), phase=complex(np.exp(-1j * root.action)))


def amplitude_terms(roots: Sequence[SaddleRoot], mode: PrefactorMode | str,
                    options: AmplitudeOptions = AmplitudeOptions()) -> list[AmplitudeTerm]:
    return [amplitude_term(r, mode, options) for r in roots]


def amplitude(problem: FtProblem, mode: PrefactorMode | str, physical_roots: Sequence[SaddleRoot],
              options: AmplitudeOptions = AmplitudeOptions()) -> complex:
    """Coherent sum over the given (already filtered) roots; 0 for an empty set."""
    return complex(sum((t.term for t in amplitude_terms(physical_roots, mode, options)), 0j))


def population(problem: FtProblem, mode: PrefactorMode | str, roots: Sequence[SaddleRoot],
               options: AmplitudeOptions = AmplitudeOptions()) -> float:
    return abs(amplitude(problem, mode, roots, options)) ** 2


def incoherent_population(problem: FtProblem, mode: PrefactorMode | str, roots: Sequence[SaddleRoot],
                          options: AmplitudeOptions = AmplitudeOptions()) -> float:
    return float(sum(abs(t.term) ** 2 for t in amplitude_terms(roots, mode, options)))


# --------------------------------------------------------------------------
# grids


@dataclass
class PopulationGrid:
    """Populations P(cep, n, ℓ); NaN marks a cell whose solve failed."""

    ceps: np.ndarray
    ns: list[int]
    ells: list[int]
    values: np.ndarray
    mode: str
    coherent: bool = True
    source: str = "model"
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def summed_over_ell(self) -> np.ndarray:
        """P(cep, n) summed over ℓ; NaN if any contributing cell is missing."""
        return self.values.sum(axis=2)

    def trace(self, n: int, ell: int | None = None) -> np.ndarray:
        i = self.ns.index(n)
        if ell is None:
            return self.summed_over_ell()[:, i]
        return self.values[:, i, self.ells.index(ell)]

    def normalized_to_max(self, by_ell: bool = False) -> np.ndarray:
        """Copy of the (ℓ-summed unless ``by_ell``) values scaled to a maximum of 1."""
        data = self.values if by_ell else self.summed_over_ell()
        peak = np.nanmax(data)
        return data / peak if peak > 0 else data.copy()

    def ell_distribution(self, n: int) -> np.ndarray:
        """Fraction of the CEP-integrated population of level n in each ℓ."""
        i = self.ns.index(n)
        per_ell = np.nansum(self.values[:, i, :], axis=0)
        total = per_ell.sum()
        return per_ell / total if total > 0 else per_ell

    def metadata(self) -> dict:
        return {"source": self.source, "mode": self.mode, "coherent": self.coherent,
                "normalized": self.normalized, "ceps": list(map(float, self.ceps)),
                "ns": list(self.ns), "ells": list(self.ells), **self.meta}


@dataclass
class RootScan:
    """Filtered roots for every (cep, n, ℓ) cell; None marks a failed solve."""

    pulse: PulseParams
    ceps: np.ndarray
    ns: list[int]
    ells: list[int]
    cells: dict[tuple[int, int, int], list[SaddleRoot] | None]
    Z: float = 1.0
    Ip: float = 0.5


def _solve_cell(args) -> list[SaddleRoot] | None:
    pulse, n, ell, Z, Ip, thresholds = args
    try:
        roots = find_all(FtProblem(pulse, n, ell, Z, Ip), thresholds=thresholds, label=False)
    except Exception as exc:  # recorded as a missing cell
        log.warning("cell cep=%.4f n=%d l=%d failed: %s", pulse.cep, n, ell, exc)
        return None
    physical, _ = partition(roots)
    return physical


def scan_roots(pulse: PulseParams, ceps: Sequence[float], ns: Sequence[int],
               ells: Sequence[int] | None = None, Z: float = 1.0, Ip: float = 0.5,
               thresholds: FilterThresholds = DEFAULT_THRESHOLDS, workers: int = 1) -> RootScan:
    """Solve and filter every (cep, n, ℓ) cell; ℓ defaults to 0..max(ns)-1."""
    ns = list(ns)
    if not ns:
        raise ValueError("empty n list")
    ells = list(range(max(ns))) if ells is None else list(ells)
    keys, jobs = [], []
    for i, cep in enumerate(ceps):
        pc = pulse.with_cep(float(cep))
        for j, n in enumerate(ns):
            for k, ell in enumerate(ells):
                if ell <= n - 1:
                    keys.append((i, j, k))
                    jobs.append((pc, n, ell, Z, Ip, thresholds))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_solve_cell, jobs, chunksize=4))
    else:
        results = [_solve_cell(j) for j in jobs]
    return RootScan(pulse, np.asarray(ceps, float), ns, ells, dict(zip(keys, results)), Z, Ip)


def grid_from_scan(scan: RootScan, mode: PrefactorMode | str, coherent: bool = True,
                   options: AmplitudeOptions = AmplitudeOptions()) -> PopulationGrid:
    mode = PrefactorMode(mode)
    values = np.zeros((len(scan.ceps), len(scan.ns), len(scan.ells)))
    for (i, j, k), roots in scan.cells.items():
        if roots is None:
            values[i, j, k] = np.nan
            continue
        terms = [t.term for t in amplitude_terms(roots, mode, options)]
        if coherent:
            values[i, j, k] = abs(sum(terms, 0j)) ** 2
        else:
            values[i, j, k] = sum(abs(t) ** 2 for t in terms)
    p = scan.pulse
    meta = {"pulse": {"A0": p.A0, "omega": p.omega, "tau": p.tau, "cycles": p.cycles},
            "Z": scan.Z, "Ip": scan.Ip, "diffusion": options.diffusion,
            "diffusion_time": options.diffusion_time}
    return PopulationGrid(scan.ceps.copy(), list(scan.ns), list(scan.ells), values,
                          mode.value, coherent, "model", False, meta)


def population_grid(pulse: PulseParams, ceps: Sequence[float], ns: Sequence[int],
                    ells: Sequence[int] | None, mode: PrefactorMode | str, coherent: bool = True,
                    options: AmplitudeOptions = AmplitudeOptions(),
                    thresholds: FilterThresholds = DEFAULT_THRESHOLDS, workers: int = 1) -> PopulationGrid:
    scan = scan_roots(pulse, ceps, ns, ells, thresholds=thresholds, workers=workers)
    grid = grid_from_scan(scan, mode, coherent, options)
    grid.meta["filter"] = {"pz_real_ratio": thresholds.pz_real_ratio, "pz_max": thresholds.pz_max}
    return grid


def count_local_maxima(trace: np.ndarray, periodic: bool = True, rel_prominence: float = 0.02) -> int:
    """Local maxima of a CEP trace that stand at least ``rel_prominence`` of the
    trace range above the neighbouring minima."""
    y = np.asarray(trace, float)
    if periodic:
        k = int(np.argmin(y))
        y = np.concatenate([np.roll(y, -k), [y[k]]])
    span = np.nanmax(y) - np.nanmin(y)
    if span <= 0:
        return 0
    thr = rel_prominence * span
    count, last_min, rising_peak = 0, y[0], None
    for v in y[1:]:
        if rising_peak is None:
            if v - last_min > thr:
                rising_peak = v
            else:
                last_min = min(last_min, v)
        else:
            if v > rising_peak:
                rising_peak = v
            elif rising_peak - v > thr:
                count += 1
                last_min, rising_peak = v, None
    if rising_peak is not None and rising_peak - y[-1] > thr:
        count += 1
    return count


def dumps_metadata(grid: PopulationGrid) -> str:
    return json.dumps(grid.metadata(), indent=2, sort_keys=True)
