"""Model versus TDSE comparison of CEP population grids."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amplitudes import PopulationGrid


class AlignmentError(ValueError):
    pass


def align(a: PopulationGrid, b: PopulationGrid, atol: float = 1e-9) -> tuple[list[int], list[int]]:
    """Common n and ℓ lists; the CEP axes must coincide."""
    if a.ceps.shape != b.ceps.shape or not np.allclose(a.ceps, b.ceps, atol=atol, rtol=0):
        raise AlignmentError("grids use different CEP samples")
    ns = [n for n in a.ns if n in b.ns]
    ells = [l for l in a.ells if l in b.ells]
    if not ns or not ells:
        raise AlignmentError("grids share no (n, ℓ) cells")
    return ns, ells


def _sub(grid: PopulationGrid, ns, ells) -> np.ndarray:
    j = [grid.ns.index(n) for n in ns]
    k = [grid.ells.index(l) for l in ells]
    return grid.values[:, j][:, :, k]


def correlation(x: np.ndarray, y: np.ndarray) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok] - x[ok].mean(), y[ok] - y[ok].mean()
    den = np.sqrt((x * x).sum() * (y * y).sum())
    return float((x * y).sum() / den) if den > 0 else float("nan")


def dominant_channels(dist: np.ndarray, ells, count: int = 2) -> list[int]:
    order = np.argsort(-np.nan_to_num(dist), kind="stable")
    return sorted(int(ells[i]) for i in order[:count])


@dataclass
class Comparison:
    ns: list[int]
    ells: list[int]
    ceps: np.ndarray
    model_traces: np.ndarray   # (cep, n), each normalised to its maximum
    tdse_traces: np.ndarray
    correlations: dict[int, float]
    model_ell: dict[int, np.ndarray]
    tdse_ell: dict[int, np.ndarray]
    mean_ell: dict[int, tuple[float, float]] = field(default_factory=dict)

    def ell_disagreement(self, n: int, threshold: float = 0.3) -> bool:
        """True when the ℓ distributions differ by more than ``threshold`` in total variation."""
        return 0.5 * float(np.abs(self.model_ell[n] - self.tdse_ell[n]).sum()) > threshold

    def as_dict(self) -> dict:
        out = {"ns": self.ns, "ells": self.ells, "ceps": [float(c) for c in self.ceps], "per_n": {}}
        for j, n in enumerate(self.ns):
            m, t = self.model_ell[n], self.tdse_ell[n]
            valid = [l for l in self.ells if l < n]
            idx = [self.ells.index(l) for l in valid]
            out["per_n"][str(n)] = {
                "trace_correlation": self.correlations[n],
                "model_ell_fraction": [float(m[i]) for i in idx],
                "tdse_ell_fraction": [float(t[i]) for i in idx],
                "model_dominant_ell": dominant_channels(m[idx], valid),
                "tdse_dominant_ell": dominant_channels(t[idx], valid),
                "model_mean_ell": self.mean_ell[n][0],
                "tdse_mean_ell": self.mean_ell[n][1],
                "ell_disagreement": self.ell_disagreement(n),
            }
        out["model_traces"] = np.round(self.model_traces, 12).tolist()
        out["tdse_traces"] = np.round(self.tdse_traces, 12).tolist()
        return out

    def summary_lines(self) -> list[str]:
        lines = []
        for n in self.ns:
            d = self.as_dict()["per_n"][str(n)]
            verdict = "disagree" if d["ell_disagreement"] else "agree"
            lines.append(
                f"n={n}: trace correlation {d['trace_correlation']:+.3f}; ℓ channels {verdict} "
                f"(model dominant {d['model_dominant_ell']}, mean ℓ {d['model_mean_ell']:.2f}; "
                f"TDSE dominant {d['tdse_dominant_ell']}, mean ℓ {d['tdse_mean_ell']:.2f})")
        return lines


def _normalised(traces: np.ndarray) -> np.ndarray:
    peak = np.nanmax(traces, axis=0)
    return np.where(peak > 0, traces / np.where(peak > 0, peak, 1), traces)


def compare_grids(model: PopulationGrid, tdse: PopulationGrid) -> Comparison:
    """Aligned normalised CEP traces, their per-n correlation and ℓ distributions."""
    ns, ells = align(model, tdse)
    a, b = _sub(model, ns, ells), _sub(tdse, ns, ells)
    ta, tb = _normalised(a.sum(axis=2)), _normalised(b.sum(axis=2))
    corr, m_ell, t_ell, mean = {}, {}, {}, {}
    L = np.asarray(ells, float)
    for j, n in enumerate(ns):
        corr[n] = correlation(ta[:, j], tb[:, j])
        for dst, g in ((m_ell, a), (t_ell, b)):
            w = np.nansum(g[:, j, :], axis=0)
            dst[n] = w / w.sum() if w.sum() > 0 else w
        mean[n] = (float((m_ell[n] * L).sum()), float((t_ell[n] * L).sum()))
    return Comparison(ns, ells, model.ceps.copy(), ta, tb, corr, m_ell, t_ell, mean)
