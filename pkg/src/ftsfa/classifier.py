"""Physicality filter and α/β/γ/δ labelling of saddle roots."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .problem import FilterVerdict, SaddleRoot
from .pulse import PulseParams, field_peaks


@dataclass(frozen=True)
class FilterThresholds:
    """Rule 3 requires |Im p_z| < pz_real_ratio |Re p_z|; rule 4 requires |p_z| < pz_max."""

    pz_real_ratio: float = 0.1
    pz_max: float = 0.5


DEFAULT_THRESHOLDS = FilterThresholds()


def filter_flags(t_s: complex, action: complex, p_z: complex,
                 thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> FilterVerdict:
    return FilterVerdict(
        im_ts_positive=bool(t_s.imag > 0),
        im_action_negative=bool(action.imag < 0),
        pz_nearly_real=bool(abs(p_z.imag) < thresholds.pz_real_ratio * abs(p_z.real)),
        pz_small=bool(abs(p_z) < thresholds.pz_max),
    )


def apply_filter(root: SaddleRoot, thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> FilterVerdict:
    return filter_flags(root.t_s, root.action, root.p_z, thresholds)


def with_filter(root: SaddleRoot, thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> SaddleRoot:
    return replace(root, filter=apply_filter(root, thresholds))


def partition(roots: Iterable[SaddleRoot]) -> tuple[list[SaddleRoot], list[SaddleRoot]]:
    """Split roots into (physical, rejected) by their filter verdict."""
    physical, rejected = [], []
    for r in roots:
        verdict = r.filter if r.filter is not None else apply_filter(r)
        (physical if verdict.passes else rejected).append(r)
    return physical, rejected


def nearest_peak(t: float, peaks: Sequence[float]) -> float:
    peaks = np.asarray(peaks)
    return float(peaks[np.argmin(np.abs(peaks - t))])


def energy_consistent(root: SaddleRoot) -> bool:
    """True when the p_z sign matches the tunneling sign.

    Only then is p_z² equal to the recapture radicand, i.e. the root obeys the
    final-energy condition; other branch combinations are spurious.
    """
    return root.branch.s_pz == root.branch.s_imag


def label_roots(roots: Sequence[SaddleRoot], pulse: PulseParams | None = None,
                window: float = 0.2,
                thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> list[SaddleRoot]:
    """Assign class labels to the roots of a single solve.

    Roots are grouped by their nearest field peak t_k (|Re t_s - t_k| within
    ``window`` optical cycles). Energy-consistent roots with Im t_s > 0 and a
    small, nearly real p_z are FT candidates: of the two closest to t_k the
    later one is α and the earlier β (a lone candidate is α if born after
    t_k). Of the remaining consistent roots with Im t_s > 0, the two closest
    to t_k are δ (smaller Im t_s) and γ. Everything else is ``other``.

    The nearly-real test is applied at the roots' own ℓ, so above the
    critical angular momentum α/β need continuation labels instead.
    """
    if not roots:
        return []
    pulse = pulse or roots[0].problem.pulse
    peaks = field_peaks(pulse)
    labels = ["other"] * len(roots)
    if not peaks:
        return [replace(r, class_label="other") for r in roots]
    half = window * pulse.period
    by_peak: dict[float, list[int]] = {}
    for i, r in enumerate(roots):
        if r.t_s.imag <= 0 or not energy_consistent(r):
            continue
        tk = nearest_peak(r.t_s.real, peaks)
        if abs(r.t_s.real - tk) <= half:
            by_peak.setdefault(tk, []).append(i)
    for tk, idx in by_peak.items():
        idx.sort(key=lambda i: abs(roots[i].t_s.real - tk))
        ft, rest = [], []
        for i in idx:
            v = filter_flags(roots[i].t_s, roots[i].action, roots[i].p_z, thresholds)
            (ft if v.pz_nearly_real and v.pz_small else rest).append(i)
        ft = ft[:2]
        if len(ft) == 2:
            early, late = sorted(ft, key=lambda i: roots[i].t_s.real)
            labels[early], labels[late] = "beta", "alpha"
        elif ft:
            labels[ft[0]] = "alpha" if roots[ft[0]].t_s.real > tk else "beta"
        pair = rest[:2]
        if len(pair) == 2:
            lo, hi = sorted(pair, key=lambda i: roots[i].t_s.imag)
            labels[lo], labels[hi] = "delta", "gamma"
    return [replace(r, class_label=lab) for r, lab in zip(roots, labels)]
