"""Data records shared by the saddle solver, trajectory and classifier modules."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .pulse import PulseParams

CLASS_LABELS = ("alpha", "beta", "gamma", "delta", "other", "unassigned")


class SingularityError(ArithmeticError):
    """A guarded denominator (ΔG, r², d²S/dt², t_f - t_s) vanished."""


@dataclass(frozen=True)
class FtProblem:
    """Target Rydberg state and pulse for one frustrated-tunneling solve.

    ``n`` and ``ell`` are real so that roots can be continued in them; the
    physical points are integers with 0 <= ell <= n - 1.
    """

    pulse: PulseParams
    n: float
    ell: float
    Z: float = 1.0
    Ip: float = 0.5

    def __post_init__(self):
        if self.Z <= 0 or self.Ip <= 0:
            raise ValueError("Z and Ip must be positive")
        if self.n <= 0 or self.ell < 0:
            raise ValueError("need n > 0 and ell >= 0")

    @property
    def ll(self) -> float:
        return self.ell * (self.ell + 1)

    @property
    def eta(self) -> float:
        """Effective principal quantum number of the initial state, Z/sqrt(2 Ip)."""
        return self.Z / (2 * self.Ip) ** 0.5


class BranchSigns(NamedTuple):
    """Signs of the recapture root, the tunneling root and the p_z root."""

    s_real: int
    s_imag: int
    s_pz: int


ALL_BRANCHES = tuple(BranchSigns(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1))


@dataclass(frozen=True)
class FilterVerdict:
    im_ts_positive: bool
    im_action_negative: bool
    pz_nearly_real: bool
    pz_small: bool

    @property
    def passes(self) -> bool:
        return self.im_ts_positive and self.im_action_negative and self.pz_nearly_real and self.pz_small

    def as_row(self) -> dict:
        return {
            "passes": self.passes,
            "im_ts_positive": self.im_ts_positive,
            "im_action_negative": self.im_action_negative,
            "pz_nearly_real": self.pz_nearly_real,
            "pz_small": self.pz_small,
        }


@dataclass(frozen=True)
class SaddleRoot:
    """A converged complex interaction time and everything derived from it."""

    problem: FtProblem
    t_s: complex
    branch: BranchSigns
    residual_norm: float
    iterations: int
    p_perp_sq: complex
    p_z: complex
    action: complex
    class_label: str = "unassigned"
    filter: FilterVerdict | None = field(default=None, compare=False)

    @property
    def passes(self) -> bool:
        return self.filter is not None and self.filter.passes
