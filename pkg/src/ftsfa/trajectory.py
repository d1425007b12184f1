"""
Stationary momenta, quasiclassical trajectories and the SFA action for a
saddle root.

A trajectory born at complex time t_s with canonical momentum
p = (p_perp, 0, p_z) (field along z) is

    r_perp(t) = p_perp (t - t_s),
    r_z(t)    = p_z (t - t_s) + ΔG(t, t_s),

and the action is

    S0 = ∫_{t_s}^{t_f} ½[p + A(t)]² dt - Ip (t_s - t_i).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import BranchSigns, FtProblem, SaddleRoot, SingularityError
from .pulse import PulseParams, electric_field, excursion, excursion_sq, vector_potential

_SINGULAR = 1e-12


def momentum_from_saddle(problem: FtProblem, t_s, branch: BranchSigns):
    """Squared transverse momentum and parallel momentum fixed by t_s.

    p_perp² = ℓ(ℓ+1)/ΔG(t_f, t_s)² and p_z = -A(t_s) + s_pz i sqrt(2 Ip + p_perp²).
    """
    p = problem.pulse
    dG = excursion(p, p.t_f, t_s)
    if np.any(np.abs(dG) < _SINGULAR):
        raise SingularityError("ΔG(t_f, t_s) vanishes")
    p_perp_sq = problem.ll / dG**2
    p_z = -vector_potential(p, t_s) + branch.s_pz * 1j * np.sqrt(2 * problem.Ip + p_perp_sq)
    return p_perp_sq, p_z


@dataclass(frozen=True)
class TrajectoryContext:
    pulse: PulseParams
    t_s: complex
    p_z: complex
    p_perp: complex
    Z: float = 1.0
    Ip: float = 0.5

    @classmethod
    def from_problem(cls, problem: FtProblem, t_s: complex, branch: BranchSigns) -> "TrajectoryContext":
        p_perp_sq, p_z = momentum_from_saddle(problem, t_s, branch)
        return cls(problem.pulse, complex(t_s), complex(p_z), complex(np.sqrt(p_perp_sq)),
                   problem.Z, problem.Ip)

    @classmethod
    def from_root(cls, root: SaddleRoot) -> "TrajectoryContext":
        pr = root.problem
        return cls(pr.pulse, root.t_s, root.p_z, complex(np.sqrt(root.p_perp_sq)), pr.Z, pr.Ip)

    @property
    def eta(self) -> float:
        return self.Z / np.sqrt(2 * self.Ip)

    @property
    def p_sq(self) -> complex:
        return self.p_z**2 + self.p_perp**2


def position(ctx: TrajectoryContext, t):
    """(r_perp, r_z) at (complex) time ``t``."""
    dt = np.asarray(t) - ctx.t_s
    r_z = ctx.p_z * dt + excursion(ctx.pulse, t, ctx.t_s)
    return ctx.p_perp * dt, r_z


def velocity(ctx: TrajectoryContext, t):
    """Kinetic momentum (p_perp, p_z + A(t))."""
    a = vector_potential(ctx.pulse, t)
    return ctx.p_perp + 0 * a, ctx.p_z + a


def final_radius_sq(ctx: TrajectoryContext) -> complex:
    """Analytic square r·r of the position at t_f (not |r|²)."""
    r_perp, r_z = position(ctx, ctx.pulse.t_f)
    return r_perp**2 + r_z**2


def action(ctx: TrajectoryContext) -> complex:
    """Closed-form SFA action S0 for the trajectory."""
    p = ctx.pulse
    span = p.t_f - ctx.t_s
    return (0.5 * ctx.p_sq * span
            + ctx.p_z * excursion(p, p.t_f, ctx.t_s)
            + 0.5 * excursion_sq(p, p.t_f, ctx.t_s)
            - ctx.Ip * (ctx.t_s - p.t_i))


def action_second_derivative(ctx: TrajectoryContext) -> complex:
    """d²S0/dt'² at t_s, i.e. E(t_s)[p_z + A(t_s)]."""
    p = ctx.pulse
    return electric_field(p, ctx.t_s) * (ctx.p_z + vector_potential(p, ctx.t_s))


def angular_momentum_sq(ctx: TrajectoryContext) -> complex:
    """L²(t_f) = p_perp² ΔG(t_f, t_s)²."""
    p = ctx.pulse
    return ctx.p_perp**2 * excursion(p, p.t_f, ctx.t_s) ** 2


def energy_residual(ctx: TrajectoryContext, n: float) -> complex:
    """p²/2 - Z/sqrt(r(t_f)²) + Z²/(2n²); zero on a Rydberg-matched root."""
    r2 = final_radius_sq(ctx)
    if abs(r2) < _SINGULAR:
        raise SingularityError("trajectory ends at the origin")
    return 0.5 * ctx.p_sq - ctx.Z / np.sqrt(r2) + ctx.Z**2 / (2 * n**2)


def recapture_radius_bound(n: float, ell: float, Z: float, dG0: float) -> float:
    """Largest final radius that still allows a real recapture time,
    2n² / (Z + n² ℓ(ℓ+1) / (Z ΔG0²))."""
    return 2 * n**2 / (Z + n**2 * ell * (ell + 1) / (Z * dG0**2))


def kepler_radius_bound(n: float, Z: float) -> float:
    """Zero-angular-momentum Kepler bound 2n²/Z."""
    return 2 * n**2 / Z


def sample_real_trajectory(ctx: TrajectoryContext, count: int) -> np.ndarray:
    """Rows (t, Re r_z, |r|) on a uniform real-time grid from Re t_s to t_f.

    |r| is sqrt(|r_perp|² + |r_z|²), the Euclidean norm of the moduli of the
    complex components.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    t = np.linspace(ctx.t_s.real, ctx.pulse.t_f, count)
    r_perp, r_z = position(ctx, t)
    return np.column_stack([t, r_z.real, np.sqrt(np.abs(r_perp) ** 2 + np.abs(r_z) ** 2)])
