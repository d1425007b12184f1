"""
Projection prefactors, tunneling weight and quantum-diffusion factor.

All functions accept complex momenta and times; they are analytic
continuations of the real-argument expressions (principal branches for
fractional powers and square roots).
"""
from __future__ import annotations

from enum import Enum
from math import factorial, pi, sqrt

import numpy as np

from .problem import SingularityError
from .trajectory import TrajectoryContext, action_second_derivative


class PrefactorMode(str, Enum):
    angular_only = "angular_only"
    full_wavefunction = "full_wavefunction"


def legendre(ell: int, x):
    """P_ℓ(x) by Bonnet's recurrence; x may be complex."""
    p0, p1 = np.ones_like(x), x
    if ell == 0:
        return p0
    for k in range(1, ell):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1


def solid_legendre(ell: int, p_z, p_sq):
    """p^ℓ P_ℓ(p_z/p) as a polynomial in p_z and p², free of square roots."""
    r0, r1 = np.ones_like(p_z), p_z
    if ell == 0:
        return r0
    for k in range(1, ell):
        r0, r1 = r1, ((2 * k + 1) * p_z * r1 - k * p_sq * r0) / (k + 1)
    return r1


def gegenbauer(k: int, alpha: float, x):
    """C_k^(alpha)(x) by the three-term recurrence."""
    c0 = np.ones_like(x)
    if k == 0:
        return c0
    c1 = 2 * alpha * x
    for j in range(2, k + 1):
        c0, c1 = c1, (2 * x * (j + alpha - 1) * c1 - (j + 2 * alpha - 2) * c0) / j
    return c1


def spherical_harmonic_conj(ell: int, p_z, p_perp):
    """Y*_ℓ0 of the momentum direction, continued to complex momenta."""
    p_sq = p_z**2 + p_perp**2
    if np.any(np.abs(p_sq) == 0):
        raise SingularityError("direction undefined for p² = 0")
    cos_theta = p_z / np.sqrt(p_sq)
    return sqrt((2 * ell + 1) / (4 * pi)) * legendre(ell, cos_theta)


def hydrogen_radial_momentum(n: int, ell: int, p_sq, Z: float = 1.0):
    """Radial momentum-space factor divided by p^ℓ.

    F_nℓ(p)/p^ℓ with ∫ F_nℓ(p)² p² dp = 1; a function of p² only.
    """
    if not (n >= 1 and 0 <= ell <= n - 1):
        raise ValueError(f"invalid quantum numbers n={n}, ell={ell}")
    q2 = n**2 * p_sq / Z**2
    norm = sqrt(2 * factorial(n - ell - 1) / (pi * factorial(n + ell))) * n**2 * 2 ** (2 * ell + 2) * factorial(ell)
    x = (q2 - 1) / (q2 + 1)
    return norm * (n / Z) ** ell * gegenbauer(n - ell - 1, ell + 1, x) / (q2 + 1) ** (ell + 2) * Z**-1.5


def hydrogen_momentum_wavefunction_conj(n: int, ell: int, p_z, p_perp, Z: float = 1.0):
    """Conjugate hydrogen momentum-space eigenfunction φ̃*_{nℓ0}(p).

    Uses the real phase convention (no (-i)^ℓ factor), which only changes
    the global phase of each (n, ℓ) amplitude.
    """
    p_sq = p_z**2 + p_perp**2
    angular = sqrt((2 * ell + 1) / (4 * pi)) * solid_legendre(ell, p_z, p_sq)
    return hydrogen_radial_momentum(n, ell, p_sq, Z) * angular


def projection(mode: PrefactorMode | str, n: int, ell: int, p_z, p_perp, Z: float = 1.0):
    mode = PrefactorMode(mode)
    if mode is PrefactorMode.angular_only:
        return spherical_harmonic_conj(ell, p_z, p_perp)
    return hydrogen_momentum_wavefunction_conj(n, ell, p_z, p_perp, Z)


def tunneling_weight(ctx: TrajectoryContext, eta: float | None = None) -> complex:
    """[d²S0/dt'²(t_s)]^(-η/2 - 1/2)."""
    eta = ctx.eta if eta is None else eta
    d2 = complex(action_second_derivative(ctx))
    if abs(d2) < 1e-300:
        raise SingularityError("d²S0/dt'² vanishes at t_s")
    return d2 ** (-eta / 2 - 0.5)


def diffusion_factor(t_f: float, t_s: complex) -> complex:
    """(2πi/(t_f - t_s))^(3/2), principal branch."""
    span = t_f - t_s
    if span == 0:
        raise SingularityError("t_s coincides with t_f")
    return (2j * pi / span) ** 1.5
