"""
cos²-envelope laser pulse with closed-form complex-time evaluation.

The vector potential

    A(t) = A0 cos²(πt/τ) sin(ωt + φ),   -τ/2 <= t <= τ/2

is written exactly as a sum of three sinusoids,

    A(t) = Σ_k c_k sin(w_k t + φ),
    (c_k, w_k) = (A0/2, ω), (A0/4, ω + 2Ω), (A0/4, ω - 2Ω),  Ω = π/τ,

so that the field, the excursion ∫A dt and ∫A² dt all have closed forms that
remain valid for complex time arguments. Everything is in atomic units.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

#: Intensity (W/cm²) corresponding to a field amplitude of 1 a.u.
ATOMIC_INTENSITY = 3.50944506e16
#: ω [a.u.] · λ [nm]
OMEGA_NM = 45.56335252907954

_DOMAIN_SLACK = 1e-9


class PulseDomainError(ValueError):
    """Raised when a pulse function is evaluated with Re(t) outside [t_i, t_f]."""


@dataclass(frozen=True)
class PulseParams:
    """Laser pulse parameters.

    Attributes
    ----------
    A0 : float
        Vector-potential amplitude (a.u.).
    omega : float
        Carrier angular frequency (a.u.).
    tau : float
        Total pulse duration (a.u.); the pulse lives on [-tau/2, tau/2].
    cep : float
        Carrier-envelope phase φ (rad).
    """

    A0: float
    omega: float
    tau: float
    cep: float = 0.0

    def __post_init__(self):
        if not (self.A0 >= 0 and self.omega > 0 and self.tau > 0):
            raise ValueError(f"invalid pulse parameters: {self}")

    @classmethod
    def from_cycles(cls, A0: float, omega: float, cycles: float, cep: float = 0.0) -> "PulseParams":
        return cls(A0=A0, omega=omega, tau=cycles * 2 * np.pi / omega, cep=cep)

    @classmethod
    def from_intensity(cls, intensity: float, wavelength: float, cycles: float,
                       cep: float = 0.0) -> "PulseParams":
        A0, _ = a0_from_intensity(intensity, wavelength)
        return cls.from_cycles(A0, OMEGA_NM / wavelength, cycles, cep)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def cycles(self) -> float:
        return self.tau / self.period

    @property
    def t_i(self) -> float:
        return -0.5 * self.tau

    @property
    def t_f(self) -> float:
        return 0.5 * self.tau

    @property
    def E0(self) -> float:
        return self.A0 * self.omega

    def with_cep(self, cep: float) -> "PulseParams":
        return replace(self, cep=cep)

    def components(self) -> tuple[np.ndarray, np.ndarray]:
        """Amplitudes c_k and angular frequencies w_k of the three sinusoids."""
        big_omega = np.pi / self.tau
        c = np.array([0.5, 0.25, 0.25]) * self.A0
        w = np.array([self.omega, self.omega + 2 * big_omega, self.omega - 2 * big_omega])
        return c, w


def _check_domain(p: PulseParams, t) -> np.ndarray:
    t = np.asarray(t)
    re = np.real(t)
    slack = _DOMAIN_SLACK * p.tau
    if np.any(re < p.t_i - slack) or np.any(re > p.t_f + slack) or np.any(np.isnan(re)):
        raise PulseDomainError(f"Re(t) outside [{p.t_i:.6g}, {p.t_f:.6g}]")
    return t


def _phase_terms(p: PulseParams, t):
    c, w = p.components()
    t = np.asarray(t)
    arg = np.multiply.outer(t, w) + p.cep
    return c, w, arg


def vector_potential(p: PulseParams, t):
    """A(t) for real or complex ``t`` (scalar or array)."""
    t = _check_domain(p, t)
    c, _, arg = _phase_terms(p, t)
    return np.sin(arg) @ c


def electric_field(p: PulseParams, t):
    """E(t) = -dA/dt."""
    t = _check_domain(p, t)
    c, w, arg = _phase_terms(p, t)
    return -(np.cos(arg) @ (c * w))


def field_derivative(p: PulseParams, t):
    """dE/dt = -d²A/dt²."""
    t = _check_domain(p, t)
    c, w, arg = _phase_terms(p, t)
    return np.sin(arg) @ (c * w * w)


def _antiderivative(p: PulseParams, t):
    c, w, arg = _phase_terms(p, t)
    # w_k = 0 only for the degenerate single-cycle pulse
    small = np.abs(w) < 1e-14
    safe_w = np.where(small, 1.0, w)
    terms = np.where(small, np.sin(arg) * np.asarray(t)[..., None], -np.cos(arg) / safe_w)
    return terms @ c


def excursion(p: PulseParams, t_upper, t_lower):
    """ΔG(t_upper, t_lower) = ∫_{t_lower}^{t_upper} A(τ) dτ."""
    t_upper = _check_domain(p, t_upper)
    t_lower = _check_domain(p, t_lower)
    return _antiderivative(p, t_upper) - _antiderivative(p, t_lower)


def _antiderivative_sq(p: PulseParams, t):
    c, w = p.components()
    t = np.asarray(t)
    cc = np.outer(c, c)
    wd = w[:, None] - w[None, :]
    ws = w[:, None] + w[None, :]
    tt = t[..., None, None]
    # sin a sin b = [cos(a - b) - cos(a + b)] / 2
    zero_d = np.abs(wd) < 1e-14
    zero_s = np.abs(ws) < 1e-14
    diff_part = np.where(zero_d, tt + 0 * wd, np.sin(wd * tt) / np.where(zero_d, 1.0, wd))
    sum_arg = ws * tt + 2 * p.cep
    sum_part = np.where(zero_s, tt * np.cos(2 * p.cep) + 0 * ws,
                        np.sin(sum_arg) / np.where(zero_s, 1.0, ws))
    return 0.5 * np.sum(cc * (diff_part - sum_part), axis=(-2, -1))


def excursion_sq(p: PulseParams, t_upper, t_lower):
    """∫_{t_lower}^{t_upper} A(τ)² dτ."""
    t_upper = _check_domain(p, t_upper)
    t_lower = _check_domain(p, t_lower)
    return _antiderivative_sq(p, t_upper) - _antiderivative_sq(p, t_lower)


def field_peaks(p: PulseParams, threshold: float = 0.01, samples_per_cycle: int = 400) -> list[float]:
    """Times of the local extrema of E(t) inside the pulse.

    Roots of dE/dt are bracketed on a dense grid and refined with Brent's
    method; extrema with |E| below ``threshold`` times the largest |E| found
    are dropped.
    """
    n = max(int(np.ceil(p.cycles * samples_per_cycle)), 16)
    grid = np.linspace(p.t_i, p.t_f, n + 1)
    dE = field_derivative(p, grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], dE[:-1], dE[1:]):
        if fa == 0.0 and a > p.t_i:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(lambda x: float(field_derivative(p, x)), a, b, xtol=1e-14))
    roots = [r for r in roots if p.t_i < r < p.t_f]
    if not roots:
        return []
    values = np.abs(electric_field(p, np.array(roots)))
    emax = max(values.max(), np.abs(electric_field(p, grid)).max())
    return [float(r) for r, v in zip(roots, values) if v > threshold * emax]


def a0_from_intensity(intensity: float, wavelength: float, ip: float = 0.5) -> tuple[float, float]:
    """Vector-potential amplitude and Keldysh parameter.

    Parameters
    ----------
    intensity : peak intensity in W/cm²
    wavelength : carrier wavelength in nm
    ip : ionization potential in a.u.

    Returns
    -------
    (A0, gamma) in atomic units; gamma is inf for zero intensity.
    """
    omega = OMEGA_NM / wavelength
    E0 = np.sqrt(intensity / ATOMIC_INTENSITY)
    A0 = E0 / omega
    gamma = omega * np.sqrt(2 * ip) / E0 if E0 > 0 else np.inf
    return float(A0), float(gamma)


# Real-time helpers for the propagator: zero outside the pulse window.

def vector_potential_real(p: PulseParams, t: float) -> float:
    if t <= p.t_i or t >= p.t_f:
        return 0.0
    return float(np.real(vector_potential(p, t)))


def electric_field_real(p: PulseParams, t: float) -> float:
    if t <= p.t_i or t >= p.t_f:
        return 0.0
    return float(np.real(electric_field(p, t)))
