"""
Spectral-basis TDSE for hydrogen in a linearly polarised pulse (m = 0).

Field-free radial eigenstates come from a uniform-grid finite-difference
Hamiltonian per ℓ,

    -½ d²/dr² + ℓ(ℓ+1)/(2r²) - Z/r,   u(0) = u(r_max) = 0,

diagonalised with a symmetric tridiagonal eigensolver. The wavefunction is
propagated in this eigenbasis: H(t) = diag(E) + f(t) V, with V the dipole
coupling (z in length gauge, p_z in velocity gauge) between ℓ and ℓ ± 1.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .amplitudes import PopulationGrid
from .pulse import PulseParams, electric_field_real, vector_potential_real

log = logging.getLogger(__name__)

CONTINUUM_MODES = ("full", "bound_only", "damped")


class InsufficientGridError(RuntimeError):
    pass


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class TdseConfig:
    r_max: float = 400.0
    n_grid: int = 16000
    ell_max: int = 30
    e_cut: float = 10.0
    dt: float = 0.02
    gauge: str = "length"
    continuum_mode: str = "full"
    gamma: float = 0.5
    n_report_max: int = 12
    Z: float = 1.0

    def __post_init__(self):
        if self.gauge not in ("length", "velocity"):
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if self.continuum_mode not in CONTINUUM_MODES:
            raise ValueError(f"unknown continuum mode {self.continuum_mode!r}")
        if self.r_max <= 0 or self.n_grid < 10 or self.ell_max < 0 or self.dt <= 0:
            raise ValueError("invalid TDSE configuration")
        if self.continuum_mode == "damped" and self.gamma < 0:
            raise ValueError("damping rate must be non-negative")
        if self.dt * self.e_cut >= 1:
            raise ValueError(f"dt*e_cut = {self.dt * self.e_cut:.3g} must stay below 1")

    @property
    def h(self) -> float:
        return self.r_max / (self.n_grid + 1)

    def basis_key(self) -> dict:
        return {"r_max": self.r_max, "n_grid": self.n_grid, "ell_max": self.ell_max,
                "e_cut": self.e_cut, "Z": self.Z}


def coupling_coefficient(ell: int) -> float:
    """<Y_{ℓ+1,0}| cos θ |Y_{ℓ,0}>."""
    return (ell + 1) / math.sqrt((2 * ell + 1) * (2 * ell + 3))


@dataclass
class SpectralBasis:
    """Per-ℓ eigen-energies and ℓ → ℓ+1 dipole blocks.

    ``dipole[l]`` has shape (len(energies[l+1]), len(energies[l])) and holds
    <ℓ+1, a| z |ℓ, b>. ``radial_energies`` keeps the real field-free energies
    when ``energies`` has been given imaginary parts.
    """

    config: TdseConfig
    energies: list[np.ndarray]
    dipole: list[np.ndarray]
    bound_index: dict[tuple[int, int], int]
    radial_energies: list[np.ndarray] | None = None
    vectors: list[np.ndarray] | None = None
    _velocity: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def ell_max(self) -> int:
        return len(self.energies) - 1

    @property
    def sizes(self) -> list[int]:
        return [len(e) for e in self.energies]

    @property
    def hermitian(self) -> bool:
        return all(np.isrealobj(e) or not np.any(e.imag) for e in self.energies)

    def real_energies(self) -> list[np.ndarray]:
        return self.radial_energies if self.radial_energies is not None else self.energies

    def velocity_blocks(self) -> list[np.ndarray]:
        """W with <ℓ+1, a| p_z |ℓ, b> = i W_ab, from p = i[H0, z]."""
        if self._velocity is None:
            E = self.real_energies()
            self._velocity = [(np.real(E[l + 1])[:, None] - np.real(E[l])[None, :]) * D
                              for l, D in enumerate(self.dipole)]
        return self._velocity

    def digest(self) -> str:
        h = hashlib.sha256(json.dumps(self.config.basis_key(), sort_keys=True).encode())
        for e in self.real_energies():
            h.update(np.ascontiguousarray(np.real(e)).round(12).tobytes())
        return h.hexdigest()[:16]


def radial_hamiltonian(config: TdseConfig, ell: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal, off-diagonal and grid of the finite-difference radial Hamiltonian."""
    h = config.h
    r = h * np.arange(1, config.n_grid + 1)
    d = 1.0 / h**2 + ell * (ell + 1) / (2 * r**2) - config.Z / r
    e = np.full(config.n_grid - 1, -0.5 / h**2)
    return d, e, r


def _eigenpairs(config: TdseConfig, ell: int):
    d, e, r = radial_hamiltonian(config, ell)
    w, v = eigh_tridiagonal(d, e, select="v", select_range=(-np.inf, config.e_cut),
                            lapack_driver="stemr")
    # fixed sign convention: positive slope at the origin
    v *= np.where(v[0] < 0, -1.0, 1.0)
    return w, v, r


def _bound_index(energies, n_report_max: int) -> dict[tuple[int, int], int]:
    """(n, ℓ) -> position in the ℓ block for bound states with n <= n_report_max."""
    index = {}
    for ell, w in enumerate(energies):
        for k, E in enumerate(np.real(w)):
            n = ell + 1 + k
            if E >= 0 or n > n_report_max:
                break
            index[(n, ell)] = k
    return index


def build_basis(config: TdseConfig, check: bool = True, keep_vectors: bool = False) -> SpectralBasis:
    """Diagonalise every ℓ channel and form the dipole blocks.

    With ``check`` the bound energies n <= min(10, n_report_max) must be
    within 1e-4 of -Z²/2n², otherwise InsufficientGridError is raised.
    ``keep_vectors`` retains the radial eigenvectors (n_grid × states per ℓ).
    """
    energies, dipole, vectors = [], [], []
    prev = None
    for ell in range(config.ell_max + 1):
        w, v, r = _eigenpairs(config, ell)
        energies.append(w)
        if check:
            for k, E in enumerate(w[: max(min(10, config.n_report_max) - ell, 0)]):
                n = ell + 1 + k
                if E < 0 and abs(E + config.Z**2 / (2 * n**2)) > 1e-4:
                    raise InsufficientGridError(
                        f"E({n},{ell}) = {E:.7f} deviates from {-config.Z**2 / (2 * n**2):.7f}; refine the grid")
        if prev is not None:
            dipole.append(coupling_coefficient(ell - 1) * (v.T @ (r[:, None] * prev)))
        prev = v
        if keep_vectors:
            vectors.append(v / math.sqrt(config.h))
        log.debug("l=%d: %d states", ell, len(w))
    return SpectralBasis(config, energies, dipole, _bound_index(energies, config.n_report_max),
                         vectors=vectors if keep_vectors else None)


def modify_continuum(basis: SpectralBasis, mode: str, gamma: float = 0.5) -> SpectralBasis:
    """Remove (``bound_only``) or damp (``damped``: E -> E - iΓ) the E > 0 states."""
    if mode == "full":
        return basis
    E = basis.real_energies()
    if mode == "bound_only":
        keep = [np.real(e) < 0 for e in E]
        energies = [np.real(e)[k] for e, k in zip(E, keep)]
        dipole = [D[keep[l + 1]][:, keep[l]] for l, D in enumerate(basis.dipole)]
        vectors = None if basis.vectors is None else [v[:, k] for v, k in zip(basis.vectors, keep)]
        return SpectralBasis(basis.config, energies, dipole, dict(basis.bound_index),
                             radial_energies=energies, vectors=vectors)
    if mode == "damped":
        energies = [np.where(np.real(e) > 0, np.real(e) - 1j * gamma, np.real(e) + 0j) for e in E]
        return SpectralBasis(basis.config, energies, basis.dipole, dict(basis.bound_index),
                             radial_energies=[np.real(e) for e in E], vectors=basis.vectors,
                             _velocity=basis._velocity)
    raise ValueError(f"unknown continuum mode {mode!r}")


class _Coupling:
    """Applies V (z or p_z) to a flat coefficient vector."""

    def __init__(self, basis: SpectralBasis, gauge: str):
        self.blocks = basis.dipole if gauge == "length" else basis.velocity_blocks()
        self.up = 1.0 if gauge == "length" else 1j
        self.offsets = np.concatenate([[0], np.cumsum(basis.sizes)])
        self.size = int(self.offsets[-1])

    def apply(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        o = self.offsets
        if out is None:
            out = np.zeros_like(psi)
        else:
            out[:] = 0
        up, down = self.up, np.conj(self.up)
        for l, B in enumerate(self.blocks):
            a = psi[o[l]:o[l + 1]]
            b = psi[o[l + 1]:o[l + 2]]
            ra = B @ a.view(np.float64).reshape(-1, 2)
            rb = B.T @ b.view(np.float64).reshape(-1, 2)
            out[o[l + 1]:o[l + 2]] += up * ra.view(np.complex128).ravel()
            out[o[l]:o[l + 1]] += down * rb.view(np.complex128).ravel()
        return out


@dataclass
class TdseResult:
    amplitudes: np.ndarray
    offsets: np.ndarray
    bound_index: dict[tuple[int, int], int]
    norm_history: np.ndarray
    config: TdseConfig
    n_report_max: int

    def amplitude(self, n: int, ell: int) -> complex:
        k = self.bound_index.get((n, ell))
        if k is None:
            return complex("nan")
        return complex(self.amplitudes[self.offsets[ell] + k])

    def populations(self) -> np.ndarray:
        """P[n, ℓ] for n <= n_report_max (row 0 unused); NaN for unresolved states."""
        P = np.full((self.n_report_max + 1, self.n_report_max), np.nan)
        for n in range(1, self.n_report_max + 1):
            for ell in range(min(n, len(self.offsets) - 1)):
                P[n, ell] = abs(self.amplitude(n, ell)) ** 2
        return P

    def population_n(self) -> np.ndarray:
        """P(n) summed over ℓ, indexed by n (entry 0 unused)."""
        return np.nansum(self.populations(), axis=1)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _field_function(pulse: PulseParams, gauge: str):
    return (lambda t: electric_field_real(pulse, t)) if gauge == "length" else \
        (lambda t: vector_potential_real(pulse, t))


def _taylor_exp(coupling: _Coupling, psi: np.ndarray, factor: complex, tol: float = 1e-12,
                max_terms: int = 60) -> np.ndarray:
    """exp(factor V) psi by truncated series."""
    result = psi.copy()
    term = psi
    scale = np.linalg.norm(psi)
    for k in range(1, max_terms + 1):
        term = coupling.apply(term) * (factor / k)
        result += term
        if np.linalg.norm(term) < tol * scale:
            return result
    raise InstabilityError("operator-exponential series did not converge; reduce dt")


def propagate(basis: SpectralBasis, pulse: PulseParams, config: TdseConfig | None = None,
              record_every: int = 50, initial: tuple[int, int] = (1, 0)) -> TdseResult:
    """Propagate the initial bound state through the pulse.

    ``continuum_mode='full'`` on a Hermitian basis uses second-order
    differencing (first step by RK4); bound-only and damped runs use an
    exponential-midpoint splitting.
    """
    config = config or basis.config
    coupling = _Coupling(basis, config.gauge)
    f = _field_function(pulse, config.gauge)
    E = np.concatenate(basis.energies).astype(complex)
    psi = np.zeros(coupling.size, complex)
    n0, l0 = initial
    psi[coupling.offsets[l0] + basis.bound_index[(n0, l0)]] = 1.0
    steps = max(int(math.ceil(pulse.tau / config.dt - 1e-9)), 1)
    dt = pulse.tau / steps
    t0 = pulse.t_i
    history = [(t0, 1.0)]

    if config.continuum_mode == "full" and basis.hermitian:
        def H(t, v):
            return E * v + f(t) * coupling.apply(v)

        # RK4 for the first step
        k1 = -1j * H(t0, psi)
        k2 = -1j * H(t0 + dt / 2, psi + dt / 2 * k1)
        k3 = -1j * H(t0 + dt / 2, psi + dt / 2 * k2)
        k4 = -1j * H(t0 + dt, psi + dt * k3)
        prev, cur = psi, psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        work = np.empty_like(psi)
        for j in range(1, steps):
            t = t0 + j * dt
            coupling.apply(cur, work)
            new = prev - 2j * dt * (E * cur + f(t) * work)
            prev, cur = cur, new
            if j % record_every == 0 or j == steps - 1:
                nrm = float(np.vdot(cur, cur).real)
                history.append((t + dt, nrm))
                if abs(nrm - 1) > 1e-3:
                    raise InstabilityError(f"norm drifted to {nrm:.6f} at t={t:.2f}; reduce dt")
        psi = cur
    else:
        half = np.exp(-0.5j * E * dt)
        for j in range(steps):
            tm = t0 + (j + 0.5) * dt
            psi = half * psi
            fm = f(tm)
            if fm != 0.0:
                psi = _taylor_exp(coupling, psi, -1j * dt * fm)
            psi = half * psi
            if (j + 1) % record_every == 0 or j == steps - 1:
                history.append((t0 + (j + 1) * dt, float(np.vdot(psi, psi).real)))
    return TdseResult(psi, coupling.offsets, dict(basis.bound_index), np.array(history),
                      config, config.n_report_max)


def run(config: TdseConfig, pulse: PulseParams, basis: SpectralBasis | None = None) -> TdseResult:
    """Build (or reuse) the basis, apply the continuum mode and propagate."""
    basis = basis or build_basis(config)
    basis = modify_continuum(basis, config.continuum_mode, config.gamma)
    return propagate(basis, pulse, config)


_WORKER_BASIS: SpectralBasis | None = None


def _init_worker(basis: SpectralBasis):
    global _WORKER_BASIS
    _WORKER_BASIS = basis


def _propagate_cell(args) -> np.ndarray | None:
    pulse, config = args
    try:
        return propagate(_WORKER_BASIS, pulse, config).populations()
    except (InstabilityError, FloatingPointError) as exc:
        log.warning("TDSE cell cep=%.4f failed: %s", pulse.cep, exc)
        return None


def cep_scan_tdse(config: TdseConfig, pulse: PulseParams, ceps: Sequence[float],
                  basis: SpectralBasis | None = None, workers: int = 1) -> PopulationGrid:
    """TDSE populations over a CEP list, as a PopulationGrid tagged source='tdse'.

    Failed propagations leave NaN cells.
    """
    basis = modify_continuum(basis or build_basis(config), config.continuum_mode, config.gamma)
    ns = list(range(1, config.n_report_max + 1))
    ells = list(range(min(config.ell_max + 1, config.n_report_max)))
    values = np.full((len(ceps), len(ns), len(ells)), np.nan)
    jobs = [(pulse.with_cep(float(c)), config) for c in ceps]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(basis,)) as ex:
            results = list(ex.map(_propagate_cell, jobs))
    else:
        _init_worker(basis)
        results = [_propagate_cell(j) for j in jobs]
    for i, P in enumerate(results):
        if P is None:
            continue
        for j, n in enumerate(ns):
            for k, ell in enumerate(ells):
                values[i, j, k] = 0.0 if ell >= n else P[n, ell]
    meta = {"pulse": {"A0": pulse.A0, "omega": pulse.omega, "tau": pulse.tau, "cycles": pulse.cycles},
            "tdse": asdict(config), "basis_digest": basis.digest()}
    return PopulationGrid(np.asarray(ceps, float), ns, ells, values, "tdse", True, "tdse", False, meta)


def checkpoint(basis: SpectralBasis, config: TdseConfig) -> dict:
    """JSON-serialisable reproducibility record."""
    return {"basis_digest": basis.digest(), "config": asdict(config), "sizes": basis.sizes}


def save_basis(basis: SpectralBasis, path) -> None:
    """Store energies, dipole blocks and the bound-state map in an .npz file."""
    arrays = {f"E{l}": np.real(e) for l, e in enumerate(basis.real_energies())}
    arrays.update({f"D{l}": D for l, D in enumerate(basis.dipole)})
    np.savez(path, config=json.dumps(asdict(basis.config), sort_keys=True),
             digest=basis.digest(), **arrays)


def load_basis(path, config: TdseConfig | None = None) -> SpectralBasis:
    """Read a basis written by save_basis; with ``config`` its radial settings must match."""
    with np.load(path) as f:
        stored = TdseConfig(**json.loads(str(f["config"])))
        if config is not None and config.basis_key() != stored.basis_key():
            raise ValueError("cached basis was built with different radial settings")
        L = stored.ell_max
        energies = [f[f"E{l}"] for l in range(L + 1)]
        dipole = [f[f"D{l}"] for l in range(L)]
        digest = str(f["digest"])
    config = config or stored
    basis = SpectralBasis(config, energies, dipole, _bound_index(energies, config.n_report_max))
    if basis.digest() != digest:
        raise ValueError("basis file digest mismatch")
    return basis
