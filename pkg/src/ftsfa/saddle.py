"""
Complex interaction times of the frustrated-tunneling saddle equation

    A(t_s) = s_real sqrt(2Z/sqrt(r_s²) - Z²/n² - ℓ(ℓ+1)/ΔG_s²)
             + s_imag i sqrt(2 Ip + ℓ(ℓ+1)/ΔG_s²),

with ΔG_s = ΔG(t_f, t_s) and r_s the stationary trajectory at t_f (which
depends on t_s through p_z and therefore on the sign s_pz).

Roots are harvested with a vectorised Newton iteration on the squared form

    (A - s_imag i sqrt(...))² - (recapture radicand) = 0,

which is free of the recapture square-root branch cut; the recapture sign of
each root is read off afterwards and the root is re-verified on the signed
equation above.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .classifier import DEFAULT_THRESHOLDS, FilterThresholds, label_roots, with_filter
from .problem import ALL_BRANCHES, BranchSigns, FtProblem, SaddleRoot, SingularityError
from .pulse import _check_domain, electric_field, excursion, field_peaks, vector_potential
from .trajectory import TrajectoryContext, action, momentum_from_saddle

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
VERIFY_TOL = 1e-10
DEDUP_TOL = 1e-8
FD_STEP = 1e-7
_SINGULAR = 1e-12


class NonConvergence(RuntimeError):
    pass


def _terms(problem: FtProblem, t, s_imag: int, s_pz: int):
    """Left-hand side A - s_imag i sqrt(tun) and recapture radicand at t (no domain check)."""
    p = problem.pulse
    A = vector_potential(p, t)
    dG = excursion(p, p.t_f, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        pperp2 = problem.ll / dG**2
        tun = np.sqrt(2 * problem.Ip + pperp2)
        p_z = -A + s_pz * 1j * tun
        span = p.t_f - np.asarray(t)
        r_z = p_z * span + dG
        r2 = pperp2 * span**2 + r_z**2
        rec = 2 * problem.Z / np.sqrt(r2) - problem.Z**2 / problem.n**2 - pperp2
    bad = (np.abs(dG) < _SINGULAR) | (np.abs(r2) < _SINGULAR)
    return A - s_imag * 1j * tun, rec, bad


def residual(problem: FtProblem, branch: BranchSigns, t_s):
    """Signed saddle residual F(t_s); zero at a root."""
    _check_domain(problem.pulse, t_s)
    lhs, rec, bad = _terms(problem, t_s, branch.s_imag, branch.s_pz)
    if np.any(bad):
        raise SingularityError("ΔG(t_f, t_s) or r_s(t_f)² vanishes")
    return lhs - branch.s_real * np.sqrt(rec)


def squared_residual(problem: FtProblem, s_imag: int, s_pz: int, t_s):
    """Branch-free form (A - s_imag i sqrt(tun))² - rec; NaN where singular."""
    lhs, rec, bad = _terms(problem, t_s, s_imag, s_pz)
    out = lhs**2 - rec
    return np.where(bad, np.nan, out)


def recapture_sign(problem: FtProblem, s_imag: int, s_pz: int, t_s: complex) -> int:
    lhs, rec, _ = _terms(problem, t_s, s_imag, s_pz)
    root = np.sqrt(rec)
    if abs(root) == 0:
        return 1
    return 1 if (lhs / root).real >= 0 else -1


def _newton(fun, seeds, problem: FtProblem, tol: float, max_iter: int, h: float = FD_STEP):
    """Vectorised Newton iteration with central-difference derivative.

    Returns (t, converged, iterations, |f|). Iterates that leave the strip
    t_i < Re t < t_f, |Im t| < tau, produce non-finite values or hit a vanishing
    derivative are dropped.
    """
    p = problem.pulse
    t = np.array(seeds, dtype=complex).ravel()
    n = t.size
    active = np.ones(n, bool)
    converged = np.zeros(n, bool)
    iters = np.zeros(n, int)
    fabs = np.full(n, np.inf)

    def inside(z):
        return (z.real > p.t_i) & (z.real < p.t_f) & (np.abs(z.imag) < p.tau)

    active &= inside(t)
    for k in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        z = t[idx]
        f = fun(z)
        fa = np.abs(f)
        fabs[idx] = fa
        done = fa < tol
        converged[idx[done]] = True
        bad = ~np.isfinite(fa)
        keep = ~(done | bad)
        if k == max_iter:
            break
        idx, z, f = idx[keep], z[keep], f[keep]
        lo = np.clip(z - h, p.t_i + h, None)
        hi = np.clip(z + h, None, p.t_f - h)
        zl = lo.real + 1j * z.imag
        zh = hi.real + 1j * z.imag
        d = (fun(zh) - fun(zl)) / (zh - zl)
        ok = np.isfinite(d) & (np.abs(d) > 1e-300)
        step = np.where(ok, f / np.where(ok, d, 1.0), 0)
        z_new = z - step
        # stagnation at round-off level counts as converged when |f| is tiny
        stagnant = ok & (np.abs(step) < 1e-15 * (1 + np.abs(z))) & (np.abs(f) < 100 * tol)
        converged[idx[stagnant]] = True
        t[idx] = np.where(ok, z_new, z)
        iters[idx] += 1
        still = ok & ~stagnant & inside(z_new)
        active[:] = False
        active[idx[still]] = True
    return t, converged, iters, fabs


def _build_root(problem: FtProblem, t_s: complex, branch: BranchSigns, iterations: int,
                thresholds: FilterThresholds) -> SaddleRoot:
    p_perp_sq, p_z = momentum_from_saddle(problem, t_s, branch)
    ctx = TrajectoryContext.from_problem(problem, t_s, branch)
    res = abs(complex(residual(problem, branch, t_s)))
    root = SaddleRoot(problem=problem, t_s=complex(t_s), branch=branch, residual_norm=res,
                      iterations=int(iterations), p_perp_sq=complex(p_perp_sq),
                      p_z=complex(p_z), action=complex(action(ctx)))
    return with_filter(root, thresholds)


def newton_solve(problem: FtProblem, branch: BranchSigns, seed: complex,
                 tol: float = NEWTON_TOL, max_iter: int = 100,
                 thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> SaddleRoot:
    """Newton iteration on the signed residual from ``seed``.

    Raises NonConvergence if the iteration fails or the result does not
    re-verify below VERIFY_TOL.
    """
    _check_domain(problem.pulse, seed)

    def fun(z):
        lhs, rec, bad = _terms(problem, z, branch.s_imag, branch.s_pz)
        return np.where(bad, np.nan, lhs - branch.s_real * np.sqrt(rec))

    t, conv, its, _ = _newton(fun, [seed], problem, tol, max_iter)
    if not conv[0]:
        raise NonConvergence(f"Newton did not converge from seed {seed}")
    root = _build_root(problem, t[0], branch, its[0], thresholds)
    if not root.residual_norm < VERIFY_TOL:
        raise NonConvergence(f"root failed re-verification: |F| = {root.residual_norm:.3g}")
    return root


def peak_seeds(problem: FtProblem) -> list[complex]:
    """First-order estimates of t_s around every field peak."""
    p = problem.pulse
    seeds = []
    for tk in field_peaks(p):
        dG0 = float(np.real(excursion(p, p.t_f, tk)))
        if abs(dG0) < _SINGULAR:
            continue
        r0 = abs(dG0)
        slope = abs(float(np.real(electric_field(p, tk))))  # ω A_eff
        rec = np.sqrt(complex(2 * problem.Z / r0 - problem.Z**2 / problem.n**2 - problem.ll / dG0**2))
        tun = np.sqrt(2 * problem.Ip + problem.ll / dG0**2)
        for a in (1, -1):
            for b in (1, -1):
                seeds.append(tk + (a * rec + b * 1j * tun) / slope)
    return seeds


def grid_seeds(problem: FtProblem, step_cycles: float = 1 / 40,
               im_range: tuple[float, float] = (0.01, 0.35)) -> np.ndarray:
    p = problem.pulse
    T = p.period
    h = step_cycles * T
    re = np.arange(p.t_i + h, p.t_f - 0.5 * h, h)
    im = np.arange(im_range[0] * T, im_range[1] * T + 1e-12, h)
    return (re[:, None] + 1j * im[None, :]).ravel()


def seed_candidates(problem: FtProblem, step_cycles: float = 1 / 40) -> list[complex]:
    """Peak-based first-order seeds followed by a rectangular grid in the upper half plane."""
    seeds = peak_seeds(problem) + list(grid_seeds(problem, step_cycles))
    p = problem.pulse
    return [s for s in seeds if p.t_i < s.real < p.t_f]


def _dedup(points: Sequence[complex], tol: float) -> list[int]:
    kept: list[int] = []
    for i in np.argsort(np.real(points), kind="stable"):
        if all(abs(points[i] - points[j]) >= tol for j in kept):
            kept.append(int(i))
    return sorted(kept, key=lambda i: (points[i].real, points[i].imag))


def find_all(problem: FtProblem, seeds: Sequence[complex] | None = None,
             tol: float = NEWTON_TOL, max_iter: int = 100,
             thresholds: FilterThresholds = DEFAULT_THRESHOLDS,
             label: bool = True) -> list[SaddleRoot]:
    """All distinct verified roots reachable from the seed set, over every branch."""
    if seeds is None:
        seeds = seed_candidates(problem)
    cands: list[tuple[complex, BranchSigns, int]] = []
    for s_imag in (1, -1):
        for s_pz in (1, -1):
            def fun(z, s_imag=s_imag, s_pz=s_pz):
                return squared_residual(problem, s_imag, s_pz, z)

            t, conv, its, _ = _newton(fun, seeds, problem, tol * 1e-2, max_iter)
            for z, k in zip(t[conv], its[conv]):
                s_real = recapture_sign(problem, s_imag, s_pz, z)
                cands.append((complex(z), BranchSigns(s_real, s_imag, s_pz), int(k)))
    roots = []
    for i in _dedup([c[0] for c in cands], DEDUP_TOL):
        z, br, k = cands[i]
        try:
            # polish on the signed equation and re-verify independently
            r = newton_solve(problem, br, z, tol, 20, thresholds)
        except (NonConvergence, SingularityError):
            log.debug("dropping unverified candidate %s %s", z, br)
            continue
        roots.append(replace(r, iterations=r.iterations + k))
    keep = _dedup([r.t_s for r in roots], DEDUP_TOL)
    roots = [roots[i] for i in keep]
    return label_roots(roots, problem.pulse, thresholds=thresholds) if label else roots


def critical_ell(n: float, Z: float, dG0: float) -> float:
    """Angular momentum above which classical recapture into level n is impossible."""
    if dG0 <= 0:
        raise ValueError("dG0 must be positive")
    inner = 0.25 + dG0**2 * (2 * Z / dG0 - Z**2 / n**2)
    if inner < 0:
        raise ValueError("negative radicand in critical_ell")
    return -0.5 + np.sqrt(inner)


# --------------------------------------------------------------------------
# continuation


@dataclass
class FamilyCurve:
    """A root family traced through a parameter sweep."""

    parameter: str
    label: str
    values: list[float] = field(default_factory=list)
    roots: list[SaddleRoot] = field(default_factory=list)
    marks: list[int] = field(default_factory=list)
    broken_at: float | None = None
    branch_flips: list[float] = field(default_factory=list)

    @property
    def t_s(self) -> np.ndarray:
        return np.array([r.t_s for r in self.roots])

    @property
    def broken(self) -> bool:
        return self.broken_at is not None


def _with_parameter(problem: FtProblem, parameter: str, value: float) -> FtProblem:
    if parameter == "ell":
        return replace(problem, ell=value)
    if parameter == "cep":
        return replace(problem, pulse=problem.pulse.with_cep(value))
    raise ValueError(f"unknown continuation parameter {parameter!r}")


def _solve_near(problem: FtProblem, branch: BranchSigns, guess: complex, max_jump: float,
                thresholds: FilterThresholds) -> SaddleRoot | None:
    def fun(z):
        return squared_residual(problem, branch.s_imag, branch.s_pz, z)

    try:
        t, conv, its, _ = _newton(fun, [guess], problem, NEWTON_TOL * 1e-2, 50)
    except Exception:
        return None
    if not conv[0] or abs(t[0] - guess) > max_jump:
        return None
    z = complex(t[0])
    s_real = recapture_sign(problem, branch.s_imag, branch.s_pz, z)
    br = BranchSigns(s_real, branch.s_imag, branch.s_pz)
    try:
        return newton_solve(problem, br, z, NEWTON_TOL, 20, thresholds)
    except (NonConvergence, SingularityError):
        return None


def continue_family(problem: FtProblem, parameter: str, start: float, stop: float, step: float,
                    start_roots: Sequence[SaddleRoot], marks: Sequence[float] | None = None,
                    max_jump_cycles: float = 0.02, max_halvings: int = 6,
                    thresholds: FilterThresholds = DEFAULT_THRESHOLDS) -> list[FamilyCurve]:
    """Trace each start root while ``parameter`` ('ell' or 'cep') runs from start to stop.

    Each sample is seeded by linear extrapolation of the previous two. A step
    that fails to converge, or lands farther than ``max_jump_cycles`` optical
    cycles from the prediction, is halved up to ``max_halvings`` times before
    the curve is declared broken. Changes of the recapture sign are recorded
    in ``branch_flips``. ``marks`` defaults to integer values for 'ell'.
    """
    n_steps = 0 if stop == start else max(int(round(abs(stop - start) / step)), 1)
    grid = start + (stop - start) * np.arange(n_steps + 1) / max(n_steps, 1)
    if marks is None:
        marks = [v for v in grid if parameter == "ell" and abs(v - round(v)) < 1e-9]
    max_jump = max_jump_cycles * problem.pulse.period
    curves = []
    for r0 in start_roots:
        curve = FamilyCurve(parameter, r0.class_label)
        curve.values.append(float(grid[0]))
        curve.roots.append(r0)
        prev_v, prev_t = [float(grid[0])], [r0.t_s]
        branch = r0.branch
        for v_target in grid[1:]:
            v_cur = prev_v[-1]
            ok = True
            while v_cur < v_target - 1e-12 if stop > start else v_cur > v_target + 1e-12:
                h = v_target - v_cur
                for _ in range(max_halvings + 1):
                    v_try = v_cur + h
                    if len(prev_t) >= 2 and prev_v[-1] != prev_v[-2]:
                        slope = (prev_t[-1] - prev_t[-2]) / (prev_v[-1] - prev_v[-2])
                        guess = prev_t[-1] + slope * (v_try - prev_v[-1])
                    else:
                        guess = prev_t[-1]
                    pr = _with_parameter(problem, parameter, float(v_try))
                    root = _solve_near(pr, branch, guess, max_jump, thresholds)
                    if root is not None:
                        break
                    h *= 0.5
                if root is None:
                    ok = False
                    break
                if root.branch.s_real != branch.s_real:
                    curve.branch_flips.append(float(v_try))
                branch = root.branch
                v_cur = float(v_try)
                prev_v.append(v_cur)
                prev_t.append(root.t_s)
            if not ok:
                curve.broken_at = float(v_target)
                break
            curve.values.append(float(v_target))
            curve.roots.append(replace(root, class_label=r0.class_label))
        curve.marks = [i for i, v in enumerate(curve.values)
                       if any(abs(v - m) < 1e-9 for m in marks)]
        curves.append(curve)
    return curves


def closest_approach(a: FamilyCurve, b: FamilyCurve) -> tuple[float, float]:
    """Parameter value and distance of the closest approach of two curves."""
    n = min(len(a.roots), len(b.roots))
    d = np.abs(a.t_s[:n] - b.t_s[:n])
    i = int(np.argmin(d))
    return a.values[i], float(d[i])


def avoided_collision(a: FamilyCurve, b: FamilyCurve, margin: float = 0.05) -> float | None:
    """Parameter value of an avoided collision between two curves, or None.

    An avoided collision is an interior minimum of |t_a - t_b| (at least
    ``margin`` relatively below both ends) across which the separation turns
    from mainly real to mainly imaginary.
    """
    n = min(len(a.roots), len(b.roots))
    if n < 3:
        return None
    diff = a.t_s[:n] - b.t_s[:n]
    d = np.abs(diff)
    i = int(np.argmin(d))
    if i == 0 or i == n - 1:
        return None
    if d[i] > (1 - margin) * min(d[0], d[-1]):
        return None
    before = abs(diff[0].real) > abs(diff[0].imag)
    after = abs(diff[-1].imag) > abs(diff[-1].real)
    return a.values[i] if (before and after) else None
