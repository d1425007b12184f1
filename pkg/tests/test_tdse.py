import numpy as np
import pytest
from scipy.integrate import quad

from ftsfa.pulse import OMEGA_NM, PulseParams, electric_field_real
from ftsfa.tdse import (InstabilityError, InsufficientGridError, TdseConfig, build_basis,
                        cep_scan_tdse, checkpoint, coupling_coefficient, load_basis,
                        modify_continuum, propagate, radial_hamiltonian, run, save_basis)

SMALL = TdseConfig(r_max=80.0, n_grid=3200, ell_max=4, e_cut=10.0, dt=0.02, n_report_max=4)
OMEGA = OMEGA_NM / 800


@pytest.fixture(scope="module")
def basis():
    return build_basis(SMALL, keep_vectors=True)


@pytest.fixture(scope="module")
def weak():
    return PulseParams.from_intensity(1e10, 800, 2)


@pytest.fixture(scope="module")
def strong():
    return PulseParams.from_intensity(1.5e14, 800, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        TdseConfig(gauge="mixed")
    with pytest.raises(ValueError):
        TdseConfig(continuum_mode="absorbing")
    with pytest.raises(ValueError):
        TdseConfig(dt=0.1, e_cut=10.0)
    with pytest.raises(ValueError):
        TdseConfig(continuum_mode="damped", gamma=-1.0)
    assert TdseConfig().h == pytest.approx(400 / 16001)


def test_coupling_coefficient():
    assert coupling_coefficient(0) == pytest.approx(1 / np.sqrt(3))
    assert coupling_coefficient(1) == pytest.approx(2 / np.sqrt(15))


def test_radial_hamiltonian_grid():
    d, e, r = radial_hamiltonian(SMALL, 2)
    h = SMALL.h
    assert len(d) == SMALL.n_grid and len(e) == SMALL.n_grid - 1
    assert r[0] == pytest.approx(h) and r[-1] == pytest.approx(SMALL.r_max - h)
    assert np.allclose(e, -0.5 / h**2)
    assert d[0] == pytest.approx(1 / h**2 + 3 / r[0] ** 2 - 1 / r[0])


def test_orthonormal_vectors(basis):
    h = SMALL.h
    for v in basis.vectors:
        assert np.allclose(h * v.T @ v, np.eye(v.shape[1]), atol=1e-10)


def test_bound_energies(basis):
    for (n, ell), k in basis.bound_index.items():
        assert basis.energies[ell][k] == pytest.approx(-0.5 / n**2, abs=1e-4)
    assert set(basis.bound_index) == {(n, l) for n in range(1, 5) for l in range(n)}
    for e in basis.energies:
        assert np.all(np.diff(e) > 0) and e[-1] < SMALL.e_cut


def test_dipole_blocks(basis):
    # <2p|r|1s> radial integral = 128√6/243
    radial = basis.dipole[0][basis.bound_index[(2, 1)], basis.bound_index[(1, 0)]] / coupling_coefficient(0)
    assert abs(radial) == pytest.approx(128 * np.sqrt(6) / 243, abs=1e-3)
    for l, D in enumerate(basis.dipole):
        assert D.shape == (basis.sizes[l + 1], basis.sizes[l])
    # against the grid vectors directly
    _, _, r = radial_hamiltonian(SMALL, 0)
    h = SMALL.h
    direct = coupling_coefficient(1) * h * basis.vectors[2][:, 0] @ (r * basis.vectors[1][:, 1])
    assert basis.dipole[1][0, 1] == pytest.approx(direct, rel=1e-10)


def test_coarse_grid_rejected():
    with pytest.raises(InsufficientGridError):
        build_basis(TdseConfig(r_max=80.0, n_grid=400, ell_max=1, n_report_max=4))


def test_continuum_modes(basis):
    bound = modify_continuum(basis, "bound_only")
    assert all(np.all(e < 0) for e in bound.energies)
    assert bound.hermitian and bound.bound_index == basis.bound_index
    damped = modify_continuum(basis, "damped", 0.5)
    assert not damped.hermitian
    for e, e0 in zip(damped.energies, basis.energies):
        assert np.allclose(e.imag, np.where(e0 > 0, -0.5, 0.0))
        assert np.array_equal(e.real, e0)
    assert modify_continuum(basis, "full") is basis
    with pytest.raises(ValueError):
        modify_continuum(basis, "absorbing")


def test_zero_field_leaves_ground_state(basis):
    pulse = PulseParams.from_cycles(0.0, OMEGA, 2)
    res = propagate(basis, pulse, SMALL)
    a = res.amplitudes[0]
    # the RK4 start excites the parasitic leapfrog mode at the (E dt)³ level
    assert abs(a) == pytest.approx(1, abs=2e-7)
    # leapfrog dispersion shifts the phase by ~E³dt²τ/6
    assert abs(np.angle(a * np.exp(1j * basis.energies[0][0] * pulse.tau))) < 5e-3
    P = res.populations()
    assert P[1, 0] == pytest.approx(1, abs=4e-7)
    assert np.nansum(P) == pytest.approx(P[1, 0], abs=1e-20)
    assert np.isnan(P[1, 1]) and np.isnan(P[0, 0])


def test_first_order_perturbation_theory(basis, weak):
    res = propagate(basis, weak, SMALL)
    E = basis.energies
    for n in (2, 3):
        w = E[1][basis.bound_index[(n, 1)]] - E[0][0]
        d = basis.dipole[0][basis.bound_index[(n, 1)], 0]
        re = quad(lambda t: electric_field_real(weak, t) * np.cos(w * t), weak.t_i, weak.t_f, limit=200)[0]
        im = quad(lambda t: electric_field_real(weak, t) * np.sin(w * t), weak.t_i, weak.t_f, limit=200)[0]
        expected = d**2 * (re**2 + im**2)
        assert res.populations()[n, 1] == pytest.approx(expected, rel=0.02)


def test_gauges_agree_in_weak_field(basis, weak):
    a = propagate(basis, weak, SMALL).populations()
    b = propagate(basis, weak, TdseConfig(**{**SMALL.__dict__, "gauge": "velocity"})).populations()
    for n in (2, 3, 4):
        assert b[n, 1] == pytest.approx(a[n, 1], rel=0.05)


def test_norm_and_amplitudes(basis, strong):
    res = propagate(basis, strong, SMALL)
    assert abs(res.norm - 1) < 1e-6
    assert res.norm == pytest.approx(np.sum(np.abs(res.amplitudes) ** 2), rel=1e-14)
    # leapfrog conserves Re<ψ_n|ψ_n+1>; |ψ_n|² carries an O(dt²<H(t)²>) offset while the field is on
    assert np.all(np.abs(res.norm_history[:, 1] - 1) < 1e-4)
    assert np.nansum(res.populations()) <= res.norm + 1e-12


def test_midpoint_agrees_with_differencing(basis, strong):
    sod = propagate(basis, strong, SMALL).populations()
    # damping of zero keeps the Hamiltonian but switches to the midpoint scheme
    mid = propagate(modify_continuum(basis, "damped", 0.0), strong, SMALL).populations()
    assert np.nanmax(np.abs(sod - mid)) < 1e-5


def test_second_order_in_dt(basis, strong):
    P = [propagate(basis, strong, TdseConfig(**{**SMALL.__dict__, "dt": dt})).population_n()[1:]
         for dt in (0.04, 0.02, 0.01)]
    e1, e2 = np.abs(P[0] - P[2]).max(), np.abs(P[1] - P[2]).max()
    # Richardson: e(dt)/e(dt/2) -> (4 - 1)/(1 - 1/4) ... ratio of differences to the dt/4 run is 5
    assert 3.5 < e1 / e2 < 6.5


def test_instability_aborts(basis, strong):
    # a step far beyond the stability limit of the differencing scheme
    loose = TdseConfig(**{**SMALL.__dict__, "dt": 0.5, "e_cut": 1.0})
    with pytest.raises(InstabilityError):
        propagate(basis, strong, loose)


def test_bound_only_conserves_norm(basis, strong):
    res = run(TdseConfig(**{**SMALL.__dict__, "continuum_mode": "bound_only"}), strong, basis)
    assert abs(res.norm - 1) < 1e-8


def test_damped_loses_norm(basis, strong):
    res = run(TdseConfig(**{**SMALL.__dict__, "continuum_mode": "damped", "gamma": 0.5}), strong, basis)
    assert res.norm < 1 - 1e-4
    assert np.all(np.diff(res.norm_history[:, 1]) <= 1e-12)


def test_cep_scan_is_pi_periodic(basis, strong):
    g = cep_scan_tdse(SMALL, strong, [0.3, 0.3 + np.pi], basis=basis)
    assert g.source == "tdse" and g.ns == [1, 2, 3, 4] and g.ells == [0, 1, 2, 3]
    assert np.allclose(g.values[0], g.values[1], atol=1e-8)
    assert g.meta["basis_digest"] == basis.digest()
    assert g.values[0, 0, 1] == 0.0


def test_save_and_load(basis, tmp_path):
    path = tmp_path / "basis.npz"
    save_basis(basis, path)
    loaded = load_basis(path, SMALL)
    assert loaded.digest() == basis.digest()
    assert loaded.bound_index == basis.bound_index
    for a, b in zip(loaded.dipole, basis.dipole):
        assert np.array_equal(a, b)
    fewer = load_basis(path, TdseConfig(**{**SMALL.__dict__, "n_report_max": 2}))
    assert set(fewer.bound_index) == {(1, 0), (2, 0), (2, 1)}
    with pytest.raises(ValueError):
        load_basis(path, TdseConfig(**{**SMALL.__dict__, "r_max": 90.0}))
    assert checkpoint(basis, SMALL)["basis_digest"] == basis.digest()


@pytest.mark.slow
def test_parities_comparable_for_two_cycles(tdse_scans):
    dist = tdse_scans(2).ell_distribution(5)
    even, odd = dist[0::2].sum(), dist[1::2].sum()
    assert 1 / 3 < even / odd < 3
