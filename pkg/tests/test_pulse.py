import numpy as np
import pytest
from scipy.integrate import quad

from ftsfa.pulse import (PulseDomainError, PulseParams, a0_from_intensity, electric_field,
                         electric_field_real, excursion, excursion_sq, field_derivative, field_peaks,
                         vector_potential, vector_potential_real)


def product_form(p, t):
    return p.A0 * np.cos(np.pi * t / p.tau) ** 2 * np.sin(p.omega * t + p.cep)


def contour_quad(f, a, b):
    """∫_a^b f along the straight segment a -> b."""
    d = b - a
    re = quad(lambda s: (f(a + s * d) * d).real, 0, 1, epsabs=0, epsrel=1e-13, limit=200)[0]
    im = quad(lambda s: (f(a + s * d) * d).imag, 0, 1, epsabs=0, epsrel=1e-13, limit=200)[0]
    return re + 1j * im


@pytest.fixture(params=[(2, 0.0), (3, 0.7), (4, -2.1)])
def pulse(request):
    cycles, cep = request.param
    return PulseParams.from_intensity(1.5e14, 800, cycles, cep)


def test_edges_vanish(pulse):
    assert vector_potential(pulse, pulse.t_i) == pytest.approx(0, abs=1e-15)
    assert vector_potential(pulse, pulse.t_f) == pytest.approx(0, abs=1e-15)


def test_zero_at_centre_for_sine_carrier(pulse2):
    assert abs(vector_potential(pulse2, 0.0)) == 0.0


def test_three_sinusoids_match_product(pulse, rng):
    T = pulse.period
    for _ in range(50):
        t = rng.uniform(pulse.t_i, pulse.t_f) + 1j * rng.uniform(-0.3, 0.3) * T
        ref = product_form(pulse, t)
        assert abs(vector_potential(pulse, t) - ref) <= 1e-12 * max(abs(ref), 1e-3)
    t = (0.3 + 0.1j) * T
    assert vector_potential(pulse, t) == pytest.approx(product_form(pulse, t), rel=1e-12)


def test_field_at_centre(pulse2):
    E0 = pulse2.A0 * pulse2.omega
    assert E0 == pytest.approx(0.0653, abs=2e-4)
    assert electric_field(pulse2, 0.0) == pytest.approx(-E0, rel=1e-12)


def test_field_is_minus_derivative(pulse, rng):
    h = 1e-5
    for t in rng.uniform(pulse.t_i + h, pulse.t_f - h, 40):
        fd = -(vector_potential(pulse, t + h) - vector_potential(pulse, t - h)) / (2 * h)
        assert abs(electric_field(pulse, t) - fd) < 1e-8
    for t in rng.uniform(pulse.t_i + h, pulse.t_f - h, 20):
        fd = (electric_field(pulse, t + h) - electric_field(pulse, t - h)) / (2 * h)
        assert abs(field_derivative(pulse, t) - fd) < 1e-8


def test_field_finite_at_edge(pulse):
    assert np.isfinite(electric_field(pulse, pulse.t_f))


def test_field_integrates_to_potential(pulse):
    for t in np.linspace(pulse.t_i, pulse.t_f, 7)[1:]:
        integral = quad(lambda s: electric_field(pulse, s).real, pulse.t_i, t, epsabs=1e-13, limit=200)[0]
        assert integral == pytest.approx(vector_potential(pulse, pulse.t_i) - vector_potential(pulse, t).real, abs=1e-10)


def test_excursion_against_contour_quadrature(pulse, rng):
    T = pulse.period
    for _ in range(10):
        a = rng.uniform(pulse.t_i, pulse.t_f) + 1j * rng.uniform(0, 0.3) * T
        b = rng.uniform(pulse.t_i, pulse.t_f) + 1j * rng.uniform(0, 0.3) * T
        ref = contour_quad(lambda s: vector_potential(pulse, s), a, b)
        assert abs(excursion(pulse, b, a) - ref) <= 1e-10 * abs(ref)


def test_excursion_sq_against_quadrature(pulse):
    ref = quad(lambda s: vector_potential(pulse, s).real ** 2, pulse.t_i, pulse.t_f,
               epsabs=0, epsrel=1e-13, limit=400)[0]
    assert excursion_sq(pulse, pulse.t_f, pulse.t_i).real == pytest.approx(ref, rel=1e-10)
    ref = contour_quad(lambda s: vector_potential(pulse, s) ** 2, 0.0, 0.1j)
    assert abs(excursion_sq(pulse, 0.1j, 0.0) - ref) <= 1e-10 * max(abs(ref), 1e-12)


def test_excursion_empty_interval_and_additivity(pulse, rng):
    T = pulse.period
    a, b, c = (rng.uniform(pulse.t_i, pulse.t_f) + 1j * rng.uniform(0, 0.2) * T for _ in range(3))
    assert excursion(pulse, a, a) == 0
    assert excursion_sq(pulse, a, a) == 0
    assert abs(excursion(pulse, a, b) + excursion(pulse, b, c) - excursion(pulse, a, c)) < 1e-12
    assert abs(excursion_sq(pulse, a, b) + excursion_sq(pulse, b, c) - excursion_sq(pulse, a, c)) < 1e-11


def test_excursion_constant(pulse2):
    dG0 = excursion(pulse2, pulse2.t_f, 0.0)
    assert dG0.real == pytest.approx(26.8, abs=0.1)
    # cos² envelope times cos carrier integrates to 4A0/(3ω) exactly for τ = 2T
    assert dG0.real == pytest.approx(4 * pulse2.A0 / (3 * pulse2.omega), rel=1e-12)


@pytest.mark.parametrize("fn", [vector_potential, electric_field,
                                lambda p, t: excursion(p, t, 0.0), lambda p, t: excursion_sq(p, t, 0.0)])
def test_cauchy_riemann(pulse, fn):
    h = 1e-6
    for t in (0.1 + 5j, -20.0 + 12j, 33.0 + 1j):
        d_re = (fn(pulse, t + h) - fn(pulse, t - h)) / (2 * h)
        d_im = (fn(pulse, t + 1j * h) - fn(pulse, t - 1j * h)) / (2j * h)
        assert abs(d_re - d_im) < 1e-8 * max(1.0, abs(d_re))


def test_domain_rejected(pulse2):
    with pytest.raises(PulseDomainError):
        vector_potential(pulse2, pulse2.t_f + 1.0)
    with pytest.raises(PulseDomainError):
        excursion(pulse2, pulse2.t_i - 1 + 1j, 0.0)
    assert vector_potential_real(pulse2, pulse2.t_f + 1.0) == 0.0
    assert electric_field_real(pulse2, pulse2.t_i - 1.0) == 0.0


def test_peaks_two_cycle(pulse2):
    peaks = field_peaks(pulse2)
    assert min(abs(t) for t in peaks) < 1e-9
    flipped = field_peaks(pulse2.with_cep(np.pi))
    assert np.allclose(peaks, flipped, atol=1e-9)
    t0 = min(peaks, key=abs)
    assert np.sign(electric_field(pulse2, t0).real) == -np.sign(electric_field(pulse2.with_cep(np.pi), t0).real)


def test_peaks_three_cycle_symmetric(pulse3):
    peaks = np.array(field_peaks(pulse3))
    assert np.allclose(np.sort(peaks), np.sort(-peaks), atol=1e-9)


def test_peaks_are_field_extrema(pulse):
    Emax = max(abs(electric_field_real(pulse, t)) for t in np.linspace(pulse.t_i, pulse.t_f, 4001))
    for t in field_peaks(pulse):
        assert abs(field_derivative(pulse, t)) < 1e-10
        assert abs(electric_field(pulse, t)) > 0.01 * Emax


def test_calibration():
    A0, gamma = a0_from_intensity(1.5e14, 800)
    assert A0 == pytest.approx(1.147, abs=1e-3)
    assert gamma == pytest.approx(0.87, abs=1e-2)
    assert a0_from_intensity(0.0, 800)[0] == 0.0


def test_invalid_parameters():
    with pytest.raises(ValueError):
        PulseParams(A0=1.0, omega=-0.05, tau=100.0)
