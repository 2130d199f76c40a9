import numpy as np
import pytest
from scipy import integrate

from cascade_sim.params import PhononParams, HBAR, KB
from cascade_sim.phonon import (spectral_density, displacement_factor, phi,
                                tabulate_kernel, green_functions,
                                cavity_feeding_rate)


P0 = PhononParams(temperature=0.0)
P42 = PhononParams(temperature=4.2)


def test_spectral_density_zero_and_off():
    assert spectral_density(0.0, P0) == 0.0
    p_off = PhononParams(alpha_p=0.0, temperature=0.0)
    w = np.linspace(0, 10, 50)
    np.testing.assert_array_equal(spectral_density(w, p_off), np.zeros_like(w))


def test_spectral_density_at_cutoff():
    wb = P0.omega_b
    assert wb == pytest.approx(1000.0 / HBAR)
    expected = 0.03 * wb**3 * np.exp(-0.5)
    assert spectral_density(wb, P0) == pytest.approx(expected, rel=1e-12)
    assert spectral_density(wb, P0) == pytest.approx(0.063815, abs=5e-5)


def test_displacement_factor_closed_form_t0():
    # at T=0 the weight integral is alpha_p * w_b^2 exactly
    b = displacement_factor(P0)
    assert b == pytest.approx(np.exp(-0.03 * P0.omega_b**2 / 2), abs=1e-8)
    assert b == pytest.approx(0.965970, abs=1e-6)


def test_displacement_factor_unity_without_coupling():
    assert displacement_factor(PhononParams(alpha_p=0.0, temperature=0.0)) == 1.0
    assert displacement_factor(PhononParams(include_phonons=False)) == 1.0


def test_displacement_factor_monotone_in_temperature_and_coupling():
    b0 = displacement_factor(P0)
    b42 = displacement_factor(P42)
    b10 = displacement_factor(PhononParams(temperature=10.0))
    assert b42 < b0
    assert b10 < b42
    b_stiff = displacement_factor(PhononParams(alpha_p=0.06, temperature=4.2))
    assert b_stiff < b42


def test_phi_zero_closed_form():
    v = phi(0.0, P0)
    assert v.real == pytest.approx(0.03 * P0.omega_b**2, rel=1e-8)
    assert v.real == pytest.approx(0.0692449, abs=1e-6)
    assert v.imag == pytest.approx(0.0, abs=1e-12)


def test_phi_imag_vanishes_at_zero_any_temperature():
    assert phi(0.0, P42).imag == pytest.approx(0.0, abs=1e-12)


def test_phi_decays():
    assert abs(phi(8.0, P0)) < 1e-2 * abs(phi(0.0, P0))


def test_kernel_matches_quadrature():
    kern = tabulate_kernel(P42)
    rng = np.random.default_rng(3)
    for tau in rng.uniform(0.0, 6.0, size=5):
        direct = phi(float(tau), P42)
        interp = kern.phi_interp(tau)
        assert abs(direct - interp) < 1e-8


def test_kernel_hermitian_symmetry():
    kern = tabulate_kernel(P42)
    taus = np.array([0.3, 1.1, 2.7])
    np.testing.assert_allclose(kern.phi_interp(-taus),
                               np.conj(kern.phi_interp(taus)), atol=1e-12)


def test_kernel_displacement_consistency():
    kern = tabulate_kernel(P0)
    assert kern.b == pytest.approx(np.exp(-0.5 * kern.phi[0].real), abs=1e-10)


def test_green_functions_zero_and_taylor():
    g_g, g_u = green_functions(np.array([0.0 + 0j]), 0.9)
    assert g_g[0] == 0.0 and g_u[0] == 0.0
    # small-argument expansion: G_g ~ B^2 phi^2/2, G_u ~ B^2 phi
    phis = np.array([1e-4 + 2e-5j, -5e-4 - 1e-4j])
    g_g, g_u = green_functions(phis, 0.96)
    np.testing.assert_allclose(g_g, 0.96**2 * phis**2 / 2, rtol=1e-2)
    np.testing.assert_allclose(g_u, 0.96**2 * phis, rtol=1e-2)


def test_green_functions_value():
    b = displacement_factor(P0)
    g_g, g_u = green_functions(np.array([0.0692449 + 0j]), b)
    assert g_u[0].real == pytest.approx(b * b * np.sinh(0.0692449), rel=1e-12)
    assert g_u[0].real == pytest.approx(0.064665, abs=5e-5)


def test_feeding_rate_trivial_zero():
    kern = tabulate_kernel(P42)
    assert cavity_feeding_rate(-1.0, 0.0, P42, kern) == 0.0


def test_feeding_rate_vanishes_at_large_detuning():
    kern = tabulate_kernel(P42)
    near = cavity_feeding_rate(-1.5, 20.8, P42, kern)
    far = cavity_feeding_rate(-60.0, 20.8, P42, kern)
    assert far < 1e-4 * near


def test_feeding_rate_t0_asymmetry():
    # with a cold bath, feeding needs phonon emission: transition above cavity
    kern = tabulate_kernel(P0)
    emit = cavity_feeding_rate(-2.0, 20.8, P0, kern)    # cavity below transition
    absorb = cavity_feeding_rate(+2.0, 20.8, P0, kern)  # cavity above transition
    assert emit > 0
    assert absorb < 0.02 * emit


def test_feeding_rate_quadrature_oracle():
    # golden-rule scale at T=0: Gamma ~ 2 B^2 g^2 * pi * J(|D|)/D^2 for D < 0
    kern = tabulate_kernel(P0)
    delta = -2.0
    g_ang = 20.8 / HBAR
    lead = 2 * kern.b**2 * g_ang**2 * np.pi * spectral_density(-delta, P0) / delta**2
    got = cavity_feeding_rate(delta, 20.8, P0, kern)
    # e^phi - 1 ~ phi to ~7%, so the leading-order oracle agrees to ~10%
    assert got == pytest.approx(lead, rel=0.1)


def test_feeding_rate_curve_shape():
    # single-signed, peaked at moderate negative detuning, decaying at large |D|
    kern = tabulate_kernel(P42)
    deltas = np.linspace(-8.0, 8.0, 33)
    rates = cavity_feeding_rate(deltas, 20.8, P42, kern)
    assert np.all(rates >= 0)
    peak = deltas[np.argmax(rates)]
    assert -4.0 < peak < -0.3
    assert rates[0] < np.max(rates) * 0.5
    # detailed balance at 4.2 K: absorption side much weaker
    assert rates[-1] < 0.2 * np.max(rates)


def test_feeding_rate_tail_flag():
    kern = tabulate_kernel(P42)
    _, flag = cavity_feeding_rate(-2.0, 20.8, P42, kern, return_tail_flag=True)
    assert flag is False


def test_one_sided_transform_against_direct_sum():
    kern = tabulate_kernel(P0)
    nu = 1.3
    direct = np.trapezoid(kern.g_u * np.exp(-1j * nu * kern.tau_grid), kern.tau_grid)
    assert kern.one_sided_transform("u", nu) == pytest.approx(direct, rel=1e-12)
