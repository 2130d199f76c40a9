import numpy as np
import pytest
from scipy import integrate

from cascade_sim.params import SimConfig, QDParams, CavityParams
from cascade_sim.analytic import (RatePair, purcell_rate, lorentzian_purcell,
                                  full_decay_rates, visibility_limit,
                                  purcell_weak_coupling)


def test_purcell_rate_value():
    assert purcell_rate(20.8, 103.4) == pytest.approx(16.7365, abs=2e-4)


def test_purcell_rate_scaling():
    assert purcell_rate(2 * 5.0, 103.4) == pytest.approx(4 * purcell_rate(5.0, 103.4))
    assert purcell_rate(0.0, 103.4) == 0.0


def test_purcell_rate_regime_warning():
    with pytest.warns(UserWarning, match="Purcell"):
        purcell_rate(120.0, 103.4)
    with pytest.raises(ValueError):
        purcell_rate(10.0, 0.0)


def test_lorentzian_reduces_to_resonant():
    assert lorentzian_purcell(20.8, 103.4, 0.0) == pytest.approx(
        purcell_rate(20.8, 103.4), rel=1e-12)


def test_lorentzian_half_width():
    g, k = 20.8, 103.4
    assert lorentzian_purcell(g, k, k / 2) == pytest.approx(
        0.5 * lorentzian_purcell(g, k, 0.0), rel=1e-12)


def test_lorentzian_value_at_mode_split():
    assert lorentzian_purcell(20.8, 103.4, 206.8) == pytest.approx(0.9845, abs=1e-4)


def test_lorentzian_sum_rule():
    # integral over detuning of the Lorentzian mask is 2 pi g^2
    g, k = 20.8, 103.4
    val, _ = integrate.quad(lambda d: lorentzian_purcell(g, k, d), -np.inf, np.inf)
    assert val == pytest.approx(2 * np.pi * g * g, rel=1e-8)


def test_full_decay_rates_bare_qd():
    cfg = SimConfig(cavity=CavityParams(g=1e-9, kappa=103.4))
    rates = full_decay_rates(cfg, rescaled=False)
    assert rates.gamma_x == pytest.approx(1.5, abs=1e-9)
    assert rates.gamma_xx == pytest.approx(2 * 1.38, abs=1e-9)


def test_full_decay_rates_h_channel_arithmetic():
    cfg = SimConfig()
    rates = full_decay_rates(cfg, rescaled=False, include_v_channel=False)
    assert rates.gamma_xx == pytest.approx(16.7365 + 1.38, abs=2e-4)


def test_full_decay_rates_x_lorentz_masked():
    cfg = SimConfig()
    rates = full_decay_rates(cfg, rescaled=False)
    leak = 20.8**2 * 103.4 / (2910.8**2 + 51.7**2)
    assert leak == pytest.approx(0.00528, abs=2e-5)
    assert rates.gamma_x == pytest.approx(1.5 + leak, rel=1e-6)


def test_visibility_limit_symmetric_cascade():
    v, i = visibility_limit(RatePair(gamma_x=3.0, gamma_xx=3.0))
    assert v == 0.5
    assert i == 0.75


def test_visibility_limit_fast_biexciton():
    v, _ = visibility_limit(RatePair(gamma_x=1e-9, gamma_xx=10.0))
    assert v == pytest.approx(1.0, abs=1e-9)


def test_visibility_limit_paper_point():
    v, _ = visibility_limit(RatePair(gamma_x=1.5, gamma_xx=18.1165))
    assert v == pytest.approx(0.92354, abs=1e-5)


def test_rate_pair_rejects_nonpositive():
    with pytest.raises(ValueError):
        RatePair(gamma_x=0.0, gamma_xx=1.0)


def test_weak_coupling_predicate():
    assert purcell_weak_coupling(SimConfig())  # 103.4 > 4*20.8 = 83.2
    strong = SimConfig(cavity=CavityParams(g=30.0, kappa=103.4))
    assert not purcell_weak_coupling(strong)
    lossy_qd = SimConfig(qd=QDParams(gamma_rad_x=10.0))
    assert not purcell_weak_coupling(lossy_qd)
