"""Closed-form rate and visibility estimates for the Purcell-enhanced cascade.

A cavity-enhanced transition in the weak-coupling Purcell regime decays at
4 g^2 / kappa on resonance and at the Lorentzian-masked rate
g^2 kappa / (delta^2 + (kappa/2)^2) off resonance.  Summing all decay paths
of the two cascade transitions bounds the two-photon interference visibility
by V = 1 / (1 + gamma_X / gamma_XX); assuming pure single photons the
indistinguishability limit is I = (1 + V) / 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .params import SimConfig, derive_energies, polaron_rescale, HBAR


@dataclass(frozen=True)
class RatePair:
    """Total depopulation rates (ueV) of the exciton and biexciton levels."""
    gamma_x: float
    gamma_xx: float

    def __post_init__(self):
        if self.gamma_x <= 0 or self.gamma_xx <= 0:
            raise ValueError("decay rates must be positive")

    @property
    def lifetime_ratio(self) -> float:
        """tau_XX / tau_X = gamma_X / gamma_XX."""
        return self.gamma_x / self.gamma_xx


def purcell_rate(g: float, kappa: float) -> float:
    """Resonant Purcell decay rate 4 g^2 / kappa (ueV)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if kappa <= g:
        warnings.warn(f"kappa = {kappa} <= g = {g}: outside the Purcell regime",
                      stacklevel=2)
    return 4.0 * g * g / kappa


def lorentzian_purcell(g: float, kappa: float, delta: float) -> float:
    """Lorentzian-masked Purcell rate g^2 kappa / (delta^2 + (kappa/2)^2) (ueV).

    ``delta`` is the cavity-transition detuning in energy units; the rate
    reduces to 4 g^2 / kappa at delta = 0.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return g * g * kappa / (delta * delta + 0.25 * kappa * kappa)


def full_decay_rates(config: SimConfig, b: float = 1.0, rescaled: bool = True,
                     include_v_channel: bool = True) -> RatePair:
    """Total decay rates of X_H and XX including every decay path.

    The H-polarized exciton decays through the Lorentzian-masked H-cavity
    channel plus its radiative background; the biexciton adds the resonant
    H Purcell channel, the radiative background of both polarizations, and
    (optionally) the detuned V-cavity channel.  ``b`` applies the polaron
    rescaling (g -> b*g, radiative rates -> b^2) when ``rescaled``.
    """
    energies = derive_energies(config)
    if rescaled:
        coup = polaron_rescale(config, b)
        g_eff, rad_x, rad_xx = coup.g, coup.gamma_rad_x, coup.gamma_rad_xx
    else:
        g_eff, rad_x, rad_xx = config.cavity.g, config.qd.gamma_rad_x, config.qd.gamma_rad_xx
    kappa = config.cavity.kappa

    gamma_x = lorentzian_purcell(g_eff, kappa, energies.delta_cav_xh_g) + rad_x

    gamma_xx = purcell_rate(g_eff, kappa) + rad_xx
    if include_v_channel:
        delta_v = (energies.e_xx - energies.e_xv) - HBAR * energies.omega_v
        gamma_xx += lorentzian_purcell(g_eff, kappa, delta_v) + rad_xx
    return RatePair(gamma_x=gamma_x, gamma_xx=gamma_xx)


def visibility_limit(rates: RatePair) -> tuple[float, float]:
    """(V, I) bound set by the cascade lifetime ratio, assuming g2(0) = 0."""
    v = 1.0 / (1.0 + rates.lifetime_ratio)
    return v, 0.5 * (1.0 + v)


def purcell_weak_coupling(config: SimConfig, b: float = 1.0) -> bool:
    """True in the weak-coupling Purcell window: kappa > 4 g and kappa >> gamma_rad."""
    g_eff = b * config.cavity.g
    kappa = config.cavity.kappa
    gamma_max = max(config.qd.gamma_rad_x, config.qd.gamma_rad_xx)
    return bool(kappa > 4.0 * g_eff and kappa >= 20.0 * gamma_max)
