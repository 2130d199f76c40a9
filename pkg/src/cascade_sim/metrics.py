"""Photon-quality figures of merit from trajectories and correlation grids.

Conventions: the emission probability is (rate/hbar) * int <a+a> dt; purity
is 1 - g2(0) with g2(0) the ratio of the double-time integrals of G2 and
G2_pop; the Hong-Ou-Mandel indistinguishability uses

    I = 1 - [int 2 G_HOM] / [int (2 G_pop - |<a(t+tau)><a+(t)>|^2)],
    G_HOM = (G_pop + G2 - |G1|^2) / 2,

and the visibility follows from the exact identity I = (1 + V - g2(0)) / 2.
The spectrum reports twice the real part of the one-sided transform of G1,
which restores reality and makes int S dw / 2pi equal the emission.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .params import HBAR
from .correlations import TwoTimeGrid

BOUND_EPS = 1e-6
IDENTITY_EPS = 1e-6


class MetricUndefinedError(RuntimeError):
    """Raised when a metric denominator vanishes (no emission)."""


@dataclass
class MetricsReport:
    emission: float
    purity: float
    indistinguishability: float
    visibility: float
    g2_zero: float
    concurrence: Optional[float] = None
    spectrum_energy: Optional[np.ndarray] = None  # hbar*(w - w_frame), ueV
    spectrum: Optional[np.ndarray] = None
    filtered: bool = False
    config_hash: str = ""
    approximation_flags: tuple = ()
    validity: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        # purity can legitimately dip slightly below zero (bunched light when
        # both cascade photons share the mode); reject only gross violations
        # and record unit-interval compliance as a validity flag
        in_unit = True
        for name in ("purity", "indistinguishability", "visibility"):
            v = getattr(self, name)
            if not np.isfinite(v):
                continue
            if not (-0.05 <= v <= 1.05):
                raise ValueError(f"{name} = {v} far outside [0, 1]")
            if not (-BOUND_EPS <= v <= 1.0 + BOUND_EPS):
                in_unit = False
        self.validity.setdefault("metrics_in_unit_interval", in_unit)
        lhs = self.indistinguishability
        rhs = 0.5 * (1.0 + self.visibility - self.g2_zero)
        if np.isfinite(lhs) and np.isfinite(rhs) and abs(lhs - rhs) > IDENTITY_EPS:
            raise ValueError("stored I, V, g2(0) violate I = (1 + V - g2)/2")

    def to_dict(self, include_spectrum: bool = True) -> dict:
        d = asdict(self)
        if self.spectrum is not None and include_spectrum:
            d["spectrum_energy"] = [float(x) for x in self.spectrum_energy]
            d["spectrum"] = [float(x) for x in self.spectrum]
        else:
            d.pop("spectrum_energy", None)
            d.pop("spectrum", None)
        d["approximation_flags"] = list(self.approximation_flags)
        d["concurrence"] = None if self.concurrence is None else float(self.concurrence)
        return d


def emission_probability(n_series: np.ndarray, times: np.ndarray,
                         rate_uev: float) -> float:
    """(rate/hbar) * int <a+a>(t) dt."""
    return float(rate_uev / HBAR * np.trapezoid(np.real(n_series), times))


def _integral(x) -> float:
    if isinstance(x, TwoTimeGrid):
        return float(np.real(x.triangle_integral()))
    return float(np.real(x))


def purity_g2(g2_same, g2_pop) -> tuple[float, float]:
    """(purity, g2(0)) from the double-time integrals of G2 and G2_pop.

    Accepts grids or precomputed integrals; the two outputs are the same
    ratio reported as 1-p and p.
    """
    num = _integral(g2_same)
    den = _integral(g2_pop)
    if den <= 1e-300:
        raise MetricUndefinedError("G2_pop integral vanishes; no emission to normalize")
    p = num / den
    return 1.0 - p, p


def indistinguishability(g1, g2_same, g2_pop, int_abs_g1_sq: Optional[float] = None,
                         int_mean_field: float = 0.0) -> tuple[float, float]:
    """(I, V) from the HOM combination of G_pop, G2 and |G1|^2.

    ``g1`` may be a TwoTimeGrid (its |G1|^2 integral is formed here) or the
    precomputed integral can be passed directly.  V is recovered through the
    exact identity V = 2I - 1 + g2(0).
    """
    if int_abs_g1_sq is None:
        if not isinstance(g1, TwoTimeGrid):
            raise ValueError("need a G1 grid or the |G1|^2 integral")
        sq = TwoTimeGrid(g1.t_grid, g1.tau_grid,
                         (g1.values.real**2 + g1.values.imag**2).astype(complex),
                         g1.valid_len)
        int_abs_g1_sq = float(np.real(sq.triangle_integral()))
    int_g2 = _integral(g2_same)
    int_pop = _integral(g2_pop)
    den = 2.0 * int_pop - int_mean_field
    if den <= 1e-300:
        raise MetricUndefinedError("HOM denominator vanishes; no emission to normalize")
    hom2 = int_pop + int_g2 - int_abs_g1_sq      # int 2*G_HOM
    ind = 1.0 - hom2 / den
    g2_zero = int_g2 / int_pop
    vis = 2.0 * ind - 1.0 + g2_zero
    return float(ind), float(vis)


# --- concurrence ---------------------------------------------------------------

SIGMA_Y_2 = np.array([[0, 0, 0, -1],
                      [0, 0, 1, 0],
                      [0, 1, 0, 0],
                      [-1, 0, 0, 0]], dtype=complex)


def _psd_sqrt(m: np.ndarray, floor: float = 0.0) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    vals = np.clip(vals, floor, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def concurrence(rho2g: np.ndarray, psd_tol: float = 1e-6) -> float:
    """Two-qubit concurrence of the (trace-normalized) two-photon matrix.

    C = max(0, l4 - l3 - l2 - l1) with l_i the rising eigenvalues of
    R = sqrt(sqrt(rho) rho_tilde sqrt(rho)), rho_tilde = (sy x sy) rho* (sy x sy).
    """
    if rho2g.shape != (4, 4):
        raise ValueError("two-photon density matrix must be 4x4")
    rho = 0.5 * (rho2g + rho2g.conj().T)
    tr = np.trace(rho).real
    if tr <= 1e-300:
        raise MetricUndefinedError("two-photon matrix has vanishing trace")
    rho = rho / tr
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -psd_tol:
        raise ValueError(f"two-photon matrix not positive semidefinite: eigenvalues {eigs}")
    rho_t = SIGMA_Y_2 @ rho.conj() @ SIGMA_Y_2
    s = _psd_sqrt(rho)
    r = _psd_sqrt(s @ rho_t @ s)
    lam = np.sort(np.linalg.eigvalsh(r))
    return float(max(0.0, lam[3] - lam[2] - lam[1] - lam[0]))


TWO_PHOTON_BASIS = ("hh", "hv", "vh", "vv")


def two_photon_density_matrix(integrals: dict) -> np.ndarray:
    """Assemble rho^(2gamma) from double-time G2 integrals.

    ``integrals`` maps 4-letter keys "i1 i2 j1 j2" (e.g. "hhvv") to
    int int <b_i1+(t) b_i2+(t+tau) b_j2(t+tau) b_j1(t)>.  Entry (i, j) of the
    matrix uses i = (i1, i2), j = (j1, j2); the result is Hermitized and
    trace-normalized.
    """
    rho = np.zeros((4, 4), dtype=complex)
    for i, bi in enumerate(TWO_PHOTON_BASIS):
        for j, bj in enumerate(TWO_PHOTON_BASIS):
            key = bi[0] + bi[1] + bj[0] + bj[1]
            rho[i, j] = integrals[key]
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if tr <= 1e-300:
        raise MetricUndefinedError("two-photon matrix has vanishing trace")
    return rho / tr


# --- spectra ---------------------------------------------------------------------


def spectrum_from_ftau(f_tau: np.ndarray, tau_grid: np.ndarray, rate_uev: float,
                       omega_grid: np.ndarray) -> np.ndarray:
    """Time-integrated emission spectrum on an angular-frequency grid (rad/ps).

    S(w) = 2 Re (rate/hbar) int dtau exp(+i w tau) [int dt G1(t, tau)];
    frequencies are detunings from the rotating frame of G1.  A line at
    physical frequency d above the frame enters G1 as exp(-i d tau) and
    appears at w = +d, so emission at the bare exciton line shows up below
    the cavity frequency as it should.
    """
    out = np.empty(len(omega_grid))
    chunk = max(1, int(2e7) // max(len(tau_grid), 1))
    for lo in range(0, len(omega_grid), chunk):
        hi = min(lo + chunk, len(omega_grid))
        phases = np.exp(1j * np.outer(omega_grid[lo:hi], tau_grid))
        one_sided = np.trapezoid(phases * f_tau[None, :], tau_grid, axis=1)
        out[lo:hi] = 2.0 * (rate_uev / HBAR) * np.real(one_sided)
    return out


def spectrum_map(grid: TwoTimeGrid, rate_uev: float,
                 omega_grid: np.ndarray) -> np.ndarray:
    """Time-resolved spectrum S(t, w) from a G1 grid (rows = anchor times)."""
    dtau = grid.tau_grid[1] - grid.tau_grid[0] if len(grid.tau_grid) > 1 else 1.0
    out = np.zeros((len(grid.t_grid), len(omega_grid)))
    phases = np.exp(1j * np.outer(omega_grid, grid.tau_grid))
    for n in range(len(grid.t_grid)):
        ln = grid.valid_len[n]
        if ln < 2:
            continue
        one_sided = np.trapezoid(phases[:, :ln] * grid.values[n, :ln][None, :],
                                 dx=dtau, axis=1)
        out[n] = 2.0 * (rate_uev / HBAR) * np.real(one_sided)
    return out


def default_omega_grid(e_bind: float, e_fss: float, kappa: float,
                       t_max: float) -> np.ndarray:
    """Detuning grid (rad/ps) wide enough for the sum rule and both peaks.

    Resolution follows the narrowest feature (the exciton side peak, width
    ~ gamma_rad) down to 0.25 ueV; the span covers the detuned side peak and
    enough Lorentzian tail for the 2% sum rule.
    """
    span = max(abs(e_bind) + abs(e_fss) + 12.0 * kappa, 2500.0)
    step = 0.25
    n = min(int(np.ceil(2 * span / step)) + 1, 60001)
    return np.linspace(-span, span, n) / HBAR
