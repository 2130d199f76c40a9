"""Right-hand side of the polaron master equation.

The equation of motion is

    drho/dt = -(i/hbar) [H, rho] + L_cav rho + L_rad rho + L_deph rho + L_ph rho,

assembled here in a rotating frame that leaves every term time-independent
unless a drive pulse is active.  The frame rotates the dot levels at
(0, w, w, 2w) and every photon mode at w, with w the H-cavity frequency
("cascade frame"); all couplings of the resonant cascade then carry zero
phase and the residual detunings move onto the diagonal.  A lab frame
(w = 0) is kept for cross-checks on toy parameters.

The phonon-mediated term

    L_ph rho = -(1/hbar^2) int_0^inf dtau sum_i { G_i(tau)
                  [X_i(t), Xb_i(t,t-tau) rho(t-tau)] + h.c. }

is evaluated with rho(t-tau) ~ rho(t) (Markov step) and with Xb_i propagated
backward under the free dot+cavity evolution only.  Expanding X_i in
eigenoperators A_k with free rotation frequencies lam_k turns the memory
integral into constant matrices built from the one-sided kernel transforms
F_i(lam) = int G_i(tau) exp(-i lam tau) dtau.  A history-convolution variant
keeps rho(t-tau) explicitly for A/B checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .params import (SimConfig, EnergyTable, RescaledCouplings, VModeTreatment,
                     derive_energies, polaron_rescale, gamma_deph, HBAR)
from .hilbert import SpaceLayout, OperatorSet, layout_for, build_operators
from .phonon import PhononKernel, tabulate_kernel, cavity_feeding_rate
from . import analytic


@dataclass(frozen=True)
class ChiTerm:
    """One eigenoperator term of the light-matter fluctuation operator chi.

    ``op`` rotates as exp(i lam t) in the free interaction picture; ``coeff``
    is its bare coupling in ueV (drive terms supply it per evaluation).
    """
    op: np.ndarray
    lam: float
    coeff: float


@dataclass
class DriveTerms:
    """Gaussian two-photon-excitation pulse in the V channel."""
    p_plus: np.ndarray          # |X_V><G| + |XX><X_V|
    p1: np.ndarray              # |X_V><G|
    p2: np.ndarray              # |XX><X_V|
    lam1: float                 # free rotation frequency of p1 (rad/ps)
    lam2: float
    mu: float                   # frame rotation frequency (rad/ps)
    omega_l: float              # laser angular frequency (rad/ps)
    t0: float
    sigma: float
    amp_h: float                # hbar * B * Omega_0 / 2 (ueV)
    amp_chi: float              # hbar * Omega_0 / 2 (ueV), bare

    def envelope(self, t: float) -> float:
        s = self.sigma
        return np.exp(-((t - self.t0) ** 2) / (2.0 * s * s)) / np.sqrt(2.0 * np.pi * s * s)

    def coeff_h(self, t: float) -> complex:
        """Coefficient of p_plus in the rotating-frame Hamiltonian (ueV)."""
        return -self.amp_h * self.envelope(t) * np.exp(
            1j * (self.mu * t - self.omega_l * (t - self.t0)))

    def coeff_chi(self, t: float) -> complex:
        return -self.amp_chi * self.envelope(t) * np.exp(
            1j * (self.mu * t - self.omega_l * (t - self.t0)))

    @property
    def t_end(self) -> float:
        """Time after which the pulse amplitude is numerically zero."""
        return self.t0 + 8.0 * self.sigma


@dataclass
class DissipatorSet:
    """Jump operators with energy-unit rates, plus the dephasing descriptor."""
    jumps: list          # (rate_ueV, A, A_dag, AdagA)
    gamma_deph: float    # ueV
    projectors: list     # dot projectors for the dephasing channel
    effective_v_rates: dict  # label -> rate (ueV), empty unless V mode folded


@dataclass
class RHSContext:
    layout: SpaceLayout
    ops: OperatorSet
    config: Optional[SimConfig]
    energies: Optional[EnergyTable]
    couplings: Optional[RescaledCouplings]
    h_static: np.ndarray
    dissipators: DissipatorSet
    drive: Optional[DriveTerms]
    kernel: Optional[PhononKernel]
    chi_static: list = field(default_factory=list)   # list[ChiTerm]
    chi_drive: list = field(default_factory=list)    # list[ChiTerm], coeff ignored
    x_static: dict = field(default_factory=dict)     # {"g": X_g, "u": X_u} (ueV)
    lam_static: dict = field(default_factory=dict)   # {"g": Lam_g, "u": Lam_u} (ueV)
    f_drive: dict = field(default_factory=dict)      # {(i, m, sign): F_i(+-lam_m)}
    frame: str = "cascade"
    history_convolution: bool = False
    approximation_flags: tuple = ()

    @property
    def dim(self) -> int:
        return self.h_static.shape[0]

    @property
    def has_drive(self) -> bool:
        return self.drive is not None

    @property
    def t_switch(self) -> float:
        """Time after which the generator is time-independent."""
        return self.drive.t_end if self.drive is not None else 0.0

    # -- Hamiltonian ------------------------------------------------------

    def hamiltonian(self, t: float) -> np.ndarray:
        if self.drive is None:
            return self.h_static
        c = self.drive.coeff_h(t)
        h = self.h_static + c * self.drive.p_plus
        h += np.conj(c) * self.drive.p_plus.conj().T
        return h

    # -- phonon term ------------------------------------------------------

    def _drive_xl(self, t: float, which: str):
        """Drive contribution to (X_i, Lam_i) at time t."""
        d = self.drive
        c = d.coeff_chi(t)
        ops = ((c, d.p1, 1), (c, d.p2, 2))
        x = np.zeros_like(self.h_static)
        lam = np.zeros_like(self.h_static)
        for cm, p, m in ops:
            f_plus = self.f_drive[(which, m, +1)]
            f_minus = self.f_drive[(which, m, -1)]
            if which == "g":
                x += cm * p + np.conj(cm) * p.conj().T
                lam += cm * f_plus * p + np.conj(cm) * f_minus * p.conj().T
            else:
                x += 1j * (cm * p - np.conj(cm) * p.conj().T)
                lam += 1j * (cm * f_plus * p - np.conj(cm) * f_minus * p.conj().T)
        return x, lam

    def phonon_operators(self, t: float):
        """(X_i, Lam_i) pairs for i in {g, u} at time t, in ueV."""
        pairs = []
        for which in ("g", "u"):
            x = self.x_static.get(which)
            lam = self.lam_static.get(which)
            if x is None:
                continue
            if self.drive is not None:
                xd, ld = self._drive_xl(t, which)
                x = x + xd
                lam = lam + ld
            pairs.append((x, lam))
        return pairs

    # -- full right-hand side ----------------------------------------------

    def rhs(self, t: float, rho: np.ndarray, history=None) -> np.ndarray:
        h = self.hamiltonian(t)
        drho = (-1j / HBAR) * (h @ rho - rho @ h)
        for rate, a, a_dag, adaga in self.dissipators.jumps:
            if rate == 0.0:
                continue
            drho += (rate / HBAR) * (a @ rho @ a_dag - 0.5 * (adaga @ rho + rho @ adaga))
        if self.dissipators.gamma_deph > 0.0:
            drho += apply_pure_dephasing(rho, self.dissipators.gamma_deph,
                                         self.dissipators.projectors)
        if self.kernel is not None and self.x_static:
            if self.history_convolution and history is not None:
                drho += self._phonon_history(t, rho, history)
            else:
                for x, lam in self.phonon_operators(t):
                    m = lam @ rho - rho @ lam.conj().T
                    drho += (-1.0 / HBAR**2) * (x @ m - m @ x)
        return drho

    def _phonon_history(self, t: float, rho: np.ndarray, history) -> np.ndarray:
        """Memory integral with explicit rho(t - tau) from the history buffer."""
        cells, weights = history.cell_grid(self.kernel)
        states = history.sample(t - cells, rho_now=rho, t_now=t)
        out = np.zeros_like(rho)
        terms = list(self.chi_static)
        if self.drive is not None:
            c = self.drive.coeff_chi(t)
            terms = terms + [ChiTerm(self.drive.p1, self.drive.lam1, c),
                             ChiTerm(self.drive.p2, self.drive.lam2, c)]
        for which, g_vals in (("g", self.kernel.g_g), ("u", self.kernel.g_u)):
            x = self.x_static.get(which)
            if x is None and which == "g":
                x = sum(tm.coeff * tm.op for tm in terms)
                x = x + x.conj().T
            elif x is None:
                x = 1j * sum(tm.coeff * tm.op for tm in terms)
                x = x - x.conj().T
            elif self.drive is not None:
                xd, _ = self._drive_xl(t, which)
                x = x + xd
            m = np.zeros_like(rho)
            for tm in terms:
                w_plus = weights(which, tm.lam)
                conv = np.tensordot(w_plus, states, axes=(0, 0))
                if which == "g":
                    m += tm.coeff * (tm.op @ conv)
                    w_minus = weights(which, -tm.lam)
                    conv_m = np.tensordot(w_minus, states, axes=(0, 0))
                    m += np.conj(tm.coeff) * (tm.op.conj().T @ conv_m)
                else:
                    m += 1j * tm.coeff * (tm.op @ conv)
                    w_minus = weights(which, -tm.lam)
                    conv_m = np.tensordot(w_minus, states, axes=(0, 0))
                    m -= 1j * np.conj(tm.coeff) * (tm.op.conj().T @ conv_m)
            out += (-1.0 / HBAR**2) * ((x @ (m - m.conj().T)) - ((m - m.conj().T) @ x))
        return out

    # -- static superoperator ----------------------------------------------

    def build_superoperator(self) -> np.ndarray:
        """Dense matrix of the time-independent part of the generator (1/ps).

        Row-major vec convention: vec(A rho B) = kron(A, B.T) vec(rho).
        With no drive this is the full generator.
        """
        d = self.dim
        eye = np.eye(d, dtype=complex)
        h = self.h_static
        sup = (-1j / HBAR) * (np.kron(h, eye) - np.kron(eye, h.T))
        for rate, a, a_dag, adaga in self.dissipators.jumps:
            if rate == 0.0:
                continue
            sup += (rate / HBAR) * (np.kron(a, a.conj())
                                    - 0.5 * np.kron(adaga, eye)
                                    - 0.5 * np.kron(eye, adaga.T))
        if self.dissipators.gamma_deph > 0.0:
            block = sum(np.kron(p, p.T) for p in self.dissipators.projectors)
            sup += (self.dissipators.gamma_deph / (2.0 * HBAR)) * (block - np.eye(d * d))
        if self.kernel is not None and self.x_static:
            for which in ("g", "u"):
                x = self.x_static[which]
                lam = self.lam_static[which]
                lam_dag = lam.conj().T
                sup += (-1.0 / HBAR**2) * (
                    np.kron(x @ lam, eye) - np.kron(lam, x.T)
                    - np.kron(x, lam.conj()) + np.kron(eye, (lam_dag @ x).T))
        return sup


# --- elementary contributions (unit-testable in isolation) --------------------


def apply_lindblad(rho: np.ndarray, rate_uev: float, jump: np.ndarray) -> np.ndarray:
    """rate * (A rho A+ - {A+A, rho}/2) / hbar; traceless by construction."""
    if rho.shape != jump.shape:
        raise ValueError("dimension mismatch between rho and jump operator")
    adag = jump.conj().T
    adaga = adag @ jump
    return (rate_uev / HBAR) * (jump @ rho @ adag - 0.5 * (adaga @ rho + rho @ adaga))


def apply_pure_dephasing(rho: np.ndarray, gamma_uev: float, projectors) -> np.ndarray:
    """-(gamma/2hbar) (rho - sum_i P_i rho P_i): damps electronic off-diagonal blocks."""
    block_diag = sum(p @ rho @ p for p in projectors)
    return (-gamma_uev / (2.0 * HBAR)) * (rho - block_diag)


def apply_phonon_interaction(rho: np.ndarray, t: float, ctx: RHSContext) -> np.ndarray:
    """Markov-step phonon-mediated contribution at time t."""
    if ctx.kernel is None or not ctx.x_static:
        return np.zeros_like(rho)
    out = np.zeros_like(rho)
    for x, lam in ctx.phonon_operators(t):
        m = lam @ rho - rho @ lam.conj().T
        out += (-1.0 / HBAR**2) * (x @ m - m @ x)
    return out


# --- context construction ------------------------------------------------------


def build_effective_v_rates(config: SimConfig, energies: EnergyTable,
                            couplings: RescaledCouplings,
                            kernel: Optional[PhononKernel]) -> dict:
    """Lindblad rates (ueV) replacing the explicit V mode.

    Lorentzian Purcell rates at the V-mode detunings of both V transitions,
    plus the phonon-assisted feeding rates at the same detunings when phonon
    interactions are on.  Rates go to zero as the mode splitting grows.
    """
    hbar = HBAR
    w_xx_xv = (energies.e_xx - energies.e_xv) / hbar
    w_xv_g = (energies.e_xv - energies.e_g) / hbar
    kappa = config.cavity.kappa
    rates = {
        "xx_to_xv": analytic.lorentzian_purcell(
            couplings.g, kappa, hbar * (w_xx_xv - energies.omega_v)),
        "xv_to_g": analytic.lorentzian_purcell(
            couplings.g, kappa, hbar * (w_xv_g - energies.omega_v)),
    }
    if config.phonons.include_phonons and kernel is not None:
        g_bare = config.cavity.g
        rates["xx_to_xv"] += hbar * cavity_feeding_rate(
            energies.omega_v - w_xx_xv, g_bare, config.phonons, kernel)
        rates["xv_to_g"] += hbar * cavity_feeding_rate(
            energies.omega_v - w_xv_g, g_bare, config.phonons, kernel)
    return rates


def build_context(config: SimConfig, kernel: Optional[PhononKernel] = None,
                  frame: str = "cascade") -> RHSContext:
    """Assemble the full master-equation context for a configuration.

    frame="cascade" keeps the generator static outside the pulse window;
    frame="lab" keeps bare energies on the diagonal (only sensible for toy
    parameter sets in tests).
    """
    if config.phonons.include_phonons and kernel is None:
        kernel = tabulate_kernel(config.phonons)
    if not config.phonons.include_phonons:
        kernel = None
    b = kernel.b if kernel is not None else 1.0
    energies = derive_energies(config)
    couplings = polaron_rescale(config, b)
    layout = layout_for(config)
    ops = build_operators(layout)
    hbar = HBAR

    w_frame = energies.omega_h if frame == "cascade" else 0.0
    frame_e = np.array([0.0, hbar * w_frame, hbar * w_frame, 2.0 * hbar * w_frame])
    levels = np.array([energies.e_g, energies.e_xh, energies.e_xv, energies.e_xx])

    h = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for i, lbl in enumerate(("G", "XH", "XV", "XX")):
        h += (levels[i] - frame_e[i]) * ops.projectors[lbl]
    h += hbar * (energies.omega_h - w_frame) * ops.n_h
    if layout.has_v:
        h += hbar * (energies.omega_v - w_frame) * ops.n_v
    if layout.has_sensor:
        h += hbar * (energies.omega_s - w_frame) * ops.n_s

    # dot-cavity coupling, same (rescaled) g for both polarizations
    coupling = ops.a_h @ (ops.sigma[("G", "XH")].conj().T + ops.sigma[("XH", "XX")].conj().T)
    if layout.has_v:
        coupling += ops.a_v @ (ops.sigma[("G", "XV")].conj().T + ops.sigma[("XV", "XX")].conj().T)
    h += couplings.g * (coupling + coupling.conj().T)
    if layout.has_sensor:
        eps = config.epsilon_s
        h += eps * (ops.a_h @ ops.s.conj().T + ops.s @ ops.a_h.conj().T)

    # dissipators
    jumps = []

    def add_jump(rate, a):
        adag = a.conj().T
        jumps.append((float(rate), a, adag, adag @ a))

    add_jump(config.cavity.kappa, ops.a_h)
    if layout.has_v:
        add_jump(config.cavity.kappa, ops.a_v)
    if layout.has_sensor:
        add_jump(config.filter.mu_s, ops.s)
    add_jump(couplings.gamma_rad_x, ops.sigma[("G", "XH")])
    add_jump(couplings.gamma_rad_x, ops.sigma[("G", "XV")])
    add_jump(couplings.gamma_rad_xx, ops.sigma[("XH", "XX")])
    add_jump(couplings.gamma_rad_xx, ops.sigma[("XV", "XX")])

    effective_v_rates = {}
    if config.cavity.v_mode == VModeTreatment.EFFECTIVE:
        effective_v_rates = build_effective_v_rates(config, energies, couplings, kernel)
        add_jump(effective_v_rates["xx_to_xv"], ops.sigma[("XV", "XX")])
        add_jump(effective_v_rates["xv_to_g"], ops.sigma[("G", "XV")])

    dissipators = DissipatorSet(
        jumps=jumps,
        gamma_deph=gamma_deph(config),
        projectors=[ops.projectors[lbl] for lbl in ("G", "XH", "XV", "XX")],
        effective_v_rates=effective_v_rates,
    )

    # drive
    drive = None
    if config.pulse.enabled:
        omega_l = config.pulse.omega if config.pulse.omega is not None \
            else energies.e_xx / (2.0 * hbar)
        t0 = config.pulse.t0 if config.pulse.t0 is not None else 5.0 * config.pulse.sigma
        p1 = ops.sigma[("G", "XV")].conj().T   # |X_V><G|
        p2 = ops.sigma[("XV", "XX")].conj().T  # |XX><X_V|
        omega0_rad = config.pulse.area * np.pi
        drive = DriveTerms(
            p_plus=p1 + p2, p1=p1, p2=p2,
            lam1=(energies.e_xv - energies.e_g) / hbar,
            lam2=(energies.e_xx - energies.e_xv) / hbar,
            mu=w_frame, omega_l=omega_l, t0=t0, sigma=config.pulse.sigma,
            amp_h=0.5 * hbar * b * omega0_rad,
            amp_chi=0.5 * hbar * omega0_rad,
        )

    # phonon fluctuation operators; bare couplings, B^2 lives in the kernel
    chi_static = []
    x_static = {}
    lam_static = {}
    f_drive = {}
    if kernel is not None:
        g_bare = config.cavity.g

        def chi_entry(a_mode, sig_lower, w_mode):
            op = a_mode @ ops.sigma[sig_lower].conj().T
            lo, up = sig_lower
            e_lv = {"G": 0.0, "XH": energies.e_xh, "XV": energies.e_xv, "XX": energies.e_xx}
            lam = (e_lv[up] - e_lv[lo]) / hbar - w_mode
            return ChiTerm(op=op, lam=lam, coeff=g_bare)

        chi_static.append(chi_entry(ops.a_h, ("G", "XH"), energies.omega_h))
        chi_static.append(chi_entry(ops.a_h, ("XH", "XX"), energies.omega_h))
        if layout.has_v:
            chi_static.append(chi_entry(ops.a_v, ("G", "XV"), energies.omega_v))
            chi_static.append(chi_entry(ops.a_v, ("XV", "XX"), energies.omega_v))

        dim = layout.total_dim
        x_g = np.zeros((dim, dim), dtype=complex)
        x_u = np.zeros((dim, dim), dtype=complex)
        lam_g = np.zeros((dim, dim), dtype=complex)
        lam_u = np.zeros((dim, dim), dtype=complex)
        for tm in chi_static:
            f_g_p = kernel.one_sided_transform("g", tm.lam)
            f_g_m = kernel.one_sided_transform("g", -tm.lam)
            f_u_p = kernel.one_sided_transform("u", tm.lam)
            f_u_m = kernel.one_sided_transform("u", -tm.lam)
            x_g += tm.coeff * (tm.op + tm.op.conj().T)
            x_u += 1j * tm.coeff * (tm.op - tm.op.conj().T)
            lam_g += tm.coeff * (f_g_p * tm.op + f_g_m * tm.op.conj().T)
            lam_u += 1j * tm.coeff * (f_u_p * tm.op - f_u_m * tm.op.conj().T)
        x_static = {"g": x_g, "u": x_u}
        lam_static = {"g": lam_g, "u": lam_u}

        if drive is not None:
            for m, lam in ((1, drive.lam1), (2, drive.lam2)):
                for which in ("g", "u"):
                    f_drive[(which, m, +1)] = kernel.one_sided_transform(which, lam)
                    f_drive[(which, m, -1)] = kernel.one_sided_transform(which, -lam)

    flags = []
    if kernel is not None:
        flags += ["phonon_memory_markov_step", "phonon_backward_free_evolution"]
        if config.phonons.history_convolution:
            flags[0] = "phonon_memory_history_convolution"
    if config.cavity.v_mode == VModeTreatment.EFFECTIVE:
        flags.append("v_mode_effective_lindblad")

    return RHSContext(
        layout=layout, ops=ops, config=config, energies=energies,
        couplings=couplings, h_static=h, dissipators=dissipators, drive=drive,
        kernel=kernel, chi_static=chi_static, x_static=x_static,
        lam_static=lam_static, f_drive=f_drive, frame=frame,
        history_convolution=config.phonons.history_convolution,
        approximation_flags=tuple(flags),
    )


def toy_context(h_static: np.ndarray, jumps: list,
                gamma_deph: float = 0.0, projectors=None) -> RHSContext:
    """Bare-bones context for an arbitrary (H, Lindblad) system, used in tests.

    ``jumps`` is a list of (rate_ueV, jump_matrix) pairs.
    """
    d = h_static.shape[0]
    layout = SpaceLayout(qd_dim=d, n_h=1, n_v=0, n_s=0)
    diss = DissipatorSet(
        jumps=[(float(r), a, a.conj().T, a.conj().T @ a) for r, a in jumps],
        gamma_deph=gamma_deph,
        projectors=projectors or [],
        effective_v_rates={},
    )
    return RHSContext(layout=layout, ops=None, config=None, energies=None,
                      couplings=None, h_static=h_static.astype(complex),
                      dissipators=diss, drive=None, kernel=None)
