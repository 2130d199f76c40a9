"""Acoustic-phonon environment: spectral density, correlation function,
displacement factor, polaron Green functions, and the phonon-assisted
cavity-feeding rate.

All frequencies are angular (rad/ps); the super-ohmic spectral density
J(w) = alpha_p w^3 exp(-w^2 / 2 w_b^2) makes every integral effectively
finite on [0, 8 w_b].
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .params import PhononParams, HBAR, KB


class QuadratureError(RuntimeError):
    """A phonon-environment integral failed to converge."""


def spectral_density(omega, p: PhononParams):
    """Super-ohmic deformation-potential spectral density J(w) in 1/ps."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral density defined for omega >= 0")
    wb = p.omega_b
    out = p.alpha_p * omega**3 * np.exp(-(omega**2) / (2.0 * wb**2))
    return float(out) if out.ndim == 0 else out


def _coth_factor(omega: np.ndarray, p: PhononParams) -> np.ndarray:
    """coth(hbar w / 2 kB T); the T=0 limit is 1, never evaluated as coth."""
    if p.temperature == 0.0:
        return np.ones_like(omega)
    x = HBAR * omega / (2.0 * KB * p.temperature)
    return 1.0 / np.tanh(x)


def _integrand_weight(omega: np.ndarray, p: PhononParams) -> np.ndarray:
    """J(w)/w^2 = alpha_p * w * exp(-w^2/2w_b^2); finite at w=0."""
    return p.alpha_p * omega * np.exp(-(omega**2) / (2.0 * p.omega_b**2))


def _weight_coth(omega: np.ndarray, p: PhononParams) -> np.ndarray:
    """J(w)/w^2 * coth(hbar w/2 kB T) with the finite w -> 0 limit built in."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    gauss = p.alpha_p * np.exp(-(omega**2) / (2.0 * p.omega_b**2))
    if p.temperature == 0.0:
        return gauss * omega
    c = HBAR / (2.0 * KB * p.temperature)
    x = c * omega
    # w * coth(c w) -> 1/c + c w^2 / 3 as w -> 0
    small = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        w_coth = np.where(small, (1.0 + x * x / 3.0) / c, omega / np.tanh(x))
    return gauss * w_coth


def displacement_factor(p: PhononParams) -> float:
    """Thermal average <B>_T of the phonon displacement operator, in (0, 1].

    <B>_T = exp[-1/2 int_0^inf dw J(w)/w^2 coth(hbar w / 2 kB T)].
    At T=0 the integral reduces to alpha_p * w_b^2 in closed form.
    """
    if p.alpha_p == 0.0 or not p.include_phonons:
        return 1.0

    def f(w):
        return float(_weight_coth(w, p)[0])

    upper = 8.0 * p.omega_b
    val, err = integrate.quad(f, 0.0, upper, limit=200)
    if err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(
            f"displacement factor integral did not converge: value={val:.6e} abserr={err:.2e}")
    return float(np.exp(-0.5 * val))


def phi(tau: float, p: PhononParams) -> complex:
    """Phonon correlation function phi(tau) for tau >= 0 by adaptive quadrature.

    phi(tau) = int_0^inf dw J(w)/w^2 [coth(hbar w/2 kB T) cos(w tau) - i sin(w tau)].
    """
    if tau < 0:
        raise ValueError("phi is tabulated for tau >= 0; use phi(-tau).conjugate()")
    upper = 8.0 * p.omega_b

    def re_f(w):
        return float(_weight_coth(w, p)[0])

    def im_f(w):
        return -float(_integrand_weight(np.asarray(w), p))

    if tau == 0.0:
        re, re_err = integrate.quad(re_f, 0.0, upper, limit=400)
        im, im_err = 0.0, 0.0
    else:
        # QUADPACK oscillatory rules handle the cos/sin factors
        re, re_err = integrate.quad(re_f, 0.0, upper, weight="cos", wvar=tau,
                                    limit=400)
        im, im_err = integrate.quad(im_f, 0.0, upper, weight="sin", wvar=tau,
                                    limit=400)
    if max(re_err, im_err) > 1e-8:
        raise QuadratureError(f"phi({tau}) quadrature error {max(re_err, im_err):.2e}")
    return complex(re, im)


@dataclass(frozen=True)
class PhononKernel:
    """Tabulated phi(tau) and polaron Green functions on a uniform tau grid."""
    b: float
    tau_grid: np.ndarray
    phi: np.ndarray
    g_g: np.ndarray
    g_u: np.ndarray
    tau_mem: float

    def __post_init__(self):
        # phi(0) is purely real; <B> = exp(-Re phi(0) / 2) by construction.
        if abs(self.phi[0].imag) > 1e-12:
            raise ValueError("phi(0) must be real")
        if abs(self.b - np.exp(-0.5 * self.phi[0].real)) > 1e-8:
            raise ValueError("displacement factor inconsistent with phi(0)")

    def phi_interp(self, tau) -> np.ndarray:
        """Cubic interpolation of phi on [0, tau_mem]; Hermitian symmetry for tau < 0."""
        tau = np.asarray(tau, dtype=float)
        spline_re = CubicSpline(self.tau_grid, self.phi.real)
        spline_im = CubicSpline(self.tau_grid, self.phi.imag)
        a = np.abs(tau)
        out = spline_re(a) + 1j * spline_im(a)
        out = np.where(a > self.tau_mem, 0.0, out)
        return np.where(tau < 0, np.conj(out), out)

    def one_sided_transform(self, which: str, nu) -> np.ndarray:
        """F_i(nu) = int_0^tau_mem G_i(tau) exp(-i nu tau) dtau (trapezoid).

        These transforms carry the memory integral of the phonon-mediated
        interaction once the commutator operators are expanded in rotating
        eigenoperators.
        """
        g = {"g": self.g_g, "u": self.g_u}[which]
        nu_arr = np.atleast_1d(np.asarray(nu, dtype=float))
        phase = np.exp(-1j * np.outer(nu_arr, self.tau_grid))
        vals = np.trapezoid(phase * g[None, :], self.tau_grid, axis=1)
        return vals[0] if np.isscalar(nu) or np.asarray(nu).ndim == 0 else vals

    def dump_csv(self, path: str) -> None:
        buf = io.StringIO()
        buf.write("tau,re_phi,im_phi,re_g_g,im_g_g,re_g_u,im_g_u\n")
        for i, tau in enumerate(self.tau_grid):
            buf.write("%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e\n" % (
                tau, self.phi[i].real, self.phi[i].imag,
                self.g_g[i].real, self.g_g[i].imag,
                self.g_u[i].real, self.g_u[i].imag))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())


def green_functions(phi_vals: np.ndarray, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Polaron Green functions G_g = B^2 (cosh phi - 1), G_u = B^2 sinh phi."""
    phi_vals = np.asarray(phi_vals, dtype=complex)
    return b * b * (np.cosh(phi_vals) - 1.0), b * b * np.sinh(phi_vals)


def tabulate_kernel(p: PhononParams, n_quad: int = 2000) -> PhononKernel:
    """Tabulate phi and the Green functions on [0, tau_mem].

    Gauss-Legendre on [0, 8 w_b] resolves the oscillatory factor up to
    w_max * tau_mem ~ 1e2 radians with large margin at the default order.
    """
    tau_grid = np.arange(0.0, p.tau_mem + p.kernel_dtau / 2, p.kernel_dtau)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    upper = 8.0 * p.omega_b
    w = 0.5 * upper * (nodes + 1.0)
    wt = 0.5 * upper * weights
    base = _integrand_weight(w, p) * wt
    base_coth = _weight_coth(w, p) * wt
    # phi(tau) = sum_w [base_coth cos(w tau) - i base sin(w tau)]
    wt_tau = np.outer(tau_grid, w)
    phi_vals = (np.cos(wt_tau) * base_coth[None, :]).sum(axis=1) \
        - 1j * (np.sin(wt_tau) * base[None, :]).sum(axis=1)
    if p.alpha_p == 0.0 or not p.include_phonons:
        phi_vals = np.zeros_like(phi_vals)
    b = float(np.exp(-0.5 * phi_vals[0].real))
    g_g, g_u = green_functions(phi_vals, b)
    # phi carries an algebraic ~ alpha_p/tau^2 tail from the w -> 0 boundary,
    # so demand only that the kernel has decayed by two orders of magnitude
    if np.abs(phi_vals[-1]) > 1e-2 * max(np.abs(phi_vals[0]), 1e-300):
        import warnings
        warnings.warn(
            f"|phi(tau_mem)| = {np.abs(phi_vals[-1]):.2e} not small against "
            f"phi(0); increase tau_mem", stacklevel=2)
    return PhononKernel(b=b, tau_grid=tau_grid, phi=phi_vals, g_g=g_g, g_u=g_u,
                        tau_mem=p.tau_mem)


def cavity_feeding_rate(delta, g_uev: float, p: PhononParams,
                        kernel: PhononKernel | None = None,
                        return_tail_flag: bool = False):
    """Phonon-assisted cavity feeding rate (1/ps) for detuning delta (rad/ps).

    Gamma(delta) = 2 <B>^2 (g/hbar)^2 Re int_0^inf dt e^{-i delta t} (e^{phi(t)} - 1),
    with delta = omega_cavity - omega_transition.  At T=0 the rate is sizable
    only for delta < 0 (phonon emission).  The integral is truncated at
    tau_mem; the result is flagged when the last decade of the grid still
    contributes more than 0.1%.
    """
    if kernel is None:
        kernel = tabulate_kernel(p)
    delta_arr = np.atleast_1d(np.asarray(delta, dtype=float))
    g_ang = g_uev / HBAR
    integrand = np.exp(kernel.phi) - 1.0
    phase = np.exp(-1j * np.outer(delta_arr, kernel.tau_grid))
    full = np.trapezoid(phase * integrand[None, :], kernel.tau_grid, axis=1)
    rate = 2.0 * kernel.b**2 * g_ang**2 * np.real(full)
    # the truncated algebraic tail of phi (~ -alpha_p / tau^2) leaves noise of
    # order 2 B^2 g^2 alpha_p / tau_mem on the one-sided transform
    noise = 2.0 * kernel.b**2 * g_ang**2 * abs(kernel.phi[-1]) * kernel.tau_mem
    floor = -(10.0 * noise + 1e-14)
    if np.any(rate < floor):
        raise QuadratureError(
            f"feeding rate came out negative ({rate.min():.3e}) beyond the "
            "kernel-truncation noise; oscillatory integral did not converge "
            "within tau_mem")
    rate = np.clip(rate, 0.0, None)
    scalar = np.isscalar(delta) or np.asarray(delta).ndim == 0
    if return_tail_flag:
        n_tail = max(2, len(kernel.tau_grid) // 10)
        tail = np.trapezoid(phase[:, -n_tail:] * integrand[None, -n_tail:],
                            kernel.tau_grid[-n_tail:], axis=1)
        tail_frac = np.abs(np.real(tail)) / np.maximum(np.abs(np.real(full)), 1e-300)
        flag = bool(np.any(tail_frac > 1e-3)) if not scalar else bool(tail_frac[0] > 1e-3)
        return (float(rate[0]) if scalar else rate), flag
    return float(rate[0]) if scalar else rate
