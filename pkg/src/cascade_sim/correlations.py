"""Two-time correlation functions on the triangular (t, tau) domain via the
quantum regression theorem.

For operators A, B, C the regression theorem gives

    <A(t) B(t+tau) C(t)> = tr{ rhobar(tau) B },   rhobar(0) = C rho(t) A,

with rhobar evolving under the same master equation as rho.  Two evaluation
paths are provided:

* a streaming engine that advances the Hilbert-Schmidt dual of B once over
  the tau grid with the exact static propagator and contracts it against all
  anchor states per step (identical master equation, reorganized);  anchors
  inside a drive window are bridged with the adaptive RK4 integrator first;
* a direct per-anchor integration used for cross-checks and arbitrary
  time-dependent toy systems.

Both integrate the shorthand double-time domain 0 <= t <= t_max,
0 <= tau <= t_max - t with trapezoid weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .liouvillian import RHSContext
from .evolve import Trajectory, StepControl, step_rk4_adaptive
from .params import NumericsParams


@dataclass
class TwoTimeGrid:
    """Samples of a two-time function; row n is valid for the first
    valid_len[n] tau columns (triangular domain)."""
    t_grid: np.ndarray
    tau_grid: np.ndarray
    values: np.ndarray
    valid_len: np.ndarray
    kind: str = ""

    def triangle_integral(self) -> complex:
        """Double trapezoid integral over the triangular domain."""
        dtau = self.tau_grid[1] - self.tau_grid[0] if len(self.tau_grid) > 1 else 1.0
        row_ints = np.empty(len(self.t_grid), dtype=complex)
        for n in range(len(self.t_grid)):
            ln = self.valid_len[n]
            row_ints[n] = np.trapezoid(self.values[n, :ln], dx=dtau) if ln > 1 else 0.0
        if len(self.t_grid) < 2:
            return complex(0.0)
        return complex(np.trapezoid(row_ints, self.t_grid))

    def dump_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,tau,re,im\n")
            for n, t in enumerate(self.t_grid):
                for j in range(self.valid_len[n]):
                    v = self.values[n, j]
                    fh.write(f"{t:.10e},{self.tau_grid[j]:.10e},{v.real:.10e},{v.imag:.10e}\n")


@dataclass
class CorrelationRequest:
    name: str
    a: Optional[np.ndarray]       # operator applied at t from the right (None = identity)
    b: np.ndarray                 # observable at t + tau
    c: Optional[np.ndarray]       # operator applied at t from the left
    pointwise: bool = False       # also accumulate |G|^2
    keep_grid: bool = False
    grid_stride_t: int = 1
    grid_stride_tau: int = 1


@dataclass
class CorrelationResult:
    name: str
    integral: complex                       # double integral of G over the triangle
    integral_abs2: Optional[float] = None   # double integral of |G|^2
    f_tau: Optional[np.ndarray] = None      # t-integrated G per tau (spectrum input)
    grid: Optional[TwoTimeGrid] = None


class QRTEngine:
    """Evaluates batches of regression-theorem correlators on one trajectory."""

    def __init__(self, ctx: RHSContext, traj: Trajectory,
                 propagator: Optional[np.ndarray] = None,
                 numerics: Optional[NumericsParams] = None,
                 block: int = 64):
        self.ctx = ctx
        self.traj = traj
        self.d = ctx.dim
        self.dt = traj.dt_out
        self.stride = traj.anchor_stride
        self.numerics = numerics
        self.block = block
        if propagator is None:
            propagator = expm(ctx.build_superoperator() * self.dt)
        self.prop = propagator
        # anchors strictly inside the drive window get bridged with RK4
        self.n_bridge = int(np.sum(traj.anchor_times < traj.t_switch - 1e-9)) \
            if ctx.has_drive else 0

    # -- bridging ----------------------------------------------------------

    def _bridge(self, req: CorrelationRequest, n: int, n_tau: int):
        """RK4-evolve C rho(t_n) A from t_n to t_switch under the driven RHS.

        Returns (j0, prefix values G(t_n, tau_j) for j < j0, state at switch).
        """
        traj, ctx = self.traj, self.ctx
        t_n = traj.anchor_times[n]
        rho = traj.anchor_states[n].reshape(self.d, self.d)
        seed = rho if req.c is None else req.c @ rho
        seed = seed if req.a is None else seed @ req.a
        control = StepControl.from_numerics(self.numerics) if self.numerics \
            else StepControl()
        t_end = traj.t_switch
        j0 = int(round((t_end - t_n) / self.dt))
        values = np.zeros(j0, dtype=complex)
        values[0] = np.sum(seed.T * req.b)
        t = t_n
        h = control.h_init
        j = 1
        while j < j0 or t < t_end - 1e-9:
            t_next = min(t_n + j * self.dt, t_end)
            while t < t_next - 1e-9:
                h_try = min(h, t_next - t)
                new, h, ok = step_rk4_adaptive(ctx.rhs, t, seed, h_try, control)
                if ok:
                    t += h_try
                    seed = new
                elif h <= control.h_min * (1 + 1e-12):
                    raise RuntimeError(f"bridge step underflow at t={t:.4f}")
            if j < j0:
                values[j] = np.sum(seed.T * req.b)
            j += 1
        return j0, values, seed.reshape(-1)

    # -- main sweep ----------------------------------------------------------

    def run(self, requests: list) -> dict:
        traj = self.traj
        d, dt, stride = self.d, self.dt, self.stride
        m_max = len(traj.times) - 1
        n_tau = m_max + 1
        n_anchor = len(traj.anchor_times)
        nb = self.n_bridge
        h_t = stride * dt

        # aligned anchors start their tau evolution under the static generator
        r_aligned = traj.anchor_states[nb:]

        # Hilbert-Schmidt duals of the distinct B observables, advanced in tau
        base_keys = []
        base_index = {}
        for req in requests:
            key = req.b.tobytes()
            if key not in base_index:
                base_index[key] = len(base_keys)
                base_keys.append(req.b)
        rows = np.array([b.T.reshape(-1) for b in base_keys])

        state = {}
        for req in requests:
            bridges = []
            for n in range(nb):
                bridges.append(self._bridge(req, n, n_tau))
            g_bridge = np.zeros((nb, n_tau), dtype=complex)
            for n, (j0, prefix, _vec) in enumerate(bridges):
                g_bridge[n, :j0] = prefix
            state[req.name] = {
                "req": req,
                "base": base_index[req.b.tobytes()],
                "bridge_vecs": np.array([b[2] for b in bridges]).reshape(nb, d * d),
                "bridge_j0": np.array([b[0] for b in bridges], dtype=int),
                "g_bridge": g_bridge,
                "t_int": np.zeros(n_tau, dtype=complex),
                "abs2_int": np.zeros(n_tau) if req.pointwise else None,
                "grid_rows": [] if req.keep_grid else None,
            }

        valid_len_col = np.minimum((m_max - np.arange(n_tau)) // stride + 1, n_anchor)
        anchor_valid_rows = np.array(
            [max(0, (m_max - n * stride)) + 1 for n in range(n_anchor)])
        # per-row tau extent (count of valid tau samples for anchor n)
        row_valid = np.array([m_max - n * stride + 1 for n in range(n_anchor)])

        t_weights = np.full(n_anchor, h_t)
        # triangular column weights assembled per column below

        fold_cols = {req.name: np.zeros((d * d, self.block), dtype=complex)
                     for req in requests}

        for j_lo in range(0, n_tau, self.block):
            j_hi = min(j_lo + self.block, n_tau)
            width = j_hi - j_lo
            for j in range(j_lo, j_hi):
                if j > 0:
                    rows = rows @ self.prop
                for req in requests:
                    st = state[req.name]
                    row = rows[st["base"]]
                    # bridged anchors: value for future column j + j0
                    if nb:
                        vals = st["bridge_vecs"] @ row
                        cols = st["bridge_j0"] + j
                        ok = cols <= m_max
                        st["g_bridge"][np.nonzero(ok)[0], cols[ok]] = vals[ok]
                    mat = row.reshape(d, d)
                    folded = mat if req.c is None else req.c.T @ mat
                    folded = folded if req.a is None else folded @ req.a.T
                    fold_cols[req.name][:, j - j_lo] = folded.reshape(-1)

            for req in requests:
                st = state[req.name]
                g_aligned = r_aligned @ fold_cols[req.name][:, :width]
                for jj in range(width):
                    j = j_lo + jj
                    ln = valid_len_col[j]
                    if ln <= 0:
                        continue
                    col = np.empty(ln, dtype=complex)
                    n_br = min(nb, ln)
                    if n_br:
                        col[:n_br] = st["g_bridge"][:n_br, j]
                    if ln > nb:
                        col[n_br:] = g_aligned[:ln - nb, jj]
                    if ln == 1:
                        ti = 0.0
                        ab = 0.0
                    else:
                        w = np.full(ln, h_t)
                        w[0] = w[-1] = 0.5 * h_t
                        ti = w @ col
                        ab = w @ (col.real**2 + col.imag**2)
                    st["t_int"][j] = ti
                    if st["abs2_int"] is not None:
                        st["abs2_int"][j] = ab
                    if st["grid_rows"] is not None and j % req.grid_stride_tau == 0:
                        st["grid_rows"].append((j, col.copy()))

        out = {}
        for req in requests:
            st = state[req.name]
            integral = complex(np.trapezoid(st["t_int"], dx=dt))
            abs2 = float(np.trapezoid(st["abs2_int"], dx=dt)) if req.pointwise else None
            grid = None
            if req.keep_grid:
                grid = self._assemble_grid(req, st, row_valid, n_tau)
            out[req.name] = CorrelationResult(
                name=req.name, integral=integral, integral_abs2=abs2,
                f_tau=st["t_int"].copy(), grid=grid)
        return out

    def _assemble_grid(self, req, st, row_valid, n_tau):
        traj = self.traj
        cols = sorted(j for j, _ in st["grid_rows"])
        colmap = {j: col for j, col in st["grid_rows"]}
        t_sel = np.arange(0, len(traj.anchor_times), req.grid_stride_t)
        tau_sel = np.array(cols)
        values = np.zeros((len(t_sel), len(tau_sel)), dtype=complex)
        valid = np.zeros(len(t_sel), dtype=int)
        for jj, j in enumerate(tau_sel):
            col = colmap[j]
            for ii, n in enumerate(t_sel):
                if n < len(col):
                    values[ii, jj] = col[n]
        for ii, n in enumerate(t_sel):
            valid[ii] = int(np.sum(tau_sel <= row_valid[n] - 1))
        return TwoTimeGrid(
            t_grid=traj.anchor_times[t_sel],
            tau_grid=tau_sel * traj.dt_out,
            values=values, valid_len=valid, kind=req.name)


# --- spec-level operations -----------------------------------------------------


def qrt_correlator(ctx: RHSContext, traj: Trajectory, a, b, c,
                   propagator: Optional[np.ndarray] = None,
                   numerics: Optional[NumericsParams] = None,
                   method: str = "auto", name: str = "corr") -> TwoTimeGrid:
    """<A(t) B(t+tau) C(t)> on the trajectory's anchor/output grids."""
    if method == "direct":
        return qrt_correlator_direct(ctx, traj, a, b, c, numerics=numerics, name=name)
    engine = QRTEngine(ctx, traj, propagator=propagator, numerics=numerics)
    req = CorrelationRequest(name=name, a=a, b=b, c=c, pointwise=False, keep_grid=True)
    return engine.run([req])[name].grid


def qrt_correlator_direct(ctx: RHSContext, traj: Trajectory, a, b, c,
                          numerics: Optional[NumericsParams] = None,
                          name: str = "corr") -> TwoTimeGrid:
    """Per-anchor tau integration with the adaptive RK4; O(n_anchor * t_max)."""
    control = StepControl.from_numerics(numerics) if numerics else StepControl()
    d = ctx.dim
    m_max = len(traj.times) - 1
    dt = traj.dt_out
    n_anchor = len(traj.anchor_times)
    values = np.zeros((n_anchor, m_max + 1), dtype=complex)
    valid = np.zeros(n_anchor, dtype=int)
    for n, t_n in enumerate(traj.anchor_times):
        rho = traj.anchor_states[n].reshape(d, d)
        seed = rho if c is None else c @ rho
        seed = seed if a is None else seed @ a
        n_tau = m_max - n * traj.anchor_stride + 1
        valid[n] = n_tau
        values[n, 0] = np.sum(seed.T * b)
        t = t_n
        h = control.h_init
        for j in range(1, n_tau):
            t_next = t_n + j * dt
            while t < t_next - 1e-9:
                h_try = min(h, t_next - t)
                new, h, ok = step_rk4_adaptive(ctx.rhs, t, seed, h_try, control)
                if ok:
                    t += h_try
                    seed = new
                elif h <= control.h_min * (1 + 1e-12):
                    raise RuntimeError(f"direct correlator step underflow at t={t:.4f}")
            values[n, j] = np.sum(seed.T * b)
    return TwoTimeGrid(t_grid=traj.anchor_times.copy(),
                       tau_grid=np.arange(m_max + 1) * dt,
                       values=values, valid_len=valid, kind=name)


def g1(ctx: RHSContext, traj: Trajectory, pol: str = "H", **kw) -> TwoTimeGrid:
    """First-order coherence <a+(t) a(t+tau)> of the selected mode."""
    a_op = ctx.ops.mode_op(pol)
    return qrt_correlator(ctx, traj, a_op.conj().T, a_op, None,
                          name=f"g1_{pol.lower()}", **kw)


def g2_general(ctx: RHSContext, traj: Trajectory, i: str, j: str, k: str, l: str,
               ladder: str = "cavity", **kw) -> TwoTimeGrid:
    """<a_i+(t) a_j+(t+tau) a_l(t+tau) a_k(t)>; indices in {H, V} (or S).

    ladder="cascade" uses b_i = a_i + |X_i><XX| + |G><X_i| instead of the
    bare mode operators (entanglement analysis of the full cascade).
    """
    for idx in (i, j, k, l):
        if idx.upper() not in ("H", "V", "S"):
            raise ValueError(f"invalid polarization index {idx!r}")
    pick = (lambda p: ctx.ops.ladder_b(p)) if ladder == "cascade" else \
        (lambda p: ctx.ops.mode_op(p))
    op_i, op_j, op_k, op_l = pick(i), pick(j), pick(k), pick(l)
    return qrt_correlator(ctx, traj, op_i.conj().T, op_j.conj().T @ op_l, op_k,
                          name=f"g2_{i}{j}{k}{l}".lower(), **kw)


def g2_pop(traj: Trajectory, pol: str = "H") -> TwoTimeGrid:
    """Uncorrelated reference <n(t)> <n(t+tau)> from the photon-number series."""
    key = {"H": "n_h", "V": "n_v", "S": "n_s"}[pol.upper()]
    n_series = traj.series(key).real
    stride = traj.anchor_stride
    m_max = len(traj.times) - 1
    n_anchor = len(traj.anchor_times)
    values = np.zeros((n_anchor, m_max + 1))
    valid = np.zeros(n_anchor, dtype=int)
    for n in range(n_anchor):
        n_tau = m_max - n * stride + 1
        valid[n] = n_tau
        values[n, :n_tau] = n_series[n * stride] * n_series[n * stride:]
    return TwoTimeGrid(t_grid=traj.anchor_times.copy(),
                       tau_grid=np.arange(m_max + 1) * traj.dt_out,
                       values=values.astype(complex), valid_len=valid,
                       kind=f"g2_pop_{pol.lower()}")


def series_triangle_integrals(traj: Trajectory, pol: str = "H"):
    """(int int G2_pop, int int |<a(t+tau)><a+(t)>|^2) without building grids."""
    key = {"H": ("n_h", "a_h"), "V": ("n_v", "a_v"), "S": ("n_s", "s")}[pol.upper()]
    n_series = traj.series(key[0]).real
    alpha = traj.series(key[1])
    amp2 = np.abs(alpha) ** 2
    stride = traj.anchor_stride
    dt = traj.dt_out
    h_t = stride * dt
    m_max = len(traj.times) - 1
    n_anchor = len(traj.anchor_times)
    n_tau = m_max + 1
    gpop_tau = np.zeros(n_tau)
    mf_tau = np.zeros(n_tau)
    for j in range(n_tau):
        ln = min((m_max - j) // stride + 1, n_anchor)
        if ln <= 1:
            continue
        w = np.full(ln, h_t)
        w[0] = w[-1] = 0.5 * h_t
        n_t = n_series[:ln * stride:stride]
        n_ttau = n_series[j:j + (ln - 1) * stride + 1:stride]
        gpop_tau[j] = w @ (n_t * n_ttau)
        a_t = amp2[:ln * stride:stride]
        a_ttau = amp2[j:j + (ln - 1) * stride + 1:stride]
        mf_tau[j] = w @ (a_t * a_ttau)
    return float(np.trapezoid(gpop_tau, dx=dt)), float(np.trapezoid(mf_tau, dx=dt))
