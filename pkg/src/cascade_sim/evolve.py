"""Time evolution of the density matrix.

Two propagation backends share one observable-recording path:

* adaptive 4th-order Runge-Kutta with step doubling (handles the drive
  pulse and arbitrary time dependence),
* exact exponential stepping with the dense static generator (used whenever
  the right-hand side is time-independent; one expm, then one matrix-vector
  product per output step).

A trajectory records observables on a uniform output grid and keeps density
matrices at a coarser anchor grid for the two-time correlation stage.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .params import NumericsParams, InitialState, HBAR
from .liouvillian import RHSContext
from .hilbert import initial_density_matrix


class SolverError(RuntimeError):
    """Integration failed (step underflow or invariant violation)."""


@dataclass(frozen=True)
class StepControl:
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float = 0.01
    h_min: float = 1e-7
    h_max: float = 1.0
    ground_state_threshold: float = 1e-5

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_numerics(cls, num: NumericsParams) -> "StepControl":
        return cls(rtol=num.rtol, atol=num.atol, h_init=num.h_init,
                   h_min=num.h_min, h_max=num.h_max,
                   ground_state_threshold=num.ground_state_threshold)


@dataclass
class Trajectory:
    times: np.ndarray
    observables: dict
    anchor_times: np.ndarray
    anchor_states: np.ndarray      # (n_anchor, dim*dim), row-major vec
    anchor_stride: int
    dt_out: float
    t_switch: float
    t_max: float
    rho_final: np.ndarray
    stats: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return self.observables[name]

    def dump_csv(self, path: str) -> None:
        names = list(self.observables)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for i, t in enumerate(self.times):
                row = [f"{t:.10e}"]
                for n in names:
                    v = self.observables[n][i]
                    row.append(f"{v.real:.10e}" if np.iscomplexobj(v) and abs(v.imag) < 1e-12
                               else (f"{v:.10e}" if not np.iscomplexobj(v) else f"{v.real:.10e}{v.imag:+.10e}j"))
                fh.write(",".join(row) + "\n")


class HistoryBuffer:
    """State history on a coarse uniform grid for the memory-convolution mode."""

    def __init__(self, dt: float, tau_mem: float, shape):
        self.dt = dt
        self.n_keep = int(np.ceil(tau_mem / dt)) + 2
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.shape = shape
        self._cell_cache = {}

    def push(self, t: float, rho: np.ndarray) -> None:
        if self.times and t <= self.times[-1] + 1e-12:
            return
        self.times.append(t)
        self.states.append(rho.copy())
        if len(self.times) > self.n_keep * 4:
            self.times = self.times[-2 * self.n_keep:]
            self.states = self.states[-2 * self.n_keep:]

    def cell_grid(self, kernel):
        """Midpoint cells on [0, tau_mem] with kernel-integrated weights."""
        key = id(kernel)
        if key not in self._cell_cache:
            edges = np.arange(0.0, kernel.tau_mem + self.dt / 2, self.dt)
            mids = 0.5 * (edges[:-1] + edges[1:])

            def weights(which, lam):
                g = {"g": kernel.g_g, "u": kernel.g_u}[which]
                vals = g * np.exp(-1j * lam * kernel.tau_grid)
                out = np.empty(len(mids), dtype=complex)
                for i in range(len(mids)):
                    sel = (kernel.tau_grid >= edges[i]) & (kernel.tau_grid <= edges[i + 1])
                    out[i] = np.trapezoid(vals[sel], kernel.tau_grid[sel])
                return out

            self._cell_cache[key] = (mids, weights)
        return self._cell_cache[key]

    def sample(self, times, rho_now: np.ndarray, t_now: float) -> np.ndarray:
        """States at the requested times; zero before t=0, rho_now at the head."""
        out = np.zeros((len(times),) + self.shape, dtype=complex)
        if not self.times:
            for i, t in enumerate(times):
                if t >= 0:
                    out[i] = rho_now
            return out
        ts = np.array(self.times)
        for i, t in enumerate(times):
            if t < 0:
                continue
            if t >= ts[-1]:
                out[i] = rho_now
                continue
            k = int(np.searchsorted(ts, t, side="right")) - 1
            k = max(k, 0)
            t0, t1 = ts[k], ts[min(k + 1, len(ts) - 1)]
            if t1 <= t0 + 1e-15:
                out[i] = self.states[k]
            else:
                w = (t - t0) / (t1 - t0)
                out[i] = (1 - w) * self.states[k] + w * self.states[k + 1]
        return out


def rk4_step(f: Callable, t: float, rho: np.ndarray, h: float, history=None) -> np.ndarray:
    k1 = f(t, rho, history)
    k2 = f(t + 0.5 * h, rho + 0.5 * h * k1, history)
    k3 = f(t + 0.5 * h, rho + 0.5 * h * k2, history)
    k4 = f(t + h, rho + h * k3, history)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4_adaptive(f: Callable, t: float, rho: np.ndarray, h: float,
                      control: StepControl, history=None):
    """One attempted step-doubling RK4 step.

    Returns (rho_new, h_next, accepted); the error estimate is the max norm
    of (two half steps - one full step) / 15.
    """
    full = rk4_step(f, t, rho, h, history)
    half = rk4_step(f, t, rho, 0.5 * h, history)
    two_half = rk4_step(f, t + 0.5 * h, half, 0.5 * h, history)
    err = np.max(np.abs(two_half - full)) / 15.0
    tol = control.atol + control.rtol * np.max(np.abs(rho))
    accepted = err <= tol
    factor = 0.9 * (tol / max(err, 1e-300)) ** 0.2
    h_next = float(np.clip(h * np.clip(factor, 0.2, 5.0), control.h_min, control.h_max))
    return (two_half if accepted else rho), h_next, accepted


class _Recorder:
    """Accumulates observables / anchors while either backend advances."""

    def __init__(self, ctx: RHSContext, dt_out: float, anchor_stride: int):
        self.dt_out = dt_out
        self.anchor_stride = anchor_stride
        names, rows = observable_rows(ctx)
        self.names = names
        self.rows = rows
        self.times: list[float] = []
        self.values: list[np.ndarray] = []
        self.anchor_times: list[float] = []
        self.anchor_states: list[np.ndarray] = []
        self._i = 0

    def record(self, t: float, vec: np.ndarray) -> None:
        self.times.append(t)
        self.values.append(self.rows @ vec)
        if self._i % self.anchor_stride == 0:
            self.anchor_times.append(t)
            self.anchor_states.append(vec.copy())
        self._i += 1

def observable_rows(ctx: RHSContext):
    """Stack tr(O rho) functionals as rows acting on vec(rho)."""
    ops = ctx.ops
    entries = []
    if ops is not None:
        for lbl in ("G", "XH", "XV", "XX"):
            entries.append((f"pop_{lbl.lower()}", ops.projectors[lbl]))
        entries.append(("n_h", ops.n_h))
        entries.append(("a_h", ops.a_h))
        if ops.a_v is not None:
            entries.append(("n_v", ops.n_v))
            entries.append(("a_v", ops.a_v))
        if ops.s is not None:
            entries.append(("n_s", ops.n_s))
            entries.append(("s", ops.s))
    else:
        eye = np.eye(ctx.dim, dtype=complex)
        entries.append(("trace", eye))
    names = [n for n, _ in entries]
    rows = np.array([op.T.reshape(-1) for _, op in entries])
    return names, rows


def _ground_reached(obs_vals: dict, control: StepControl) -> bool:
    th = control.ground_state_threshold
    if obs_vals.get("pop_g", 0.0).real < 1.0 - th:
        return False
    for key in ("n_h", "n_v", "n_s"):
        if key in obs_vals and obs_vals[key].real >= th:
            return False
    return True


def integrate(rho0: np.ndarray, ctx: RHSContext, control: StepControl,
              numerics: NumericsParams, force_rk4: bool = False,
              propagator: Optional[np.ndarray] = None) -> Trajectory:
    """Evolve rho0 and record observables until t_max (fixed or auto-detected).

    Auto-detection stops once the electronic ground-state population exceeds
    1 - threshold and every photon number sits below the threshold (only
    checked after any drive pulse has passed).  The RK4 backend covers any
    driven window; the remainder advances with the exact exponential of the
    static generator unless ``force_rk4`` is set.
    """
    dt = numerics.dt_out
    stride = max(1, int(round(numerics.anchor_dt / dt)))
    rec = _Recorder(ctx, dt, stride)
    stats = {"rk4_accepted": 0, "rk4_rejected": 0, "prop_steps": 0,
             "renormalizations": 0}

    t_switch = 0.0
    if ctx.has_drive:
        t_switch = float(np.ceil(ctx.t_switch / (stride * dt)) * (stride * dt))

    t_max = numerics.t_max
    hard_cap = t_max if t_max is not None else numerics.t_max_cap
    d = ctx.dim
    rho = rho0.astype(complex).copy()
    vec = rho.reshape(-1)
    rec.record(0.0, vec)

    history = None
    if ctx.history_convolution and ctx.kernel is not None:
        history = HistoryBuffer(dt=min(0.1, ctx.kernel.tau_mem / 20), shape=rho.shape,
                                tau_mem=ctx.kernel.tau_mem)
        history.push(0.0, rho)

    def check_and_renorm(rho, t):
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-6:
            raise SolverError(f"trace drifted to {tr:.9f} at t={t:.2f} ps")
        if abs(tr - 1.0) > 1e-9:
            stats["renormalizations"] += 1
            warnings.warn(f"renormalizing trace ({tr - 1.0:+.2e}) at t={t:.2f} ps",
                          stacklevel=2)
            rho /= tr
        if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
            raise SolverError(f"density matrix lost Hermiticity at t={t:.2f} ps")
        return rho

    # --- RK4 over the driven window (or everything when forced) -----------
    use_prop = (propagator is not None or d * d <= 5000) and not force_rk4
    rk4_end = t_switch if use_prop else hard_cap
    t = 0.0
    i_out = 0
    h = control.h_init
    auto = numerics.t_max is None
    stopped = False
    while t < rk4_end - 1e-9 and not stopped:
        i_out += 1
        t_next = min(i_out * dt, rk4_end)
        while t < t_next - 1e-9:
            h_try = min(h, t_next - t)
            rho_new, h, accepted = step_rk4_adaptive(ctx.rhs, t, rho, h_try, control, history)
            if accepted:
                t += h_try
                rho = rho_new
                stats["rk4_accepted"] += 1
                if history is not None:
                    history.push(t, rho)
            else:
                stats["rk4_rejected"] += 1
                if h <= control.h_min * (1 + 1e-12):
                    raise SolverError(
                        f"step size underflow at t={t:.4f} ps (stiffness?); "
                        f"accepted={stats['rk4_accepted']} rejected={stats['rk4_rejected']}")
        t = t_next
        rho = check_and_renorm(rho, t)
        vec = rho.reshape(-1)
        rec.record(t, vec)
        if auto and t >= t_switch:
            last = {n: rec.values[-1][i] for i, n in enumerate(rec.names)}
            stopped = _ground_reached(last, control)
        if t >= hard_cap - 1e-9:
            stopped = True

    # --- exponential stepping over the static tail ------------------------
    if use_prop and not stopped and t < hard_cap - 1e-9:
        if propagator is None:
            sup = ctx.build_superoperator()
            propagator = expm(sup * dt)
        vec = rho.reshape(-1).copy()
        while t < hard_cap - 1e-9:
            vec = propagator @ vec
            i_out += 1
            t = i_out * dt
            stats["prop_steps"] += 1
            tr = vec.reshape(d, d).trace().real
            if abs(tr - 1.0) > 1e-6:
                raise SolverError(f"trace drifted to {tr:.9f} at t={t:.2f} ps")
            if abs(tr - 1.0) > 1e-9:
                stats["renormalizations"] += 1
                vec = vec / tr
            rec.record(t, vec)
            if auto:
                last = {n: rec.values[-1][i] for i, n in enumerate(rec.names)}
                if _ground_reached(last, control):
                    break
        rho = vec.reshape(d, d)

    vals = np.array(rec.values)
    obs = {n: vals[:, i] for i, n in enumerate(rec.names)}
    for n in list(obs):
        if n.startswith(("pop_", "n_", "trace")):
            obs[n] = obs[n].real
    traj = Trajectory(
        times=np.array(rec.times), observables=obs,
        anchor_times=np.array(rec.anchor_times),
        anchor_states=np.array(rec.anchor_states),
        anchor_stride=stride, dt_out=dt, t_switch=t_switch,
        t_max=rec.times[-1], rho_final=rho, stats=stats)
    if numerics.t_max is None and traj.t_max >= numerics.t_max_cap - 1e-9:
        warnings.warn(f"auto t_max hit the cap at {traj.t_max:.0f} ps before decay "
                      "completed", stacklevel=2)
    return traj


def run_evolution(ctx: RHSContext, numerics: NumericsParams,
                  rho0: Optional[np.ndarray] = None,
                  propagator: Optional[np.ndarray] = None,
                  force_rk4: bool = False) -> Trajectory:
    """Standard entry point: initial state from the config, then integrate."""
    if rho0 is None:
        rho0 = initial_density_matrix(ctx.config, ctx.layout)
    control = StepControl.from_numerics(numerics)
    return integrate(rho0, ctx, control, numerics, force_rk4=force_rk4,
                     propagator=propagator)
