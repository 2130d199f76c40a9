"""Single-point and sweep execution: phonon kernel -> evolution -> two-time
correlations -> metrics, with deterministic CSV/JSON output."""

from __future__ import annotations

import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import expm

from . import __version__
from . import analytic
from .params import (SimConfig, VModeTreatment, config_hash, config_from_dict,
                     load_config, HBAR)
from .phonon import tabulate_kernel, displacement_factor
from .liouvillian import build_context
from .evolve import run_evolution, Trajectory
from .correlations import (QRTEngine, CorrelationRequest, series_triangle_integrals,
                           g2_pop)
from .metrics import (MetricsReport, MetricUndefinedError, emission_probability,
                      purity_g2, indistinguishability, concurrence,
                      two_photon_density_matrix, spectrum_from_ftau,
                      default_omega_grid, TWO_PHOTON_BASIS)

SWEEP_AXES = ("e_bind", "g", "kappa", "mu_s", "temperature", "pulse_area", "pulse_sigma")
COUPLING_MODES = ("fixed_kappa", "kappa_tracks_g")


@dataclass
class RunRecord:
    axis: Optional[str]
    axis_value: Optional[float]
    metrics: Optional[MetricsReport]
    wall_time: float
    stats: dict
    version: str
    config_hash: str
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepSpec:
    axis: str
    values: list
    base: SimConfig
    coupling_mode: str = "fixed_kappa"
    kappa_over_g: float = 4.97

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {SWEEP_AXES}")
        if self.coupling_mode not in COUPLING_MODES:
            raise ValueError(f"unknown coupling mode {self.coupling_mode!r}")
        if not len(self.values):
            raise ValueError("sweep needs at least one value")


def apply_axis(config: SimConfig, axis: str, value: float,
               coupling_mode: str = "fixed_kappa", kappa_over_g: float = 4.97) -> SimConfig:
    """One sweep point: set the axis value, optionally slave kappa to B*g."""
    if axis == "e_bind":
        config = replace(config, qd=replace(config.qd, e_bind=float(value)))
    elif axis == "g":
        config = replace(config, cavity=replace(config.cavity, g=float(value)))
    elif axis == "kappa":
        config = replace(config, cavity=replace(config.cavity, kappa=float(value)))
    elif axis == "mu_s":
        config = replace(config, filter=replace(config.filter, mu_s=float(value)))
    elif axis == "temperature":
        config = replace(config, phonons=replace(config.phonons, temperature=float(value)))
    elif axis == "pulse_area":
        config = replace(config, pulse=replace(config.pulse, area=float(value)))
    elif axis == "pulse_sigma":
        config = replace(config, pulse=replace(config.pulse, sigma=float(value)))
    else:
        raise ValueError(f"unknown axis {axis!r}")
    if coupling_mode == "kappa_tracks_g":
        b = displacement_factor(config.phonons)
        config = replace(config, cavity=replace(
            config.cavity, kappa=kappa_over_g * b * config.cavity.g))
    return config


def run_point(config: SimConfig, dump_dir: Optional[str] = None,
              dump_trajectory: bool = False, dump_grids: bool = False,
              compute_spectrum: bool = True,
              compute_correlations: bool = True) -> RunRecord:
    """Full pipeline for one configuration.

    ``compute_correlations=False`` stops after the trajectory stage and
    reports only the emission (correlation metrics come back as NaN).
    """
    t_start = time.perf_counter()
    chash = config_hash(config)

    kernel = tabulate_kernel(config.phonons) if config.phonons.include_phonons else None
    ctx = build_context(config, kernel)
    d = ctx.dim
    propagator = None
    if d * d <= 5000:
        propagator = expm(ctx.build_superoperator() * config.numerics.dt_out)
    traj = run_evolution(ctx, config.numerics, propagator=propagator)

    filtered = config.filter.enabled
    pol = "S" if filtered else "H"
    if filtered:
        rate = config.cavity.kappa * (config.filter.mu_s / (2.0 * config.epsilon_s)) ** 2
    else:
        rate = config.cavity.kappa

    n_key = {"H": "n_h", "S": "n_s"}[pol]
    emission = emission_probability(traj.series(n_key), traj.times, rate)

    flags = list(ctx.approximation_flags) + ["spectrum_one_sided_2re"]
    validity = {
        "purcell_weak_coupling": analytic.purcell_weak_coupling(
            config, ctx.couplings.b),
        "filter_backaction_ok": not config.backaction_violated() if filtered else True,
    }
    extras = {
        "t_max": float(traj.t_max),
        "displacement_factor": float(ctx.couplings.b),
        "emission_cavity_h": emission_probability(traj.series("n_h"), traj.times,
                                                  config.cavity.kappa),
        "solver": {k: int(v) for k, v in traj.stats.items()},
        "n_anchors": int(len(traj.anchor_times)),
    }
    if "n_v" in traj.observables:
        extras["emission_cavity_v"] = emission_probability(
            traj.series("n_v"), traj.times, config.cavity.kappa)
    if config.pulse.enabled:
        extras["final_pop_xx"] = float(traj.series("pop_xx")[-1])
        extras["peak_pop_xx"] = float(np.max(traj.series("pop_xx")))

    if emission < 1e-12 or not compute_correlations:
        nan = float("nan")
        metrics = MetricsReport(
            emission=emission, purity=nan, indistinguishability=nan,
            visibility=nan, g2_zero=nan, concurrence=None,
            filtered=filtered, config_hash=chash,
            approximation_flags=tuple(flags), validity=validity, extras=extras)
        _maybe_dump(dump_dir, dump_trajectory, False, traj, None, metrics, config)
        return RunRecord(axis=None, axis_value=None, metrics=metrics,
                         wall_time=time.perf_counter() - t_start,
                         stats=traj.stats, version=__version__, config_hash=chash)

    mode_op = ctx.ops.mode_op(pol)
    requests = [
        CorrelationRequest(name="g1", a=mode_op.conj().T, b=mode_op, c=None,
                           pointwise=True, keep_grid=dump_grids,
                           grid_stride_t=8, grid_stride_tau=4),
        CorrelationRequest(name="g2", a=mode_op.conj().T,
                           b=mode_op.conj().T @ mode_op, c=mode_op,
                           pointwise=False, keep_grid=False),
    ]
    if config.compute_concurrence:
        if not ctx.layout.has_v:
            raise ValueError("concurrence needs the explicit V mode in the layout")
        b_ops = {"h": ctx.ops.ladder_b("H"), "v": ctx.ops.ladder_b("V")}
        for i1 in "hv":
            for i2 in "hv":
                for j1 in "hv":
                    for j2 in "hv":
                        requests.append(CorrelationRequest(
                            name=f"c_{i1}{i2}{j1}{j2}",
                            a=b_ops[i1].conj().T,
                            b=b_ops[i2].conj().T @ b_ops[j2],
                            c=b_ops[j1], pointwise=False))

    engine = QRTEngine(ctx, traj, propagator=propagator, numerics=config.numerics)
    results = engine.run(requests)

    int_gpop, int_mf = series_triangle_integrals(traj, pol)
    try:
        purity, g2_zero = purity_g2(results["g2"].integral, int_gpop)
        ind, vis = indistinguishability(
            None, results["g2"].integral, int_gpop,
            int_abs_g1_sq=results["g1"].integral_abs2, int_mean_field=int_mf)
    except MetricUndefinedError:
        nan = float("nan")
        extras["note"] = "correlation metrics undefined (no normalizable emission)"
        metrics = MetricsReport(
            emission=emission, purity=nan, indistinguishability=nan,
            visibility=nan, g2_zero=nan, concurrence=None, filtered=filtered,
            config_hash=chash, approximation_flags=tuple(flags),
            validity=validity, extras=extras)
        return RunRecord(axis=None, axis_value=None, metrics=metrics,
                         wall_time=time.perf_counter() - t_start,
                         stats=traj.stats, version=__version__, config_hash=chash)

    conc = None
    if config.compute_concurrence:
        integrals = {k[2:]: results[k].integral for k in results if k.startswith("c_")}
        conc = concurrence(two_photon_density_matrix(integrals))

    spec_e = spec_s = None
    if compute_spectrum:
        omega = default_omega_grid(config.qd.e_bind, config.qd.e_fss,
                                   config.cavity.kappa, traj.t_max)
        tau_grid = np.arange(len(results["g1"].f_tau)) * traj.dt_out
        spec_s = spectrum_from_ftau(results["g1"].f_tau, tau_grid, rate, omega)
        spec_e = omega * HBAR

    metrics = MetricsReport(
        emission=emission, purity=purity, indistinguishability=ind,
        visibility=vis, g2_zero=g2_zero, concurrence=conc,
        spectrum_energy=spec_e, spectrum=spec_s, filtered=filtered,
        config_hash=chash, approximation_flags=tuple(flags),
        validity=validity, extras=extras)

    _maybe_dump(dump_dir, dump_trajectory, dump_grids, traj,
                results.get("g1"), metrics, config)
    return RunRecord(axis=None, axis_value=None, metrics=metrics,
                     wall_time=time.perf_counter() - t_start,
                     stats=traj.stats, version=__version__, config_hash=chash)


def _maybe_dump(dump_dir, dump_trajectory, dump_grids, traj, g1_result, metrics, config):
    if dump_dir is None:
        return
    out = Path(dump_dir)
    out.mkdir(parents=True, exist_ok=True)
    if dump_trajectory:
        traj.dump_csv(str(out / "trajectory.csv"))
    if dump_grids and g1_result is not None and g1_result.grid is not None:
        g1_result.grid.dump_csv(str(out / "g1_grid.csv"))
        from .metrics import spectrum_map
        rate = config.cavity.kappa
        omega = default_omega_grid(config.qd.e_bind, config.qd.e_fss,
                                   config.cavity.kappa, traj.t_max)
        smap = spectrum_map(g1_result.grid, rate, omega)
        with open(out / "spectrum_map.csv", "w", encoding="utf-8") as fh:
            fh.write("t,energy_uev,s\n")
            for i, t in enumerate(g1_result.grid.t_grid):
                for k in range(0, len(omega), 4):
                    fh.write(f"{t:.10e},{omega[k] * HBAR:.10e},{smap[i, k]:.10e}\n")
    if metrics is not None:
        with open(out / "metrics.json", "w", encoding="utf-8") as fh:
            json.dump(metrics.to_dict(), fh, indent=2)


def _sweep_worker(args):
    index, base_dict, axis, value, coupling_mode, kappa_over_g = args
    try:
        base = config_from_dict(base_dict)
        config = apply_axis(base, axis, value, coupling_mode, kappa_over_g)
        record = run_point(config, compute_spectrum=False)
        record.axis = axis
        record.axis_value = float(value)
        return index, record
    except Exception:
        return index, RunRecord(axis=axis, axis_value=float(value), metrics=None,
                                wall_time=0.0, stats={}, version=__version__,
                                config_hash="", error=traceback.format_exc())


def run_sweep(spec: SweepSpec, threads: int = 0) -> list:
    """Execute all sweep points; results come back in input order.

    Points run in separate processes (``threads`` workers, 0 = one per CPU);
    per-point failures are recorded without aborting the sweep.
    """
    from .params import config_to_dict
    base_dict = config_to_dict(spec.base)
    jobs = [(i, base_dict, spec.axis, v, spec.coupling_mode, spec.kappa_over_g)
            for i, v in enumerate(spec.values)]
    n_workers = threads if threads > 0 else (os.cpu_count() or 1)
    n_workers = min(n_workers, len(jobs))
    results = [None] * len(jobs)
    if n_workers <= 1:
        for job in jobs:
            i, rec = _sweep_worker(job)
            results[i] = rec
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for i, rec in pool.map(_sweep_worker, jobs):
                results[i] = rec
    return results


CSV_HEADER = ("axis,value,emission,purity,indistinguishability,visibility,"
              "g2_zero,concurrence,purcell_weak_coupling,approximation_flags,"
              "config_hash,error")


def records_to_csv(records: list, path: str) -> None:
    """Deterministic sweep CSV: one row per point, %.10e floats, no timing."""
    def fmt(x):
        return "" if x is None or (isinstance(x, float) and not np.isfinite(x)) \
            else f"{x:.10e}"

    lines = [CSV_HEADER]
    for rec in records:
        if rec.metrics is None:
            lines.append(f"{rec.axis},{fmt(rec.axis_value)},,,,,,,,,,point_failed")
            continue
        m = rec.metrics
        lines.append(",".join([
            str(rec.axis), fmt(rec.axis_value), fmt(m.emission), fmt(m.purity),
            fmt(m.indistinguishability), fmt(m.visibility), fmt(m.g2_zero),
            fmt(m.concurrence),
            str(int(bool(m.validity.get("purcell_weak_coupling", False)))),
            ";".join(m.approximation_flags), m.config_hash, "",
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def records_to_json(records: list, path: str, include_spectrum: bool = False) -> None:
    payload = []
    for rec in records:
        payload.append({
            "axis": rec.axis, "value": rec.axis_value,
            "metrics": rec.metrics.to_dict(include_spectrum) if rec.metrics else None,
            "wall_time": rec.wall_time, "stats": {k: int(v) for k, v in rec.stats.items()},
            "version": rec.version, "config_hash": rec.config_hash,
            "error": rec.error,
        })
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def load_sweep_spec(path: str) -> SweepSpec:
    """Sweep file: {axis, values, coupling_mode?, kappa_over_g?, base_config | base}."""
    text = open(path, "rb").read().decode("utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(text)
    if "base_config" in data:
        base = load_config(str(Path(path).parent / data.pop("base_config")))
    elif "base" in data:
        base = config_from_dict(data.pop("base"))
    else:
        base = SimConfig()
    return SweepSpec(axis=data["axis"], values=list(data["values"]), base=base,
                     coupling_mode=data.get("coupling_mode", "fixed_kappa"),
                     kappa_over_g=float(data.get("kappa_over_g", 4.97)))
