import numpy as np
import pytest
from dataclasses import replace

from cascade_sim.params import (SimConfig, QDParams, CavityParams, PhononParams,
                                NumericsParams, HBAR)
from cascade_sim.hilbert import basis_state, XH, XX, G
from cascade_sim.liouvillian import build_context, toy_context
from cascade_sim.evolve import (StepControl, step_rk4_adaptive, rk4_step,
                                integrate, run_evolution, SolverError)
from cascade_sim import analytic

NO_PHONONS = PhononParams(include_phonons=False, include_deph=False, temperature=0.0)


def _decay_ctx(gamma=5.0):
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    return toy_context(np.zeros((2, 2)), [(gamma, sm)])


def test_rk4_local_error_order():
    # single-step error against the exact exponential decay scales as h^5
    gamma = 40.0
    ctx = _decay_ctx(gamma)
    rho0 = np.array([[0, 0], [0, 1]], dtype=complex)
    hs = np.array([0.5, 0.25, 0.125, 0.0625, 0.03125])
    errs = []
    for h in hs:
        num = rk4_step(ctx.rhs, 0.0, rho0, h)
        exact = np.diag([1 - np.exp(-gamma * h / HBAR),
                         np.exp(-gamma * h / HBAR)]).astype(complex)
        errs.append(np.max(np.abs(num - exact)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(5.0, abs=0.3)


def test_step_doubling_error_estimate_scales():
    gamma = 40.0
    ctx = _decay_ctx(gamma)
    rho0 = np.array([[0, 0], [0, 1]], dtype=complex)
    control = StepControl(rtol=1e-12, atol=1e-14, h_init=0.1, h_min=1e-9, h_max=1.0)
    # estimated error (rejected steps) behaves ~ h^5: step acceptance flips
    _, _, acc_small = step_rk4_adaptive(ctx.rhs, 0.0, rho0, 0.001, control)
    _, _, acc_big = step_rk4_adaptive(ctx.rhs, 0.0, rho0, 0.8, control)
    assert acc_small and not acc_big


def test_zero_rhs_grows_step():
    ctx = toy_context(np.zeros((2, 2)), [])
    rho = np.diag([0.25, 0.75]).astype(complex)
    control = StepControl(h_init=0.01, h_max=1.0)
    h = control.h_init
    for _ in range(8):
        rho_new, h, acc = step_rk4_adaptive(ctx.rhs, 0.0, rho, h, control)
        assert acc
        np.testing.assert_array_equal(rho_new, rho)
    assert h == control.h_max


def test_ground_state_constant_trajectory():
    cfg = SimConfig(initial_state="ground", phonons=NO_PHONONS,
                    numerics=NumericsParams(t_max=20.0))
    ctx = build_context(cfg)
    traj = run_evolution(ctx, cfg.numerics, force_rk4=True)
    assert np.max(traj.series("n_h")) == pytest.approx(0.0, abs=1e-14)
    assert np.min(traj.series("pop_g")) == pytest.approx(1.0, abs=1e-12)


def test_purcell_photon_number_conservation():
    # one excitation, resonant cavity, no side channels: exactly one photon leaks out
    cfg = SimConfig(qd=QDParams(e_bind=0.0, e_fss=0.0, gamma_rad_x=0.0,
                                gamma_rad_xx=0.0),
                    phonons=NO_PHONONS,
                    numerics=NumericsParams(t_max=400.0))
    ctx = build_context(cfg)
    rho0 = basis_state(ctx.layout, XH)
    traj = run_evolution(ctx, cfg.numerics, rho0=rho0)
    emitted = cfg.cavity.kappa / HBAR * np.trapezoid(traj.series("n_h"), traj.times)
    assert emitted == pytest.approx(1.0, abs=1e-3)


def test_xx_decay_rate_matches_analytic_sum():
    cfg = SimConfig(phonons=NO_PHONONS, numerics=NumericsParams(t_max=120.0))
    ctx = build_context(cfg)
    traj = run_evolution(ctx, cfg.numerics)
    rates = analytic.full_decay_rates(cfg, b=1.0)
    sel = (traj.times > 5) & (traj.times < 60)
    fit = -np.polyfit(traj.times[sel], np.log(traj.series("pop_xx")[sel]), 1)[0]
    assert fit == pytest.approx(rates.gamma_xx / HBAR, rel=0.05)


def test_trace_and_hermiticity_drift():
    cfg = SimConfig(phonons=PhononParams(temperature=4.2),
                    numerics=NumericsParams(t_max=200.0))
    ctx = build_context(cfg, frame="cascade")
    traj = run_evolution(ctx, cfg.numerics)
    assert traj.stats["renormalizations"] == 0
    d = ctx.dim
    for vec in traj.anchor_states[::40]:
        rho = vec.reshape(d, d)
        assert abs(np.trace(rho).real - 1.0) < 1e-6
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-10


def test_tolerance_tightening_self_consistency():
    cfg = SimConfig(phonons=NO_PHONONS, numerics=NumericsParams(
        t_max=80.0, rtol=1e-6, atol=1e-8))
    ctx = build_context(cfg)
    loose = run_evolution(ctx, cfg.numerics, force_rk4=True)
    tight_num = replace(cfg.numerics, rtol=1e-8, atol=1e-10)
    tight = run_evolution(ctx, tight_num, force_rk4=True)
    diff = np.max(np.abs(loose.series("pop_xx") - tight.series("pop_xx")))
    assert diff < 1e-6


def test_auto_tmax_detects_decay():
    cfg = SimConfig(qd=QDParams(e_bind=0.0, e_fss=0.0),
                    phonons=NO_PHONONS)
    ctx = build_context(cfg)
    traj = run_evolution(ctx, cfg.numerics)
    th = cfg.numerics.ground_state_threshold
    assert traj.series("pop_g")[-1] >= 1.0 - th
    assert traj.series("n_h")[-1] < th
    # X_H is Purcell-enhanced at zero binding; X_V (split off by the V mode)
    # sets the remaining ~270 ps clock
    assert traj.t_max < 4000.0


def test_step_underflow_raises():
    # a wildly stiff toy (rate far above what h_min can resolve at rtol)
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    ctx = toy_context(np.zeros((2, 2)), [(1e12, sm)])
    rho0 = np.array([[0, 0], [0, 1]], dtype=complex)
    control = StepControl(rtol=1e-13, atol=1e-16, h_init=0.01, h_min=0.009,
                          h_max=0.01)
    with pytest.raises(SolverError, match="underflow"):
        integrate(rho0, ctx, control, NumericsParams(t_max=1.0), force_rk4=True)


def test_propagator_matches_rk4():
    cfg = SimConfig(phonons=PhononParams(temperature=4.2),
                    numerics=NumericsParams(t_max=60.0))
    from cascade_sim.phonon import tabulate_kernel
    kern = tabulate_kernel(cfg.phonons)
    ctx = build_context(cfg, kern)
    fast = run_evolution(ctx, cfg.numerics)
    slow = run_evolution(ctx, cfg.numerics, force_rk4=True)
    for key in ("pop_xx", "pop_g", "n_h", "n_v"):
        assert np.max(np.abs(fast.series(key) - slow.series(key))) < 1e-6


def test_trajectory_csv_dump(tmp_path):
    cfg = SimConfig(phonons=NO_PHONONS, numerics=NumericsParams(t_max=10.0))
    ctx = build_context(cfg)
    traj = run_evolution(ctx, cfg.numerics)
    path = tmp_path / "traj.csv"
    traj.dump_csv(str(path))
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "t"
    assert "pop_xx" in header and "n_h" in header
    assert len(path.read_text().splitlines()) == len(traj.times) + 1
