import numpy as np
import pytest

from spindd.coupling import CouplingConfig, Solvers, fixed_point_step, run_simulation
from spindd.errors import ConvergenceError, DataError
from spindd.state import PhysParams, SimState

from _support import run_cfg, shrunk, small_grid, torus_case


def test_homotopy_zero_stays_zero():
    cfg = shrunk("interlayer", n=24, t_end=0.05, initial={"profile": "zero"},
                 coupling={"sigma": 0.0})
    *_, res = run_cfg(cfg)
    for f in res.state.fields():
        assert np.all(f == 0)


def test_sigma_zero_scales_any_data_away():
    cfg = shrunk("interlayer", n=24, t_end=0.02, coupling={"sigma": 0.0})
    *_, res = run_cfg(cfg)
    assert all(np.all(f == 0) for f in res.state.fields())


def test_equilibrium_is_stationary():
    cfg = shrunk("equilibrium", n=24, t_end=0.1)
    _, _, st0, res = run_cfg(cfg)
    for a, b in zip(res.state.fields(), st0.fields()):
        assert np.abs(a - b).max() < 1e-9


def test_zero_duration_gives_single_record():
    cfg = shrunk("interlayer", n=24, t_end=0.0)
    *_, res = run_cfg(cfg)
    assert len(res.records) == 1 and res.records[0].t == 0.0 and not res.reports


def test_output_cadence_and_snapshots():
    cfg = shrunk("interlayer", n=24, t_end=0.05)  # 10 steps
    grid, params, state = cfg.build()
    snaps = []
    cc = CouplingConfig(dt=cfg.coupling.dt, t_end=0.05, output_every=4)
    res = run_simulation(state, params, grid, cc, cfg.solvers, on_snapshot=snaps.append,
                         snapshot_every=5)
    assert [round(r.t / cc.dt) for r in res.records] == [0, 4, 8, 10]
    assert [round(s.t / cc.dt) for s in snaps] == [0, 5, 10]


def test_determinism():
    cfg = shrunk("interlayer", n=24, t_end=0.05)
    a = run_cfg(cfg)[-1]
    b = run_cfg(cfg)[-1]
    assert [r.row() for r in a.records] == [r.row() for r in b.records]
    for x, y in zip(a.state.fields(), b.state.fields()):
        assert np.array_equal(x, y)


def test_picard_residuals_contract():
    cfg = shrunk("interlayer", n=32, t_end=0.05)
    *_, res = run_cfg(cfg)
    for rep in res.reports:
        r = rep.residuals
        assert all(b < a for a, b in zip(r, r[1:]))
        assert rep.final_residual <= cfg.coupling.picard_tol


def test_picard_count_with_step_size():
    cfg = shrunk("interlayer", n=32, t_end=0.04)
    h = cfg.spec.hx
    counts = []
    for dt in (0.1 * h, 0.05 * h, 0.025 * h):
        *_, res = run_cfg(cfg, dt=dt, t_end=4 * dt)
        counts.append(max(r.picard_iters for r in res.reports))
    assert counts[0] <= 5
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_reverse_order_reaches_same_fixed_point():
    cfg = shrunk("interlayer", n=24, t_end=0.02)
    a = run_cfg(cfg)[-1].state
    b = run_cfg(cfg, reverse_order=True)[-1].state
    for x, y in zip(a.fields(), b.fields()):
        assert np.abs(x - y).max() < 1e-6


def test_picard_budget_exhaustion():
    cfg = shrunk("interlayer", n=24, t_end=0.01)
    grid, params, state = cfg.build()
    cc = CouplingConfig(dt=0.005, t_end=0.01, picard_max=1, picard_tol=1e-14)
    with pytest.raises(ConvergenceError, match="at t=0"):
        run_simulation(state, params, grid, cc, cfg.solvers)


def test_inconsistent_initial_data_rejected():
    g = small_grid(12)
    st = SimState.zeros(g).replace(rho=np.full(g.shape, 2.0))
    m = np.zeros((3,) + g.shape)
    m[2] = g.omega
    with pytest.raises(DataError, match="rejected"):
        run_simulation(st.replace(m=m), PhysParams(), g, CouplingConfig(dt=0.01, t_end=0.01))


def test_torus_gauss_laws_exact():
    g, params, st = torus_case()
    res = run_simulation(st, params, g, CouplingConfig(dt=0.02, t_end=0.4))
    tr = res.trace.arrays()
    assert tr["driftE"].max() < 1e-13
    assert tr["driftH"].max() < 1e-13
    assert tr["m_defect"].max() < 1e-13


def test_regularized_step_runs_and_keeps_unit_m():
    cfg = shrunk("regularized", n=24, t_end=0.05)
    *_, res = run_cfg(cfg)
    tr = res.trace.arrays()
    assert tr["m_defect"].max() < 1e-12 and tr["min_rho"].min() > 0


def test_single_step_report():
    cfg = shrunk("precession", n=24, t_end=0.005)
    grid, params, state = cfg.build()
    new, rep = fixed_point_step(state, params, grid, cfg.coupling, Solvers())
    assert new.t == pytest.approx(0.005)
    assert rep.picard_iters == len(rep.residuals) and rep.llg_substeps >= 1
