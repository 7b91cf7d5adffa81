"""The twelve acceptance criteria, each printing one PASS/FAIL line.

Preset runs are shared through a cache, so the first criterion that needs a
preset pays for it.
"""

import math
import time

import numpy as np

from spindd.checks import bounded_functional, energy_step_margins, energy_tolerance, s_bound_constant
from spindd.cli import main as cli_main
from spindd.coupling import CouplingConfig, run_simulation
from spindd.diagnostics import beta_threshold
from spindd.llg import g_inverse
from spindd.state import PhysParams
from spindd.studies import MMSKind, run_macrospin, run_mms_study

from _support import (ACCEPTANCE_LINES, ALL_PRESETS, UNREGULARIZED, preset_run, run_cfg, shrunk,
                      torus_case)


def report(n, title, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_unit_magnetization():
    worst, slowest = 0.0, 0.0
    for name in ALL_PRESETS:
        *_, res, secs = preset_run(name)
        worst = max(worst, float(res.trace.arrays()["m_defect"].max()))
        slowest = max(slowest, secs)
    report(1, "max | |m|-1 | on omega over every preset",
           worst <= 1e-12 and slowest < 60.0,
           f"defect {worst:.2e} <= 1e-12, slowest preset {slowest:.1f}s < 60s")


def test_criterion_02_charge_positivity():
    worst = min(float(preset_run(n)[4].trace.arrays()["min_rho"].min()) for n in ALL_PRESETS)
    report(2, "min rho over every preset", worst >= -1e-10, f"min rho {worst:.4g} >= -1e-10")


def test_criterion_03_gauss_conservation():
    rate = 0.0
    for name in UNREGULARIZED:
        tr = preset_run(name)[4].trace.arrays()
        per_time = np.maximum(tr["t"], 1.0)
        rate = max(rate, float(np.max(tr["driftE"] / per_time)), float(np.max(tr["driftH"] / per_time)))
    g, params, st = torus_case()
    tor = run_simulation(st, params, g, CouplingConfig(dt=0.02, t_end=1.0)).trace.arrays()
    torus = max(float(tor["driftE"].max()), float(tor["driftH"].max()))
    report(3, "interior Gauss drift per unit time, and on the torus harness",
           rate <= 1e-10 and torus <= 1e-13,
           f"preset drift rate {rate:.2e} <= 1e-10, torus drift {torus:.2e} <= 1e-13")


def test_criterion_04_free_energy_monotonicity():
    cfg, grid, params, state, res, secs = preset_run("interlayer")
    tr = res.trace.arrays()
    bmax, _ = beta_threshold(params, 2.0 * float(state.rho.max()))
    dt = cfg.coupling.dt
    tol = energy_tolerance(dt)
    dE, margin = energy_step_margins(tr, dt)
    split = bool(tr["split_ok"].all() and not tr["clamped"].any())
    ok = (math.isclose(params.beta, 0.5 * bmax) and split and len(dE) == len(tr["t"]) - 1
          and dE.max() <= tol and margin.min() >= -tol and secs < 300)
    report(4, "interlayer: E nonincreasing and -dE >= dt*diss - tol",
           ok, f"beta={params.beta:.4f}=0.5*{bmax:.4f}, rho>|s| {split}, max dE {dE.max():.2e}, "
               f"min margin {margin.min():.2e}, tol {tol:.2e}, {secs:.1f}s")


def test_criterion_05_beta_threshold():
    bmax, _ = beta_threshold(PhysParams(alpha=1.0, tau=1.0), 2.0)
    rng = np.random.default_rng(5)
    monotone = True
    for _ in range(2000):
        alpha, tau, M = rng.uniform(0.01, 10, 3)
        b = np.sort(rng.uniform(0, 5, 8))
        oks = [beta_threshold(PhysParams(alpha=alpha, tau=tau, beta=x), M)[1] for x in b]
        monotone &= all(not later or earlier for earlier, later in zip(oks, oks[1:]))
    report(5, "beta_max(1, 1, 2) and monotone ok-flag", bmax == 1.0 and monotone,
           f"beta_max={bmax!r}, ok monotone in beta over 2000 random cases: {monotone}")


def test_criterion_06_linf_growth():
    cfg, grid, params, state, res, _ = preset_run("moser")
    tr = res.trace.arrays()
    keep = tr["t"] <= 1.0 + 1e-12
    C = float(np.max(np.abs(params.doping(grid))))
    bound = 1.05 * np.exp(params.D * C * tr["t"][keep]) * tr["max_abs_s"][0]
    ratio = float(np.max(tr["max_abs_s"][keep] / bound))
    grew = float(tr["max_abs_s"][keep].max() / tr["max_abs_s"][0])
    report(6, "moser: ||s(t)|| <= 1.05 exp(D ||C|| t) ||s0|| for t <= 1", ratio <= 1.0,
           f"max ratio {ratio:.3f}, |s| grows x{grew:.2f}")


def test_criterion_07_g_map():
    rng = np.random.default_rng(7)
    n = 10**6
    t0 = time.perf_counter()
    m = rng.standard_normal((3, n))
    m /= np.linalg.norm(m, axis=0)
    alpha = rng.uniform(0.0, 10.0, n)
    f = rng.standard_normal((3, n)) * np.exp(rng.uniform(-12, 12, n))
    v = g_inverse(m, alpha, f)
    resid = np.linalg.norm(v - alpha * np.cross(m, v, axis=0) - f, axis=0)
    worst = float(np.max(resid / (1.0 + np.linalg.norm(f, axis=0))))
    secs = time.perf_counter() - t0
    report(7, "G-map residual over 10^6 random triples", worst <= 1e-12 and secs < 10,
           f"max scaled residual {worst:.2e} <= 1e-12, {secs:.2f}s < 10s")


def test_criterion_08_macrospin():
    prec = run_macrospin("precession", dt=1e-3)
    damp = run_macrospin("damping", dt=1e-3, t_end=20.0, alpha=1.0)
    report(8, "macrospin precession and damping oracles",
           prec.error <= 1e-5 and damp.m3_defect <= 1e-6,
           f"precession error {prec.error:.2e} <= 1e-5, |m3-1| {damp.m3_defect:.2e} <= 1e-6")


def test_criterion_09_mms_orders():
    tables = [run_mms_study(k, (32, 64, 128), min_order=0.0) for k in MMSKind]
    worst = min(min(t.orders) for t in tables)
    detail = ", ".join(f"{t.kind.name} {'/'.join(f'{o:.3f}' for o in t.orders)}" for t in tables)
    report(9, "MMS observed order on 32 -> 64 -> 128", worst >= 1.9, detail)


def test_criterion_10_homotopy_and_equilibrium():
    zero = shrunk("interlayer", n=64, t_end=0.5, initial={"profile": "zero"},
                  coupling={"sigma": 0.0})
    res0 = run_cfg(zero)[-1]
    nonzero = max(float(np.abs(f).max()) for f in res0.state.fields())
    _, _, _, st0, res, _ = preset_run("equilibrium")
    drift = max(float(np.abs(a - b).max()) for a, b in zip(res.state.fields(), st0.fields()))
    step = float(res.trace.arrays()["state_change"].max())
    report(10, "sigma=0 zero run and equilibrium stationarity",
           nonzero == 0.0 and drift <= 1e-9 and step <= 1e-9,
           f"sigma=0 max |field| {nonzero}, equilibrium drift {drift:.2e}, max step change {step:.2e}")


def test_criterion_11_s_bounded():
    worst, detail = 0.0, []
    finite = True
    for name in ALL_PRESETS:
        _, grid, params, _, res, _ = preset_run(name)
        tr = res.trace.arrays()
        Q = bounded_functional(tr, params.D)
        cap = s_bound_constant(float(tr["S"][0]), grid.area, float(tr["t"][-1]))
        finite &= bool(np.all(np.isfinite(Q))) and math.isclose(tr["t"][-1], 2.0)
        worst = max(worst, float(Q.max() / cap))
        detail.append(f"{name} {Q.max():.4g}/{cap:.4g}")
    report(11, "S + accumulated dissipation below (S0 + |Omega|) e^T on [0, 2]",
           finite and worst <= 1.0, ", ".join(detail))


def test_criterion_12_determinism(tmp_path):
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli_main(["run", "interlayer", "--t-end", "0.25", "--out", str(out)]) == 0
        blobs.append((out / "diagnostics.csv").read_bytes())
    report(12, "repeated CLI runs give byte-identical CSV", blobs[0] == blobs[1],
           f"{len(blobs[0])} bytes, {len(blobs[0].splitlines())} lines")
