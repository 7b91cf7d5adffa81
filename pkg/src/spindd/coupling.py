"""Per-step fixed-point coupling of Maxwell, LLG and transport, and the time loop."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (DiagnosticsRecord, dissipation_rate, free_energy, functional_S,
                          m_defect, make_record, spin_norm)
from .errors import ConvergenceError, DataError, SpinDDError
from .grid import Field, Grid, grad2
from .llg import LLGConfig, advance_llg
from .maxwell import MaxwellSources, em_energy_and_residuals, gauss_residuals, step_maxwell
from .regularization import RegParams, TimeSmoother, smooth_space
from .state import PhysParams, SimState, truncate, validate_initial
from .transport import TransportConfig, compute_fluxes, step_transport


@dataclass(frozen=True)
class CouplingConfig:
    dt: float = 0.005
    t_end: float = 1.0
    output_every: int = 1
    sigma: float = 1.0
    picard_tol: float = 1e-8
    picard_max: int = 50
    reverse_order: bool = False  # sensitivity studies only
    maxwell_cfl: float = 0.5
    validate: bool = True
    validate_tol: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")
        if not self.picard_tol > 0 or self.picard_max < 1:
            raise ValueError("picard_tol must be positive and picard_max >= 1")
        if not self.dt > 0 or self.t_end < 0 or self.output_every < 1:
            raise ValueError("need dt > 0, t_end >= 0, output_every >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0


@dataclass
class StepReport:
    picard_iters: int
    final_residual: float
    wallclock: float
    residuals: list = field(default_factory=list)
    llg_substeps: int = 1


@dataclass
class Solvers:
    """Sub-solver settings bundled for the coupling loop."""

    transport: TransportConfig = field(default_factory=TransportConfig)
    llg: LLGConfig = field(default_factory=LLGConfig)
    reg: RegParams = field(default_factory=RegParams)


def _rel_change(new, old):
    num = sum(float(np.linalg.norm(a - b)) for a, b in zip(new, old))
    if num == 0.0:
        return 0.0
    den = sum(float(np.linalg.norm(a)) for a in new)
    return num / max(den, 1e-300)


def _ampere_source(rho_star, rho_old, E_drift, flux_Je, params, grid, sigma, reg: RegParams):
    """sigma D (grad R(rho*) - [rho]_M E); equal to the transport flux when sigma=1, eps_x=0."""
    if sigma == 1.0 and reg.eps_x == 0:
        return flux_Je
    contacts = params.contact_values(sigma)
    smoothed = smooth_space(rho_star, reg.eps_x, grid)
    diff = params.D * grad2(smoothed, grid, Field.RHO, contacts)
    drift = -params.D * truncate(rho_old, params.M_trunc) * E_drift[:2]
    return sigma * (diff + drift)


def fixed_point_step(state: SimState, params: PhysParams, grid: Grid, cfg: CouplingConfig,
                     solvers: Solvers | None = None, smoother: TimeSmoother | None = None):
    """Advance one step by Picard iteration over the sub-solves I (Maxwell), II (LLG), III (transport).

    Returns ``(new_state, StepReport)``. ``smoother`` carries the history of m
    when time regularization is on; it is not modified here.
    """
    solvers = solvers or Solvers()
    t0 = time.perf_counter()
    dt, sigma = cfg.dt, cfg.sigma
    rho0, s0, E0, H0, m0 = state.rho, state.s, state.E, state.H, state.m

    def dm_source(m_new):
        if smoother is not None and solvers.reg.eps_t > 0:
            return -sigma * smoother.trial_rate(m_new) * grid.omega
        return -sigma * (m_new - m0) / dt

    def transport(E_k, m_k):
        E_drift = 0.5 * (E0 + E_k)
        st = step_transport(rho0, s0, E_drift, m_k, params, solvers.transport, dt, grid, sigma)
        je = np.zeros((3,) + grid.shape)
        je[:2] = _ampere_source(st.rho, rho0, E_drift, st.flux.Je, params, grid, sigma,
                                solvers.reg)
        return st, je

    je = np.zeros((3,) + grid.shape)
    je[:2] = sigma * compute_fluxes(rho0, s0, E0, params, grid, sigma).Je
    dm = np.zeros_like(m0)
    prev = (rho0, s0, m0, E0, H0)
    s_k = s0
    residuals = []
    substeps = 1
    for k in range(1, cfg.picard_max + 1):
        if cfg.reverse_order:
            st, je_new = transport(prev[3], prev[2])
            m_k, substeps = advance_llg(m0, H0, st.s, params, solvers.llg, dt, grid, sigma)
            E_k, H_k = step_maxwell(E0, H0, MaxwellSources(je_new, dm_source(m_k)), dt, grid,
                                    cfg.maxwell_cfl)
            je = je_new
        else:
            E_k, H_k = step_maxwell(E0, H0, MaxwellSources(je, dm), dt, grid, cfg.maxwell_cfl)
            m_k, substeps = advance_llg(m0, H0, s_k, params, solvers.llg, dt, grid, sigma)
            st, je = transport(E_k, m_k)
        dm = dm_source(m_k)
        s_k = st.s
        cur = (st.rho, st.s, m_k, E_k, H_k)
        res = _rel_change(cur, prev)
        residuals.append(res)
        prev = cur
        if not math.isfinite(res):
            raise DataError("non-finite Picard iterate")
        if res <= cfg.picard_tol:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not reach {cfg.picard_tol:g} in {cfg.picard_max} iterations",
            residual=residuals[-1], iterations=cfg.picard_max)

    # closing Maxwell pass with the converged sources makes both Gauss laws exact
    E_new, H_new = step_maxwell(E0, H0, MaxwellSources(je, dm), dt, grid, cfg.maxwell_cfl)
    new = SimState(st.rho, st.s, E_new, H_new, m_k, state.t + dt)
    report = StepReport(k, residuals[-1], time.perf_counter() - t0, residuals, substeps)
    return new, report


@dataclass
class StepTrace:
    """Per-step scalars kept in memory for the acceptance checks."""

    t: list = field(default_factory=list)
    S: list = field(default_factory=list)
    E_total: list = field(default_factory=list)
    diss_rate: list = field(default_factory=list)
    clamped: list = field(default_factory=list)
    split_ok: list = field(default_factory=list)
    min_rho: list = field(default_factory=list)
    max_rho: list = field(default_factory=list)
    max_abs_s: list = field(default_factory=list)
    m_defect: list = field(default_factory=list)
    resE: list = field(default_factory=list)
    resH: list = field(default_factory=list)
    driftE: list = field(default_factory=list)  # interior max |r_E(t) - r_E(0)|
    driftH: list = field(default_factory=list)
    grad_integral: list = field(default_factory=list)  # int_0^t int |grad rho|^2 + |grad s|^2
    dtm_integral: list = field(default_factory=list)  # int_0^t int_omega |dm/dt|^2
    picard_iters: list = field(default_factory=list)
    state_change: list = field(default_factory=list)

    def arrays(self):
        return {k: np.asarray(v) for k, v in self.__dict__.items()}


@dataclass
class SimulationResult:
    state: SimState
    records: list
    reports: list
    trace: StepTrace


def _gradient_energy(state: SimState, params: PhysParams, grid: Grid, sigma):
    g_rho = grad2(state.rho, grid, Field.RHO, params.contact_values(sigma))
    g_s = grad2(state.s, grid, Field.SPIN)
    return grid.integrate(np.sum(g_rho**2, axis=0) + np.sum(g_s**2, axis=(0, 1)))


def _residual_fields(st: SimState, params, grid):
    return gauss_residuals(st.E, st.H, st.m, st.rho, params.doping(grid), grid)


def _trace_point(trace: StepTrace, st: SimState, params, grid, iters, change, ref):
    fe = free_energy(st, params, grid)
    C = params.doping(grid)
    _, resE, resH = em_energy_and_residuals(st.E, st.H, st.m, st.rho, C, grid)
    rE, rH = _residual_fields(st, params, grid)
    inner = grid.interior
    trace.driftE.append(float(np.max(np.abs(rE - ref[0])[inner])))
    trace.driftH.append(float(np.max(np.abs(rH - ref[1])[inner])))
    trace.t.append(st.t)
    trace.S.append(functional_S(st, params.rho_D_field(grid), grid))
    trace.E_total.append(fe.E_total)
    trace.diss_rate.append(dissipation_rate(st, params, grid))
    trace.clamped.append(fe.clamped)
    trace.split_ok.append(bool(np.all(st.rho > spin_norm(st.s))))
    trace.min_rho.append(float(st.rho.min()))
    trace.max_rho.append(float(st.rho.max()))
    trace.max_abs_s.append(float(spin_norm(st.s).max()))
    trace.m_defect.append(m_defect(st.m, grid))
    trace.resE.append(resE)
    trace.resH.append(resH)
    trace.picard_iters.append(iters)
    trace.state_change.append(change)


def run_simulation(initial: SimState, params: PhysParams, grid: Grid, cfg: CouplingConfig,
                   solvers: Solvers | None = None, on_record=None, on_snapshot=None,
                   snapshot_every=0, scale_initial=True) -> SimulationResult:
    """Run from ``initial`` to ``cfg.t_end``.

    ``on_record(DiagnosticsRecord)`` is called at t = 0, every
    ``output_every`` steps and at the final time; ``on_snapshot(state)`` every
    ``snapshot_every`` steps when that is positive. The homotopy parameter
    scales the initial data once, here.
    """
    solvers = solvers or Solvers()
    if cfg.validate and cfg.sigma > 0:
        rep = validate_initial(initial, params, grid, cfg.validate_tol)
        if not rep.passed:
            raise DataError(f"initial data rejected: {rep}")
    state = initial.scaled(cfg.sigma) if scale_initial and cfg.sigma != 1.0 else initial
    smoother = TimeSmoother(solvers.reg.eps_t, cfg.dt, state.m) if solvers.reg.eps_t > 0 else None

    records: list[DiagnosticsRecord] = []
    reports: list[StepReport] = []
    trace = StepTrace()
    M_T = float(state.rho.max())

    def emit(st, iters):
        rec = make_record(st, params, grid, iters, M_T)
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    ref = _residual_fields(state, params, grid)
    _trace_point(trace, state, params, grid, 0, 0.0, ref)
    trace.grad_integral.append(0.0)
    trace.dtm_integral.append(0.0)
    emit(state, 0)
    if on_snapshot is not None and snapshot_every > 0:
        on_snapshot(state)
    g_prev = _gradient_energy(state, params, grid, cfg.sigma)

    n = cfg.n_steps
    for step in range(1, n + 1):
        try:
            new, rep = fixed_point_step(state, params, grid, cfg, solvers, smoother)
        except SpinDDError as exc:
            exc.args = (f"at t={state.t:.6g}: {exc.args[0] if exc.args else ''}",) + exc.args[1:]
            raise
        if not new.is_finite():
            raise DataError(f"at t={new.t:.6g}: non-finite state")
        new = new.replace(t=initial.t + step * cfg.dt)
        if smoother is not None:
            smoother.commit(new.m)
        change = max(float(np.max(np.abs(a - b))) for a, b in zip(new.fields(), state.fields()))
        g_new = _gradient_energy(new, params, grid, cfg.sigma)
        dtm = (new.m - state.m) / cfg.dt
        trace.grad_integral.append(trace.grad_integral[-1] + 0.5 * cfg.dt * (g_prev + g_new))
        trace.dtm_integral.append(trace.dtm_integral[-1]
                                  + cfg.dt * grid.integrate(np.sum(dtm * dtm, axis=0)))
        g_prev = g_new
        M_T = max(M_T, float(new.rho.max()))
        state = new
        reports.append(rep)
        _trace_point(trace, state, params, grid, rep.picard_iters, change, ref)
        if step % cfg.output_every == 0 or step == n:
            emit(state, rep.picard_iters)
        if on_snapshot is not None and snapshot_every > 0 and step % snapshot_every == 0:
            on_snapshot(state)
    return SimulationResult(state, records, reports, trace)
