"""Invariant suite evaluated on a finished run (used by ``spindd check`` and the tests)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import CouplingConfig, SimulationResult
from .grid import Grid
from .state import PhysParams

M_DEFECT_TOL = 1e-12
POSITIVITY_TOL = 1e-10
GAUSS_DRIFT_RATE = 1e-10
LINF_SLACK = 1.05


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}: {self.value:.6g} vs {self.limit:.6g}{extra}"


def energy_tolerance(dt):
    return 1e-6 + 10.0 * dt * dt


def s_bound_constant(S0, area, T):
    """A priori cap for S plus the accumulated dissipation integrals."""
    return (S0 + area) * math.exp(T)


def bounded_functional(tr, D):
    """S(t) + c1 (int int |grad rho|^2 + |grad s|^2 + int int_omega |dm/dt|^2) with c1 = min(D,1)/2."""
    c1 = 0.5 * min(D, 1.0)
    return tr["S"] + c1 * (tr["grad_integral"] + tr["dtm_integral"])


def energy_step_margins(tr, dt):
    """Per-step (dE, -dE - dt * trapezoid(diss)) over intervals where the hypotheses hold."""
    E = tr["E_total"]
    diss = tr["diss_rate"]
    ok = tr["split_ok"] & ~tr["clamped"]
    usable = ok[1:] & ok[:-1]
    dE = np.diff(E)
    margin = -dE - dt * 0.5 * (diss[1:] + diss[:-1])
    return dE[usable], margin[usable]


def invariant_checks(result: SimulationResult, params: PhysParams, grid: Grid,
                     cfg: CouplingConfig, regularized=False, energy=True,
                     dissipation=False, beta_ok=True):
    """Evaluate the run-level invariants; returns a list of :class:`CheckResult`."""
    tr = result.trace.arrays()
    t = tr["t"]
    T = float(t[-1]) if len(t) else 0.0
    out = []

    if grid.omega.any():
        v = float(tr["m_defect"].max())
        out.append(CheckResult("unit magnetization", v <= M_DEFECT_TOL, v, M_DEFECT_TOL))
    v = float(tr["min_rho"].min())
    out.append(CheckResult("charge positivity", v >= -POSITIVITY_TOL, v, -POSITIVITY_TOL))

    if not regularized:
        allowed = GAUSS_DRIFT_RATE * np.maximum(t, 1.0)
        for key, label in (("driftE", "Gauss law div E = rho - C"),
                           ("driftH", "Gauss law div(H + m) = 0")):
            worst = float(np.max(tr[key] / allowed))
            out.append(CheckResult(label, worst <= 1.0, float(tr[key].max()),
                                   GAUSS_DRIFT_RATE * max(T, 1.0), "interior drift"))

    Q = bounded_functional(tr, params.D)
    cap = s_bound_constant(float(tr["S"][0]), grid.area, T)
    out.append(CheckResult("S boundedness", bool(np.all(np.isfinite(Q)) and Q.max() <= cap),
                           float(Q.max()), cap))

    s0 = float(tr["max_abs_s"][0])
    C_inf = float(np.max(np.abs(params.doping(grid))))
    bound = LINF_SLACK * np.exp(params.D * C_inf * t) * s0
    ratio = np.divide(tr["max_abs_s"], bound, out=np.zeros_like(bound), where=bound > 0)
    zero_ok = bool(np.all(tr["max_abs_s"][bound == 0] == 0))
    out.append(CheckResult("spin L-infinity growth", bool(ratio.max() <= 1.0 and zero_ok),
                           float(ratio.max()), 1.0, "max |s| / (1.05 exp(D|C| t) |s0|)"))

    if energy and not regularized and beta_ok:
        tol = energy_tolerance(cfg.dt)
        dE, margin = energy_step_margins(tr, cfg.dt)
        if len(dE):
            out.append(CheckResult("free energy nonincreasing", float(dE.max()) <= tol,
                                   float(dE.max()), tol, "max per-step increase"))
            if dissipation:
                out.append(CheckResult("dissipation inequality", float(margin.min()) >= -tol,
                                       float(margin.min()), -tol,
                                       "min of -dE - dt*diss per step"))
    return out
