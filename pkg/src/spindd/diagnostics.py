"""Certified quantities: S(t), free energy, dissipation rate, L^p ladder, beta threshold."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field

import numpy as np

from .errors import DataError
from .grid import Field, Grid, face_differences, grad2, pad
from .maxwell import em_energy_and_residuals
from .state import PhysParams, SimState

CSV_COLUMNS = ("t", "S", "E_total", "E_spin", "E_em", "E_ex", "min_rho", "max_rho", "max_abs_s",
               "max_m_defect", "resE", "resH", "picard_iters", "beta_ok", "diss_rate")
DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    rho_plus: np.ndarray
    rho_minus: np.ndarray


def spin_norm(s):
    return np.sqrt(np.sum(s * s, axis=0))


def spectral_split(rho, s):
    """Eigenvalues rho +- |s| of the 2x2 spin density matrix, and whether rho > |s| everywhere."""
    a = spin_norm(np.asarray(s, dtype=float))
    rho = np.asarray(rho, dtype=float)
    return SpectralSplit(rho + a, rho - a), bool(np.all(rho > a))


def exchange_energy(m, grid: Grid) -> float:
    """1/2 sum over faces inside omega of |dm/h|^2, times the cell area."""
    dx, dy = face_differences(m, grid, grid.omega)
    return 0.5 * grid.cell_area * float(np.sum(dx * dx) + np.sum(dy * dy))


def functional_S(state: SimState, rho_D, grid: Grid) -> float:
    dr = state.rho - rho_D
    bulk = dr * dr + np.sum(state.s**2 + state.E**2 + state.H**2, axis=0)
    return 0.5 * grid.integrate(bulk) + exchange_energy(state.m, grid)


def _rho_D_array(params: PhysParams, grid: Grid, rho_D=None):
    rd = params.rho_D_field(grid) if rho_D is None else np.broadcast_to(rho_D, grid.shape)
    if not np.all(rd > 0):
        raise DataError("rho_D must be positive")
    return rd


@dataclass(frozen=True)
class FreeEnergy:
    E_total: float
    E_spin: float
    E_em: float
    E_ex: float
    clamped: bool


def _xlogx(z):
    return z * (np.log(z) - 1.0)


def free_energy(state: SimState, params: PhysParams, grid: Grid, floor=DEFAULT_FLOOR,
                rho_D=None) -> FreeEnergy:
    rd = _rho_D_array(params, grid, rho_D)
    split, _ = spectral_split(state.rho, state.s)
    clamped = bool(np.any(split.rho_minus < floor))
    rp = np.maximum(split.rho_plus, floor)
    rm = np.maximum(split.rho_minus, floor)
    log_rd = np.log(rd)
    e_spin = 0.5 * grid.integrate(_xlogx(rp) + _xlogx(rm) - 2.0 * log_rd * (state.rho - rd))
    g = grad2(log_rd, grid, Field.FREE)
    dE = state.E.copy()
    dE[:2] -= g
    e_em = 0.5 * grid.integrate(np.sum(dE * dE, axis=0) + np.sum(state.H**2, axis=0))
    e_ex = exchange_energy(state.m, grid)
    return FreeEnergy(e_spin + e_em + e_ex, e_spin, e_em, e_ex, clamped)


def log_density_gradients(rho, s, params: PhysParams, grid: Grid, floor=DEFAULT_FLOOR, sigma=1.0):
    """Central gradients of log(clamped rho+-), using the boundary ghosts of rho and |s|."""
    contacts = params.contact_values(sigma)
    a = spin_norm(s)
    out = []
    for axis, h in ((0, grid.hx), (1, grid.hy)):
        rp = pad(rho, grid, axis, Field.RHO, dirichlet=contacts)
        ap = pad(a, grid, axis, Field.FREE)
        pair = []
        for sign in (1.0, -1.0):
            lg = np.log(np.maximum(rp + sign * ap, floor))
            d = lg[..., 2:] - lg[..., :-2] if axis == 0 else lg[..., 2:, :] - lg[..., :-2, :]
            pair.append(d / (2.0 * h))
        out.append(pair)
    grad_plus = np.stack([out[0][0], out[1][0]])
    grad_minus = np.stack([out[0][1], out[1][1]])
    return grad_plus, grad_minus


def dissipation_rate(state: SimState, params: PhysParams, grid: Grid, floor=DEFAULT_FLOOR):
    """1/2 sum D(rho+ |grad log rho+ - E|^2 + rho- |grad log rho- - E|^2); NaN unless rho > |s|."""
    split, ok = spectral_split(state.rho, state.s)
    if not ok:
        return math.nan
    gp, gm = log_density_gradients(state.rho, state.s, params, grid, floor)
    Ep = state.E[:2]
    integrand = split.rho_plus * np.sum((gp - Ep) ** 2, axis=0) \
        + split.rho_minus * np.sum((gm - Ep) ** 2, axis=0)
    return 0.5 * params.D * grid.integrate(integrand)


@dataclass(frozen=True, eq=False)
class LpLadder:
    p: tuple
    norms: np.ndarray
    sup: float


def lp_ladder(s, grid: Grid, p_list=(2, 4, 8, 16, 32, 64, 128, 256)) -> LpLadder:
    """Normalized norms (mean |s|^p)^(1/p); computed relative to the sup to avoid overflow."""
    a = spin_norm(np.asarray(s, dtype=float))
    sup = float(a.max())
    if sup == 0:
        return LpLadder(tuple(p_list), np.zeros(len(p_list)), 0.0)
    r = a / sup
    norms = np.array([sup * float(np.mean(r**p)) ** (1.0 / p) for p in p_list])
    return LpLadder(tuple(p_list), norms, sup)


def beta_threshold(params: PhysParams, M_T: float):
    """Largest coupling beta for which the free energy is certified to decay."""
    alpha, tau = params.alpha, params.tau
    if not (alpha > 0 and tau > 0 and M_T > 0):
        raise DataError("alpha, tau and M_T must be positive")
    beta_max = math.sqrt(4.0 * alpha / (tau * M_T * (1.0 + alpha * alpha)))
    return beta_max, bool(params.beta <= beta_max)


@dataclass
class DiagnosticsRecord:
    t: float
    S: float
    E_total: float
    E_spin: float
    E_em: float
    E_ex: float
    min_rho: float
    max_rho: float
    max_abs_s: float
    max_m_defect: float
    resE: float
    resH: float
    picard_iters: int
    beta_ok: bool
    diss_rate: float
    clamped: bool = field(default=False, compare=False)

    def row(self):
        return astuple(self)[: len(CSV_COLUMNS)]


def m_defect(m, grid: Grid) -> float:
    om = grid.omega
    if not om.any():
        return 0.0
    return float(np.max(np.abs(spin_norm(m)[om] - 1.0)))


def make_record(state: SimState, params: PhysParams, grid: Grid, picard_iters=0, M_T=None,
                floor=DEFAULT_FLOOR) -> DiagnosticsRecord:
    rd = _rho_D_array(params, grid)
    fe = free_energy(state, params, grid, floor)
    C = params.doping(grid)
    _, resE, resH = em_energy_and_residuals(state.E, state.H, state.m, state.rho, C, grid)
    if M_T is None:
        M_T = float(state.rho.max())
    _, ok = beta_threshold(params, max(M_T, floor))
    return DiagnosticsRecord(
        t=float(state.t), S=functional_S(state, rd, grid), E_total=fe.E_total, E_spin=fe.E_spin,
        E_em=fe.E_em, E_ex=fe.E_ex, min_rho=float(state.rho.min()), max_rho=float(state.rho.max()),
        max_abs_s=float(spin_norm(state.s).max()), max_m_defect=m_defect(state.m, grid),
        resE=resE, resH=resH, picard_iters=int(picard_iters), beta_ok=ok,
        diss_rate=dissipation_rate(state, params, grid, floor), clamped=fe.clamped)
