"""Manufactured-solution convergence studies and macrospin oracle runs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AccuracyError
from .grid import BC, GridSpec, Rect, Side, build_grid, lap_neumann
from .llg import LLGScheme, macrospin, torque
from .maxwell import MaxwellSources, step_maxwell
from .state import PhysParams
from .transport import TransportConfig, step_transport


class MMSKind(enum.Enum):
    TRANSPORT = "transport"
    MAXWELL = "maxwell"
    LLG_EXCHANGE = "llg_exchange"


@dataclass
class ConvergenceTable:
    kind: MMSKind
    n: list
    errors: list
    orders: list

    def __str__(self):
        lines = [f"{self.kind.name}:  n        L2 error     order"]
        for i, (n, e) in enumerate(zip(self.n, self.errors)):
            o = f"{self.orders[i - 1]:.3f}" if i else "  -"
            lines.append(f"  {n:>5d}  {e:.6e}  {o}")
        return "\n".join(lines)


NEUMANN_ALL = {s: BC.NEUMANN for s in Side}


def _l2(err, grid):
    return math.sqrt(grid.integrate(np.sum(np.atleast_3d(err) ** 2)
                                    if err.ndim == 2 else np.sum(err**2, axis=0)))


def transport_source(x, y, t, D=1.0, a=0.5):
    """Source for rho* = 2 + exp(-t) cos(pi x) cos(pi y) under the field E = a (sin pi x, sin pi y)."""
    pi = math.pi
    c = np.cos(pi * x) * np.cos(pi * y)
    et = math.exp(-t)
    rho = 2.0 + et * c
    rx = -pi * et * np.sin(pi * x) * np.cos(pi * y)
    ry = -pi * et * np.cos(pi * x) * np.sin(pi * y)
    Ex, Ey = a * np.sin(pi * x), a * np.sin(pi * y)
    divE = a * pi * (np.cos(pi * x) + np.cos(pi * y))
    return -et * c + 2 * pi**2 * D * et * c + D * (rx * Ex + ry * Ey + rho * divE)


def mms_transport_error(n, t_end=0.02, D=1.0, a=0.5, dt_factor=0.5):
    grid = build_grid(GridSpec(n, n), bc_layout=NEUMANN_ALL)
    h = grid.hx
    steps = max(1, math.ceil(t_end / (dt_factor * h * h)))
    dt = t_end / steps
    params = PhysParams(D=D)
    E = np.zeros((3,) + grid.shape)
    E[0], E[1] = a * np.sin(np.pi * grid.x), a * np.sin(np.pi * grid.y)
    rho = 2.0 + np.cos(np.pi * grid.x) * np.cos(np.pi * grid.y)
    s = np.zeros((3,) + grid.shape)
    m = np.zeros_like(s)
    cfg = TransportConfig(linsolve_tol=1e-14)
    for k in range(1, steps + 1):
        f = transport_source(grid.x, grid.y, k * dt, D, a)
        rho = step_transport(rho, s, E, m, params, cfg, dt, grid, rho_source=f).rho
    exact = 2.0 + math.exp(-t_end) * np.cos(np.pi * grid.x) * np.cos(np.pi * grid.y)
    return math.sqrt(grid.integrate((rho - exact) ** 2))


def maxwell_mode(x, y, t):
    w = math.pi * math.sqrt(2.0)
    E = np.zeros((3,) + x.shape)
    H = np.zeros_like(E)
    E[2] = np.sin(np.pi * x) * np.cos(np.pi * y) * math.cos(w * t)
    H[0] = (np.pi / w) * np.sin(np.pi * x) * np.sin(np.pi * y) * math.sin(w * t)
    H[1] = (np.pi / w) * np.cos(np.pi * x) * np.cos(np.pi * y) * math.sin(w * t)
    return E, H


def mms_maxwell_error(n, t_end=0.5, courant=0.4):
    grid = build_grid(GridSpec(n, n))
    steps = math.ceil(t_end / (courant * grid.hx))
    dt = t_end / steps
    E, H = maxwell_mode(grid.x, grid.y, 0.0)
    src = MaxwellSources.zeros(grid)
    for _ in range(steps):
        E, H = step_maxwell(E, H, src, dt, grid)
    Ee, He = maxwell_mode(grid.x, grid.y, t_end)
    return math.sqrt(grid.integrate(np.sum((E - Ee) ** 2 + (H - He) ** 2, axis=0)))


def exchange_profile(x, a=0.25, b=0.75, theta0=0.6):
    """m = (sin th, 0, cos th) with th = theta0 cos(pi (x-a)/(b-a)) and its exact Laplacian."""
    k = math.pi / (b - a)
    th = theta0 * np.cos(k * (x - a))
    d1 = -theta0 * k * np.sin(k * (x - a))
    d2 = -theta0 * k * k * np.cos(k * (x - a))
    m = np.stack([np.sin(th), np.zeros_like(th), np.cos(th)])
    lap = np.stack([np.cos(th) * d2 - np.sin(th) * d1**2, np.zeros_like(th),
                    -np.sin(th) * d2 - np.cos(th) * d1**2])
    return m, lap


def mms_exchange_error(n, a=0.25, b=0.75):
    grid = build_grid(GridSpec(n, n), Rect(a, b, a, b))
    om = grid.omega
    m, lap = exchange_profile(grid.x, a, b)
    m, lap = m * om, lap * om
    err = lap_neumann(m, grid, om) - lap
    return math.sqrt(grid.integrate(np.sum(err**2, axis=0)))


_ERROR_FN = {
    MMSKind.TRANSPORT: mms_transport_error,
    MMSKind.MAXWELL: mms_maxwell_error,
    MMSKind.LLG_EXCHANGE: mms_exchange_error,
}


def observed_orders(errors):
    return [math.log2(e0 / e1) for e0, e1 in zip(errors[:-1], errors[1:])]


def run_mms_study(kind, ladder=(32, 64, 128), min_order=1.5) -> ConvergenceTable:
    """Errors on a grid ladder; AccuracyError if the finest-pair order is below ``min_order``."""
    kind = MMSKind(kind)
    if len(ladder) < 3:
        raise ValueError("need at least three grids")
    errors = [_ERROR_FN[kind](int(n)) for n in ladder]
    table = ConvergenceTable(kind, list(ladder), errors, observed_orders(errors))
    if table.orders[-1] < min_order:
        raise AccuracyError(f"{kind.name}: finest-pair order {table.orders[-1]:.3f} < {min_order}\n"
                            f"{table}")
    return table


# -- macrospin ----------------------------------------------------------------

def precession_exact(t):
    """alpha = 0, h = z, m0 = x."""
    return np.array([math.cos(t), -math.sin(t), 0.0])


def damping_exact(t, theta0, alpha, phi0=0.0):
    """Unit field along z: tan(th/2) decays like exp(-alpha t) while the azimuth turns at rate -1."""
    th = 2.0 * math.atan(math.tan(0.5 * theta0) * math.exp(-alpha * t))
    ph = phi0 - t
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def macrospin_reference(m0, h, alpha, t_end):
    """High-accuracy reference trajectory end point from an adaptive Runge-Kutta solver."""
    h = np.asarray(h, dtype=float)
    sol = solve_ivp(lambda t, y: torque(y, h, alpha), (0.0, t_end), np.asarray(m0, dtype=float),
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


@dataclass
class MacrospinResult:
    kind: str
    t_end: float
    m_final: np.ndarray
    reference: np.ndarray
    error: float
    m3_defect: float


def run_macrospin(kind="precession", dt=1e-3, t_end=None, alpha=None, theta0=math.pi / 4,
                  scheme=LLGScheme.EXPLICIT_RK2_PROJECT) -> MacrospinResult:
    """'precession': alpha=0 quarter period; 'damping': alpha=1 alignment at t=20."""
    h = np.array([0.0, 0.0, 1.0])
    if kind == "precession":
        alpha = 0.0 if alpha is None else alpha
        t_end = math.pi / 2 if t_end is None else t_end
        m0 = np.array([1.0, 0.0, 0.0])
    elif kind == "damping":
        alpha = 1.0 if alpha is None else alpha
        t_end = 20.0 if t_end is None else t_end
        m0 = np.array([math.sin(theta0), 0.0, math.cos(theta0)])
    else:
        raise ValueError(f"unknown macrospin kind {kind!r}")
    n = max(1, round(t_end / dt))
    dt = t_end / n
    traj = macrospin(m0, h, alpha, dt, n, scheme)
    if kind == "precession" and alpha == 0.0:
        ref = precession_exact(t_end)
    else:
        ref = damping_exact(t_end, math.acos(m0[2]), alpha)
    return MacrospinResult(kind, t_end, traj[-1], ref, float(np.max(np.abs(traj[-1] - ref))),
                           float(abs(traj[-1][2] - 1.0)))
