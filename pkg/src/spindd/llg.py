"""Landau-Lifshitz-Gilbert dynamics on the ferromagnetic cells."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import StabilityError
from .grid import Grid, lap_neumann
from .state import PhysParams


class LLGScheme(enum.Enum):
    EXPLICIT_RK2_PROJECT = "rk2"
    GILBERT_FORM = "gilbert"


@dataclass(frozen=True)
class LLGConfig:
    eps_exchange_reg: float = 0.0
    scheme: LLGScheme = LLGScheme.EXPLICIT_RK2_PROJECT
    project_each_step: bool = True
    stability_cap: float = 0.5

    def __post_init__(self):
        if not self.eps_exchange_reg >= 0:
            raise ValueError("eps_exchange_reg must be >= 0")
        if not self.stability_cap > 0:
            raise ValueError("stability_cap must be positive")
        object.__setattr__(self, "scheme", LLGScheme(self.scheme))


def effective_field(m, H, s, params: PhysParams, grid: Grid, sigma=1.0):
    """Exchange + Zeeman + spin coupling, Lap m + sigma (H + beta s), zero off omega."""
    om = grid.omega
    return (lap_neumann(m, grid, om) + sigma * (H + params.beta * s)) * om


def g_inverse(m, alpha, f):
    """Solve v - (alpha m) x v = f for v, pointwise along axis 0."""
    a = alpha * np.asarray(m, dtype=float)
    f = np.asarray(f, dtype=float)
    af = np.sum(a * f, axis=0)
    return (f + np.cross(a, f, axis=0) + af * a) / (1.0 + np.sum(a * a, axis=0))


def torque(m, h, alpha):
    """m x h - alpha m x (m x h)."""
    mxh = np.cross(m, h, axis=0)
    return mxh - alpha * np.cross(m, mxh, axis=0)


def gilbert_torque(m, h, alpha):
    """The same torque obtained by inverting the Gilbert form u + alpha m x u = (1+alpha^2) m x h.

    Agrees with :func:`torque` whenever |m| = 1.
    """
    return g_inverse(m, -alpha, (1.0 + alpha * alpha) * np.cross(m, h, axis=0))


def rhs(m, H, s, params: PhysParams, cfg: LLGConfig, grid: Grid, sigma=1.0):
    h = effective_field(m, H, s, params, grid, sigma)
    tq = gilbert_torque if cfg.scheme is LLGScheme.GILBERT_FORM else torque
    out = tq(m, h, params.alpha)
    if cfg.eps_exchange_reg > 0:
        out = out + cfg.eps_exchange_reg * lap_neumann(m, grid, grid.omega)
    return out * grid.omega


def stiffness(H, s, params: PhysParams, grid: Grid, cfg: LLGConfig, sigma=1.0):
    """Rate bound |H| + beta|s| + (1 + eps)(4/hx^2 + 4/hy^2) used by the step-size cap."""
    om = grid.omega
    if not om.any():
        return 0.0
    hmax = float(np.max(np.sqrt(np.sum(H * H, axis=0))[om]))
    smax = float(np.max(np.sqrt(np.sum(s * s, axis=0))[om]))
    lap = 4.0 / grid.hx**2 + 4.0 / grid.hy**2
    return abs(sigma) * (hmax + params.beta * smax) + (1.0 + cfg.eps_exchange_reg) * lap


def _project(m_new, m_old):
    old = np.sqrt(np.sum(m_old * m_old, axis=0))
    new = np.sqrt(np.sum(m_new * m_new, axis=0))
    if np.any(new < 0.5 * old):
        raise StabilityError("LLG step collapsed |m| below half its length; reduce dt")
    scale = np.divide(old, new, out=np.zeros_like(new), where=new > 0)
    return m_new * scale


def step_llg(m, H, s, params: PhysParams, cfg: LLGConfig, dt, grid: Grid, sigma=1.0):
    """One explicit-midpoint step followed by renormalization to the pre-step length.

    Renormalizing to the old per-cell length (rather than to 1) keeps m = 0
    fixed and respects the homotopy scaling |m| = sigma.
    """
    if not dt > 0:
        raise StabilityError("dt must be positive")
    rate = stiffness(H, s, params, grid, cfg, sigma)
    if dt * rate > cfg.stability_cap * (1 + 1e-12):
        raise StabilityError(
            f"LLG step dt={dt:g} exceeds cap: dt*rate={dt * rate:.3g} > {cfg.stability_cap}")
    k1 = rhs(m, H, s, params, cfg, grid, sigma)
    k2 = rhs(m + 0.5 * dt * k1, H, s, params, cfg, grid, sigma)
    m_new = m + dt * k2
    if cfg.project_each_step:
        m_new = _project(m_new, m)
    return m_new * grid.omega


def substeps_for(dt, H, s, params, grid, cfg: LLGConfig, sigma=1.0) -> int:
    rate = stiffness(H, s, params, grid, cfg, sigma)
    return max(1, math.ceil(dt * rate / cfg.stability_cap - 1e-12))


def advance_llg(m, H, s, params: PhysParams, cfg: LLGConfig, dt, grid: Grid, sigma=1.0):
    """Advance by dt, splitting into equal substeps that respect the stability cap.

    Returns ``(m_new, n_substeps)``.
    """
    n = substeps_for(dt, H, s, params, grid, cfg, sigma)
    sub = dt / n
    for _ in range(n):
        m = step_llg(m, H, s, params, cfg, sub, grid, sigma)
    return m, n


def macrospin(m0, h, alpha, dt, n_steps, scheme=LLGScheme.EXPLICIT_RK2_PROJECT):
    """Integrate a single spin in a constant field; returns the (n_steps+1, 3) trajectory."""
    tq = gilbert_torque if LLGScheme(scheme) is LLGScheme.GILBERT_FORM else torque
    m = np.asarray(m0, dtype=float).copy()
    h = np.asarray(h, dtype=float)
    out = np.empty((n_steps + 1, 3))
    out[0] = m
    for k in range(n_steps):
        mid = m + 0.5 * dt * tq(m, h, alpha)
        m_new = m + dt * tq(mid, h, alpha)
        m = m_new * (np.linalg.norm(m) / np.linalg.norm(m_new))
        out[k + 1] = m
    return out
