"""Explicit midpoint integrator for the Ampere/Faraday pair and EM diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, StabilityError
from .grid import Field, Grid, curl3, div2


@dataclass(frozen=True, eq=False)
class MaxwellSources:
    """Right-hand sides: ``je_term`` drives dE/dt, ``dm_dt`` (= -dm/dt) drives dH/dt."""

    je_term: np.ndarray
    dm_dt: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid):
        z = np.zeros((3,) + grid.shape)
        return cls(z, z.copy())

    @classmethod
    def from_flux(cls, Je, grid: Grid, dm_dt=None):
        je = np.zeros((3,) + grid.shape)
        je[:2] = Je
        return cls(je, np.zeros_like(je) if dm_dt is None else dm_dt)


def step_maxwell(E, H, src: MaxwellSources, dt, grid: Grid, cfl=0.5):
    """One explicit-midpoint step of dE/dt = curl H + je, dH/dt = -curl E + dm_dt.

    The boundary conditions E x nu = 0 on contacts and H x nu = 0 on
    insulators enter through the ghost parities of the curl stencils.
    """
    hmin = min(grid.hx, grid.hy)
    if not dt > 0 or dt > cfl * hmin * (1 + 1e-12):
        raise StabilityError(f"dt={dt:g} violates dt <= {cfl}*h = {cfl * hmin:g}")
    if not (np.isfinite(src.je_term).all() and np.isfinite(src.dm_dt).all()):
        raise DataError("non-finite Maxwell source")
    je, dm = src.je_term, src.dm_dt
    E_half = E + 0.5 * dt * (curl3(H, grid, Field.H) + je)
    H_half = H + 0.5 * dt * (-curl3(E, grid, Field.E) + dm)
    E_new = E + dt * (curl3(H_half, grid, Field.H) + je)
    H_new = H + dt * (-curl3(E_half, grid, Field.E) + dm)
    return E_new, H_new


def em_energy(E, H, grid: Grid) -> float:
    return 0.5 * grid.integrate(np.sum(E * E, axis=0) + np.sum(H * H, axis=0))


def gauss_residuals(E, H, m, rho, C, grid: Grid):
    """Pointwise Gauss-law defects ``div E - (rho - C)`` and ``div(H + m)``."""
    rE = div2(E, grid, Field.E) - (rho - C)
    rH = div2(H + m, grid, Field.H)
    return rE, rH


def em_energy_and_residuals(E, H, m, rho, C, grid: Grid):
    """Return (energy, resE, resH); residuals are max-norms over interior cells."""
    rE, rH = gauss_residuals(E, H, m, rho, np.broadcast_to(C, grid.shape), grid)
    inner = grid.interior
    return (em_energy(E, H, grid), float(np.max(np.abs(rE[inner]))),
            float(np.max(np.abs(rH[inner]))))


def boundary_residuals(E, H, m, rho, C, grid: Grid):
    """Gauss defects restricted to the outer cell ring (reported separately)."""
    rE, rH = gauss_residuals(E, H, m, rho, np.broadcast_to(C, grid.shape), grid)
    ring = ~grid.interior
    if not ring.any():
        return 0.0, 0.0
    return float(np.max(np.abs(rE[ring]))), float(np.max(np.abs(rH[ring])))
