"""Charge and spin-density transport.

Diffusion is backward Euler with the wide operator DIV2 o GRAD2, drift is
explicit. After the linear solve the densities are advanced in flux form,
``rho' = rho + dt * DIV2(Je)``, with ``Je`` the same flux object that feeds
Ampere's law; this makes ``div E - rho`` exactly stationary regardless of the
solver tolerance. Precession and spin-flip relaxation follow as a pointwise
reaction sub-step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, StabilityError
from .grid import Field, Grid, div2, grad2, wide_laplacian
from .linalg import cg
from .state import FluxPair, PhysParams, spin_direction, truncate


@dataclass(frozen=True)
class TransportConfig:
    diffusion_implicit: bool = True
    linsolve_tol: float = 1e-13
    linsolve_max_iter: int = 2000
    positivity_clip: bool = False  # diagnostic only; breaks conservation
    reaction_exact: bool = True
    drift_cfl: float = 0.5

    def __post_init__(self):
        if not (self.linsolve_tol > 0 and self.linsolve_max_iter > 0 and self.drift_cfl > 0):
            raise ValueError("transport tolerances must be positive")


@dataclass(frozen=True, eq=False)
class TransportStep:
    rho: np.ndarray
    s: np.ndarray
    flux: FluxPair
    iterations: int


def drift_fluxes(rho, s, E, params: PhysParams, sigma=1.0):
    """Drift parts -D sigma [rho]_M E and -D sigma [|s|]_M s/|s| (x) E."""
    Ep = E[:2]
    F_rho = -params.D * sigma * truncate(rho, params.M_trunc) * Ep
    F_s = -params.D * sigma * spin_direction(s, params.M_trunc)[:, None] * Ep[None]
    return F_rho, F_s


def compute_fluxes(rho, s, E, params: PhysParams, grid: Grid, sigma=1.0) -> FluxPair:
    """Je = D(grad rho - [rho]_M E), rows of Js = D(grad s_i - [|s|]_M s_i/|s| E)."""
    F_rho, F_s = drift_fluxes(rho, s, E, params, sigma)
    Je = params.D * grad2(rho, grid, Field.RHO, params.contact_values(sigma)) + F_rho
    Js = params.D * np.moveaxis(grad2(s, grid, Field.SPIN), 0, 1) + F_s
    return FluxPair(Je, Js)


def div_rows(Js, grid: Grid):
    """Divergence of each row of the spin flux (3, 2, ny, nx) -> (3, ny, nx)."""
    return div2(np.moveaxis(Js, 1, 0), grid, Field.E)


def react(s, m, params: PhysParams, dt, sigma=1.0, exact=True):
    """Precession about m and spin-flip relaxation, pointwise."""
    if not exact:
        return s - dt * (sigma * params.gamma * np.cross(m, spin_direction(s, params.M_trunc),
                                                         axis=0) + s / params.tau)
    mnorm = np.sqrt(np.sum(m * m, axis=0))
    snorm = np.sqrt(np.sum(s * s, axis=0))
    k = np.divide(m, mnorm, out=np.zeros_like(m), where=mnorm > 0)
    factor = np.divide(np.minimum(params.M_trunc, snorm), snorm, out=np.ones_like(snorm),
                       where=snorm > 0)
    theta = -sigma * params.gamma * mnorm * factor * dt
    c, sn = np.cos(theta), np.sin(theta)
    kxs = np.cross(k, s, axis=0)
    kds = np.sum(k * s, axis=0)
    rotated = s * c + kxs * sn + k * kds * (1.0 - c)
    return rotated * np.exp(-dt / params.tau)


def step_transport(rho, s, E, m, params: PhysParams, cfg: TransportConfig, dt, grid: Grid,
                   sigma=1.0, rho_source=None, s_source=None) -> TransportStep:
    """Advance (rho, s) by dt with the electric field E and magnetization m frozen.

    ``rho_source``/``s_source`` are optional volume sources evaluated at the
    new time level (used by the manufactured-solution studies).
    """
    if not dt > 0:
        raise StabilityError("dt must be positive")
    h = min(grid.hx, grid.hy)
    emax = float(np.max(np.abs(E[:2])))
    if dt * emax * params.D * abs(sigma) / h > cfg.drift_cfl:
        raise StabilityError(
            f"drift CFL violated: dt*|E|*D/h = {dt * emax * params.D / h:.3g} > {cfg.drift_cfl}")
    if not cfg.diffusion_implicit and dt > h * h / (4.0 * params.D):
        raise StabilityError("explicit diffusion needs dt <= h^2/(4D)")

    contacts = params.contact_values(sigma)
    F_rho, F_s = drift_fluxes(rho, s, E, params, sigma)
    src_r = 0.0 if rho_source is None else rho_source
    src_s = 0.0 if s_source is None else s_source
    iters = 0
    if cfg.diffusion_implicit:
        a = dt * params.D
        rhs = np.empty((4,) + grid.shape)
        rhs[0] = rho + dt * (div2(F_rho, grid, Field.E) + src_r) \
            + a * wide_laplacian(np.zeros(grid.shape), grid, Field.RHO, contacts)
        rhs[1:] = s + dt * (div_rows(F_s, grid) + src_s)
        x0 = np.concatenate([rho[None], s])

        def apply_A(u):
            return u - a * wide_laplacian(u, grid, Field.SPIN)

        sol, iters = cg(apply_A, rhs, x0=x0, tol=cfg.linsolve_tol, max_iter=cfg.linsolve_max_iter)
        rho_star, s_star = sol[0], sol[1:]
    else:
        rho_star, s_star = rho, s

    Je = params.D * grad2(rho_star, grid, Field.RHO, contacts) + F_rho
    Js = params.D * np.moveaxis(grad2(s_star, grid, Field.SPIN), 0, 1) + F_s
    rho_new = rho + dt * (div2(Je, grid, Field.E) + src_r)
    s_new = s + dt * (div_rows(Js, grid) + src_s)
    s_new = react(s_new, m, params, dt, sigma, cfg.reaction_exact)
    if cfg.positivity_clip:
        rho_new = np.maximum(rho_new, 0.0)
    if not (np.isfinite(rho_new).all() and np.isfinite(s_new).all()):
        raise DataError("transport step produced non-finite values")
    return TransportStep(rho_new, s_new, FluxPair(Je, Js), iters)
