"""State container, physical parameters, truncation and initial data."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .grid import BC, Field, Grid, Side, div2, grad2, wide_laplacian
from .linalg import cg, wide_laplacian_null_space

FIELD_NAMES = ("rho", "s", "E", "H", "m")


@dataclass(frozen=True, eq=False)
class SimState:
    rho: np.ndarray  # (ny, nx)
    s: np.ndarray  # (3, ny, nx)
    E: np.ndarray
    H: np.ndarray
    m: np.ndarray  # zero outside omega
    t: float = 0.0

    def replace(self, **kw) -> "SimState":
        return dataclasses.replace(self, **kw)

    def fields(self):
        return tuple(getattr(self, n) for n in FIELD_NAMES)

    def scaled(self, sigma: float) -> "SimState":
        return self.replace(rho=sigma * self.rho, s=sigma * self.s, E=sigma * self.E,
                            H=sigma * self.H, m=sigma * self.m)

    def is_finite(self) -> bool:
        return all(np.isfinite(f).all() for f in self.fields())

    @classmethod
    def zeros(cls, grid: Grid, t=0.0):
        z3 = np.zeros((3,) + grid.shape)
        return cls(np.zeros(grid.shape), z3.copy(), z3.copy(), z3.copy(), z3.copy(), t)


@dataclass(frozen=True, eq=False)
class PhysParams:
    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 1.0
    D: float = 1.0
    tau: float = 1.0
    M_trunc: float = math.inf
    C: object = 1.0  # scalar or (ny, nx) doping
    rho_D: object = 1.0  # scalar or {Side: edge array}

    def __post_init__(self):
        for name in ("alpha", "gamma", "D", "tau", "M_trunc"):
            v = getattr(self, name)
            if not v > 0:
                raise DataError(f"{name} must be positive, got {v}")
        if not self.beta >= 0:
            raise DataError(f"beta must be nonnegative, got {self.beta}")
        if not np.all(np.isfinite(self.C)):
            raise DataError("doping C must be finite")
        vals = self.rho_D.values() if isinstance(self.rho_D, dict) else [self.rho_D]
        for v in vals:
            if not np.all(np.asarray(v) > 0):
                raise DataError("rho_D must be positive")

    def replace(self, **kw) -> "PhysParams":
        return dataclasses.replace(self, **kw)

    def doping(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.C, dtype=float), grid.shape)

    def contact_values(self, scale=1.0) -> dict:
        """rho_D per contact side, scaled (homotopy)."""
        if isinstance(self.rho_D, dict):
            return {s: scale * np.asarray(v, dtype=float) for s, v in self.rho_D.items()}
        return {s: scale * float(self.rho_D) for s in Side}

    def rho_D_field(self, grid: Grid) -> np.ndarray:
        """Extension of the contact density into the domain (constant)."""
        if isinstance(self.rho_D, dict):
            vals = np.concatenate([np.ravel(v) for v in self.rho_D.values()])
            if np.ptp(vals) > 0:
                raise DataError("non-constant rho_D needs an explicit interior extension")
            return np.full(grid.shape, float(vals[0]))
        return np.full(grid.shape, float(self.rho_D))


@dataclass(frozen=True, eq=False)
class FluxPair:
    """Planar charge flux ``Je`` (2, ny, nx) and spin flux ``Js`` (3, 2, ny, nx).

    Cell values; the insulating-boundary closure is the odd ghost reflection of
    the normal component, so the face flux through Gamma_N vanishes.
    """

    Je: np.ndarray
    Js: np.ndarray

    def normal_face_flux(self, grid: Grid, side: Side):
        """Ghost-averaged flux through the faces of ``side`` (Je, Js rows)."""
        from .grid import pad

        axis = side.axis
        out = []
        for v in (self.Je[axis], self.Js[:, axis]):
            up = pad(v, grid, axis, Field.E, comp=axis)
            if axis == 0:
                f = 0.5 * (up[..., 0] + up[..., 1]) if side is Side.LEFT else \
                    0.5 * (up[..., -1] + up[..., -2])
            else:
                f = 0.5 * (up[..., 0, :] + up[..., 1, :]) if side is Side.BOTTOM else \
                    0.5 * (up[..., -1, :] + up[..., -2, :])
            out.append(f)
        return tuple(out)


def truncate(z, M):
    """[z]_M = min(M, max(0, z))."""
    return np.minimum(M, np.maximum(0.0, z))


def spin_direction(s, M):
    """[|s|]_M s/|s| along the component axis 0, continuously extended by 0 at s = 0."""
    s = np.asarray(s, dtype=float)
    norm = np.sqrt(np.sum(s * s, axis=0))
    scale = np.divide(np.minimum(M, norm), norm, out=np.zeros_like(norm), where=norm > 0)
    return s * scale


@dataclass
class ValidationReport:
    gauss_E: float
    gauss_H: float
    normal_E: float
    m_defect: float
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return max(self.gauss_E, self.gauss_H, self.normal_E, self.m_defect) <= self.tol

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: |div E-(rho-C)|={self.gauss_E:.3e} |div(H+m)|={self.gauss_H:.3e} "
                f"|E.nu| on Gamma_N={self.normal_E:.3e} ||m|-1|={self.m_defect:.3e} (tol {self.tol:g})")


def face_normal_component(E, grid: Grid, side: Side):
    """Normal component of E extrapolated from the two cells nearest ``side``.

    Uses the second-order one-sided value (3 u0 - u1)/2, which is exact on
    affine fields and independent of the ghost closure.
    """
    c = side.axis
    nrm = side.normal[c]
    u = E[c]
    if side is Side.LEFT:
        u0, u1 = u[:, 0], u[:, 1]
    elif side is Side.RIGHT:
        u0, u1 = u[:, -1], u[:, -2]
    elif side is Side.BOTTOM:
        u0, u1 = u[0, :], u[1, :]
    else:
        u0, u1 = u[-1, :], u[-2, :]
    return nrm * (1.5 * u0 - 0.5 * u1)


def validate_initial(state: SimState, params: PhysParams, grid: Grid, tol=1e-10):
    """Check the compatibility hypotheses on the initial data."""
    if not state.is_finite():
        raise DataError("initial state has non-finite entries")
    C = params.doping(grid)
    interior = grid.interior
    rE = np.abs(div2(state.E, grid, Field.E) - (state.rho - C))[interior]
    rH = np.abs(div2(state.H + state.m, grid, Field.H))[interior]
    normal = 0.0
    if not grid.periodic:
        for side in grid.tags.sides(BC.NEUMANN):
            normal = max(normal, float(np.max(np.abs(face_normal_component(state.E, grid, side)))))
    om = grid.omega
    if om.any():
        mlen = np.sqrt(np.sum(state.m**2, axis=0))
        m_def = float(np.max(np.abs(mlen[om] - 1.0)))
        outside = float(np.max(np.abs(state.m[:, ~om]), initial=0.0))
    else:
        m_def, outside = 0.0, float(np.max(np.abs(state.m)))
    return ValidationReport(float(rE.max(initial=0.0)), float(rH.max(initial=0.0)), normal,
                            max(m_def, outside), tol,
                            {"m_outside_omega": outside})


def init_electric_field(rho0, C, grid: Grid, tol=1e-10, max_iter=20000):
    """E0 = GRAD2 phi with DIV2 GRAD2 phi = rho0 - C, phi = 0 on contacts.

    The discrete operator is exactly the transport diffusion operator, so the
    Gauss residual of the result equals the linear-solver residual.
    """
    rho0 = np.asarray(rho0, dtype=float)
    f = rho0 - np.broadcast_to(C, grid.shape)
    if not np.isfinite(f).all():
        raise DataError("non-finite charge data")
    null = wide_laplacian_null_space(grid)

    def neg_lap(u):
        return -wide_laplacian(u, grid, Field.SPIN)

    phi, _ = cg(neg_lap, -f, tol=tol, max_iter=max_iter, null_space=null)
    g = grad2(phi, grid, Field.SPIN)
    return np.stack([g[0], g[1], np.zeros(grid.shape)])
