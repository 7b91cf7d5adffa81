"""Structured cell-centred grid, ferromagnetic subdomain masks and stencils.

Arrays follow the numpy image convention: a scalar field has shape
``(ny, nx)`` and is indexed ``[j, i]`` so that a C-order flatten is
row-major with x fastest. Vector fields carry the component first,
``(3, ny, nx)`` or ``(2, ny, nx)``.

Boundary closures use one ghost layer whose value is an even or odd
reflection of the adjacent cell. The parity of every field component is
chosen to agree with the continuous boundary conditions:

* Ohmic contact (Dirichlet): tangential E odd, normal E even, tangential H
  even, normal H odd; charge density odd about the contact value rho_D,
  spin odd about zero.
* Insulating boundary (Neumann): normal E odd, tangential E even,
  tangential H odd, normal H even; densities even.

With these rules the central first derivative of an even field and that of
an odd field are exact negative adjoints, so the discrete curl pair is
skew, and the x- and y-differences commute right up to the boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ShapeError


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"

    @property
    def axis(self) -> int:
        """0 for the x-normal sides, 1 for the y-normal sides."""
        return 0 if self in (Side.LEFT, Side.RIGHT) else 1

    @property
    def normal(self) -> tuple[float, float]:
        return _NORMALS[self]


_NORMALS = {
    Side.LEFT: (-1.0, 0.0),
    Side.RIGHT: (1.0, 0.0),
    Side.BOTTOM: (0.0, -1.0),
    Side.TOP: (0.0, 1.0),
}


class BC(enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"


DEFAULT_LAYOUT = {
    Side.LEFT: BC.DIRICHLET,
    Side.RIGHT: BC.DIRICHLET,
    Side.BOTTOM: BC.NEUMANN,
    Side.TOP: BC.NEUMANN,
}


class Field(enum.Enum):
    """Boundary-parity family of a field, see the module docstring."""

    RHO = "rho"  # scalar, odd about rho_D on contacts, even on insulators
    SPIN = "spin"  # scalar, odd about 0 on contacts, even on insulators
    E = "E"  # electric field and the planar fluxes Je, Js rows
    H = "H"
    FREE = "free"  # even everywhere


class Op(enum.Enum):
    GRAD2 = "grad2"
    DIV2 = "div2"
    CURL3 = "curl3"
    LAP_NEUMANN = "lap_neumann"


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0
    periodic: bool = False  # torus harness only

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise GeometryError("nx, ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise GeometryError(f"need nx, ny >= 3, got {self.nx}x{self.ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise GeometryError("Lx, Ly must be positive")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f"degenerate rectangle {self}")

    def contains(self, x, y):
        # cell-centre rule; strict so that face-aligned rectangles are unambiguous
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)

    def overlaps(self, other: "Rect") -> bool:
        return (
            self.x0 < other.x1
            and other.x0 < self.x1
            and self.y0 < other.y1
            and other.y0 < self.y1
        )


@dataclass(frozen=True, eq=False)
class SubdomainMask:
    in_omega1: np.ndarray
    in_omega2: np.ndarray

    @property
    def in_omega(self) -> np.ndarray:
        return self.in_omega1 | self.in_omega2


@dataclass(frozen=True, eq=False)
class BoundaryTag:
    labels: dict

    def __post_init__(self):
        missing = [s for s in Side if s not in self.labels]
        if missing:
            raise GeometryError(f"unlabelled boundary sides: {missing}")
        if not any(b is BC.NEUMANN for b in self.labels.values()):
            raise GeometryError("Gamma_N must contain at least one edge")

    def __getitem__(self, side: Side) -> BC:
        return self.labels[side]

    def sides(self, bc: BC) -> list[Side]:
        return [s for s in Side if self.labels[s] is bc]

    @staticmethod
    def normal(side: Side) -> tuple[float, float]:
        return side.normal


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable grid handle shared by all modules."""

    spec: GridSpec
    mask: SubdomainMask
    tags: BoundaryTag
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def nx(self):
        return self.spec.nx

    @property
    def ny(self):
        return self.spec.ny

    @property
    def hx(self):
        return self.spec.hx

    @property
    def hy(self):
        return self.spec.hy

    @property
    def shape(self):
        return self.spec.shape

    @property
    def periodic(self):
        return self.spec.periodic

    @property
    def cell_area(self):
        return self.spec.hx * self.spec.hy

    @property
    def area(self):
        return self.spec.Lx * self.spec.Ly

    @property
    def omega(self) -> np.ndarray:
        return self.mask.in_omega

    @property
    def interior(self) -> np.ndarray:
        """Cells not in the outermost ring."""
        out = np.zeros(self.shape, dtype=bool)
        if self.periodic:
            out[:] = True
        else:
            out[1:-1, 1:-1] = True
        return out

    def boundary_cells(self, side: Side) -> tuple:
        """Index expression selecting the cell row/column adjacent to ``side``."""
        return {
            Side.LEFT: (slice(None), 0),
            Side.RIGHT: (slice(None), -1),
            Side.BOTTOM: (0, slice(None)),
            Side.TOP: (-1, slice(None)),
        }[side]

    def integrate(self, f) -> float:
        return float(np.sum(f) * self.cell_area)


def build_grid(spec: GridSpec, omega1: Rect | None = None, omega2: Rect | None = None,
               bc_layout: dict | None = None) -> Grid:
    """Build the grid handle, ferromagnet masks and boundary labels."""
    layout = dict(DEFAULT_LAYOUT if bc_layout is None else bc_layout)
    layout = {Side(k) if not isinstance(k, Side) else k: BC(v) if not isinstance(v, BC) else v
              for k, v in layout.items()}
    tags = BoundaryTag(layout)

    xc = (np.arange(spec.nx) + 0.5) * spec.hx
    yc = (np.arange(spec.ny) + 0.5) * spec.hy
    x, y = np.meshgrid(xc, yc)

    def mask_of(rect, name):
        if rect is None:
            return np.zeros(spec.shape, dtype=bool)
        if not spec.periodic and (rect.x0 <= 0 or rect.y0 <= 0
                                  or rect.x1 >= spec.Lx or rect.y1 >= spec.Ly):
            raise GeometryError(f"{name} must lie strictly inside the domain: {rect}")
        m = rect.contains(x, y)
        if not spec.periodic and (m[0, :].any() or m[-1, :].any()
                                  or m[:, 0].any() or m[:, -1].any()):
            raise GeometryError(f"{name} has cells on the domain boundary")
        return m

    if omega1 is not None and omega2 is not None and omega1.overlaps(omega2):
        raise GeometryError("omega1 and omega2 overlap")
    m1 = mask_of(omega1, "omega1")
    m2 = mask_of(omega2, "omega2")
    if (m1 & m2).any():
        raise GeometryError("omega1 and omega2 share cells")
    for a in (x, y):
        a.setflags(write=False)
    return Grid(spec, SubdomainMask(m1, m2), tags, x, y)


# -- ghost closures ---------------------------------------------------------

_SCALARS = (Field.RHO, Field.SPIN, Field.FREE)


def ghost_sign(kind: Field, bc: BC, comp: int | None, axis: int) -> int:
    """+1 for an even reflection, -1 for an odd one."""
    if kind is Field.FREE:
        return 1
    if kind in _SCALARS:
        return -1 if bc is BC.DIRICHLET else 1
    normal = comp == axis
    if kind is Field.E:
        if bc is BC.DIRICHLET:
            return 1 if normal else -1
        return -1 if normal else 1
    if kind is Field.H:
        if bc is BC.DIRICHLET:
            return -1 if normal else 1
        return 1 if normal else -1
    raise ValueError(kind)


def _edge_value(dirichlet, side, axis):
    if dirichlet is None:
        return 0.0
    g = dirichlet.get(side, 0.0) if isinstance(dirichlet, dict) else dirichlet
    g = np.asarray(g, dtype=float)
    if g.ndim == 1 and axis == 0:
        g = g[:, None]
    return g


def pad(u, grid: Grid, axis: int, kind: Field, comp: int | None = None, dirichlet=None):
    """Return ``u`` with one ghost layer on both ends of ``axis`` (0 = x, 1 = y)."""
    ax = -1 if axis == 0 else -2
    lo_side, hi_side = (Side.LEFT, Side.RIGHT) if axis == 0 else (Side.BOTTOM, Side.TOP)
    first = np.take(u, [0], axis=ax)
    last = np.take(u, [-1], axis=ax)
    if grid.periodic:
        lo, hi = last, first
    else:
        ghosts = []
        for side, edge in ((lo_side, first), (hi_side, last)):
            bc = grid.tags[side]
            sgn = ghost_sign(kind, bc, comp, axis)
            if sgn > 0:
                ghosts.append(edge)
            elif kind is Field.RHO and bc is BC.DIRICHLET:
                ghosts.append(2.0 * _edge_value(dirichlet, side, axis) - edge)
            else:
                ghosts.append(-edge)
        lo, hi = ghosts
    return np.concatenate([lo, u, hi], axis=ax)


def ddx(u, grid, kind, comp=None, dirichlet=None):
    up = pad(u, grid, 0, kind, comp, dirichlet)
    return (up[..., 2:] - up[..., :-2]) / (2.0 * grid.hx)


def ddy(u, grid, kind, comp=None, dirichlet=None):
    up = pad(u, grid, 1, kind, comp, dirichlet)
    return (up[..., 2:, :] - up[..., :-2, :]) / (2.0 * grid.hy)


def grad2(phi, grid, kind=Field.RHO, dirichlet=None):
    """Central gradient of a scalar (or a stack of scalars); component axis first."""
    return np.stack([ddx(phi, grid, kind, None, dirichlet),
                     ddy(phi, grid, kind, None, dirichlet)])


def div2(v, grid, kind=Field.E):
    """Planar divergence of the first two components of ``v``."""
    return ddx(v[0], grid, kind, 0) + ddy(v[1], grid, kind, 1)


def curl3(u, grid, kind):
    """Curl of a 3-vector field that depends on (x, y) only."""
    return np.stack([
        ddy(u[2], grid, kind, 2),
        -ddx(u[2], grid, kind, 2),
        ddx(u[1], grid, kind, 1) - ddy(u[0], grid, kind, 0),
    ])


def lap_neumann(u, grid, mask=None):
    """Compact 5-point Laplacian restricted to ``mask`` with zero normal derivative.

    Only faces with both cells inside the mask contribute, which is the
    reflecting ghost-cell closure at the mask boundary. The result is zero
    outside the mask.
    """
    if mask is None:
        mask = np.ones(grid.shape, dtype=bool)
    out = np.zeros_like(u, dtype=float)
    fx = (mask[:, 1:] & mask[:, :-1]) / grid.hx**2
    dx = (u[..., 1:] - u[..., :-1]) * fx
    out[..., :-1] += dx
    out[..., 1:] -= dx
    fy = (mask[1:, :] & mask[:-1, :]) / grid.hy**2
    dy = (u[..., 1:, :] - u[..., :-1, :]) * fy
    out[..., :-1, :] += dy
    out[..., 1:, :] -= dy
    if grid.periodic:
        wx = (mask[:, 0] & mask[:, -1]) / grid.hx**2
        d = (u[..., 0] - u[..., -1]) * wx
        out[..., -1] += d
        out[..., 0] -= d
        wy = (mask[0, :] & mask[-1, :]) / grid.hy**2
        d = (u[..., 0, :] - u[..., -1, :]) * wy
        out[..., -1, :] += d
        out[..., 0, :] -= d
    return out * mask


def face_differences(u, grid, mask=None):
    """Forward differences across faces interior to ``mask`` (exchange-energy stencil)."""
    if mask is None:
        mask = np.ones(grid.shape, dtype=bool)
    fx = mask[:, 1:] & mask[:, :-1]
    fy = mask[1:, :] & mask[:-1, :]
    dx = (u[..., 1:] - u[..., :-1]) / grid.hx * fx
    dy = (u[..., 1:, :] - u[..., :-1, :]) / grid.hy * fy
    if grid.periodic:
        wx = mask[:, 0] & mask[:, -1]
        wy = mask[0, :] & mask[-1, :]
        dx = np.concatenate([dx, ((u[..., 0] - u[..., -1]) / grid.hx * wx)[..., None]], axis=-1)
        dy = np.concatenate([dy, ((u[..., 0, :] - u[..., -1, :]) / grid.hy * wy)[..., None, :]],
                            axis=-2)
    return dx, dy


def wide_laplacian(u, grid, kind=Field.RHO, dirichlet=None):
    """DIV2 of GRAD2: the diffusion operator that shares its flux with Ampere's law."""
    return div2(grad2(u, grid, kind, dirichlet), grid, Field.E)


def differential_operator(kind: Op, u, grid: Grid, bc: Field | None = None,
                          dirichlet=None, mask=None):
    """Shape-checked front end for the stencils above."""
    kind = Op(kind)
    shape = grid.shape
    u = np.asarray(u, dtype=float)
    expected = {Op.GRAD2: shape, Op.LAP_NEUMANN: None, Op.DIV2: (2,) + shape,
                Op.CURL3: (3,) + shape}[kind]
    if kind is Op.DIV2 and u.shape == (3,) + shape:
        u = u[:2]
    if kind is Op.LAP_NEUMANN:
        if u.shape[-2:] != shape:
            raise ShapeError(f"LAP_NEUMANN expects (..., {shape}), got {u.shape}")
    elif u.shape != expected:
        raise ShapeError(f"{kind.name} expects shape {expected}, got {u.shape}")
    if kind is Op.GRAD2:
        return grad2(u, grid, bc or Field.RHO, dirichlet)
    if kind is Op.DIV2:
        return div2(u, grid, bc or Field.E)
    if kind is Op.CURL3:
        if bc not in (Field.E, Field.H, Field.FREE):
            raise ShapeError("CURL3 needs bc=Field.E or Field.H")
        return curl3(u, grid, bc)
    return lap_neumann(u, grid, mask)
