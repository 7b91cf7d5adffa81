"""Run configuration: parsing, validation, presets and initial-data profiles.

Documents use JSON5 (comments, unquoted keys, trailing commas, Infinity).
Every block is optional; missing keys take the defaults in ``DEFAULTS``.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

import json5
import numpy as np

from .coupling import CouplingConfig, Solvers
from .diagnostics import beta_threshold
from .errors import ConfigError, DataError, GeometryError, ParseError
from .grid import BC, Grid, GridSpec, Rect, Side, build_grid
from .llg import LLGConfig, LLGScheme
from .regularization import RegParams
from .state import PhysParams, SimState, init_electric_field
from .transport import TransportConfig

DEFAULTS = {
    "name": "",
    "seed": 0,
    "grid": {"nx": 64, "ny": 64, "Lx": 1.0, "Ly": 1.0},
    "domains": {"omega1": None, "omega2": None},
    "physics": {"alpha": 1.0, "beta": 0.1, "gamma": 1.0, "D": 1.0, "tau": 1.0,
                "C": 1.0, "rho_D": 1.0},
    "bc": {"left": "D", "right": "D", "bottom": "N", "top": "N"},
    "time": {"dt": None, "cfl": 0.04, "t_end": 1.0, "output_every": 1},
    "coupling": {"sigma": 1.0, "picard_tol": 1e-8, "picard_max": 50, "reverse_order": False},
    "reg": {"eps_x": 0.0, "eps_t": 0.0, "M_trunc": math.inf, "eps_exchange": 0.0},
    "solver": {"diffusion_implicit": True, "linsolve_tol": 1e-13, "linsolve_max_iter": 2000,
               "reaction_exact": True, "llg_scheme": "rk2", "llg_cap": 0.5},
    "initial": {"profile": "equilibrium"},
    "checks": {"energy": True, "dissipation": False},
    "output": {"directory": "out", "csv": "diagnostics.csv", "snapshot": False,
               "snapshot_every": 0},
}

PROFILE_KEYS = {
    "zero": set(),
    "equilibrium": {"rho0", "m_direction"},
    "precession": {"theta", "ramp"},
    "interlayer": {"amplitude", "spin_amplitude", "width"},
    "moser": {"rho0", "spin_amplitude", "width"},
}

HALF_THRESHOLD = "half_threshold"


def _interlayer_domains():
    return {"omega1": [1.5, 3.0, 2.0, 6.0], "omega2": [5.0, 6.5, 2.0, 6.0]}


PRESETS = {
    "equilibrium": {
        "name": "equilibrium",
        "grid": {"nx": 64, "ny": 64, "Lx": 8.0, "Ly": 8.0},
        "domains": _interlayer_domains(),
        "time": {"dt": 0.005, "t_end": 2.0, "output_every": 20},
        "initial": {"profile": "equilibrium"},
    },
    "precession": {
        "name": "precession",
        "grid": {"nx": 64, "ny": 64, "Lx": 8.0, "Ly": 8.0},
        "domains": {"omega1": [3.0, 5.0, 3.0, 5.0]},
        "physics": {"alpha": 0.1},
        "time": {"dt": 0.005, "t_end": 2.0, "output_every": 20},
        "initial": {"profile": "precession", "theta": 0.5},
    },
    "interlayer": {
        "name": "interlayer",
        "grid": {"nx": 64, "ny": 64, "Lx": 8.0, "Ly": 8.0},
        "domains": _interlayer_domains(),
        "physics": {"beta": HALF_THRESHOLD},
        "time": {"dt": 0.005, "t_end": 2.0, "output_every": 20},
        "initial": {"profile": "interlayer", "amplitude": 0.5, "spin_amplitude": 0.3,
                    "width": 0.8},
        "checks": {"dissipation": True},
    },
    "regularized": {
        "name": "regularized",
        "grid": {"nx": 64, "ny": 64, "Lx": 8.0, "Ly": 8.0},
        "domains": _interlayer_domains(),
        "physics": {"beta": HALF_THRESHOLD},
        "reg": {"eps_x": 0.25, "eps_t": 0.01, "M_trunc": 5.0, "eps_exchange": 0.05},
        "time": {"dt": 0.005, "t_end": 2.0, "output_every": 20},
        "initial": {"profile": "interlayer", "amplitude": 0.5, "spin_amplitude": 0.3,
                    "width": 0.8},
    },
    "moser": {
        "name": "moser",
        "grid": {"nx": 64, "ny": 64, "Lx": 8.0, "Ly": 8.0},
        "domains": _interlayer_domains(),
        "physics": {"C": 2.0, "rho_D": 0.2, "tau": 10.0},
        "time": {"dt": 0.005, "t_end": 2.0, "output_every": 20},
        "initial": {"profile": "moser", "rho0": 0.2, "spin_amplitude": 0.1, "width": 2.0},
    },
}


@dataclass
class OutputConfig:
    directory: str = "out"
    csv: str = "diagnostics.csv"
    snapshot: bool = False
    snapshot_every: int = 0


@dataclass
class RunConfig:
    name: str
    seed: int
    spec: GridSpec
    omega1: Rect | None
    omega2: Rect | None
    bc_layout: dict
    physics: dict
    coupling: CouplingConfig
    reg: RegParams
    solvers: Solvers
    initial: dict
    output: OutputConfig
    checks: dict = field(default_factory=dict)
    raw: dict = field(repr=False, default_factory=dict)

    def grid(self) -> Grid:
        return build_grid(self.spec, self.omega1, self.omega2, self.bc_layout)

    def build(self):
        """Return ``(grid, params, initial_state)`` ready for :func:`run_simulation`."""
        grid = self.grid()
        return (grid,) + build_initial(self, grid)


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict) and key not in ("initial", "domains"):
            if not isinstance(val, dict):
                raise ConfigError(where, "expected an object")
            out[key] = _merge(base[key], val, where)
        elif key == "domains":
            if not isinstance(val, dict):
                raise ConfigError(where, "expected an object")
            for k in val:
                if k not in ("omega1", "omega2"):
                    raise ConfigError(f"domains.{k}", "unknown key")
            out[key] = {**base[key], **val}
        else:
            out[key] = val
    return out


_LOC = re.compile(r":(\d+)\s.*?column\s+(\d+)", re.S)


def _num(d, block, key, positive=False, nonneg=False, allow_inf=False):
    v = d[block][key]
    where = f"{block}.{key}"
    if v is None and allow_inf:
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"expected a number, got {v!r}")
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError(where, "must be finite")
    if positive and not v > 0:
        raise ConfigError(where, f"must be positive, got {v}")
    if nonneg and not v >= 0:
        raise ConfigError(where, f"must be nonnegative, got {v}")
    return v


def _int(d, block, key, minimum):
    v = d[block][key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < minimum:
        raise ConfigError(f"{block}.{key}", f"expected an integer >= {minimum}, got {v!r}")
    return int(v)


def _rect(val, where, spec: GridSpec):
    if val is None:
        return None
    if isinstance(val, dict):
        try:
            val = [val["x0"], val["x1"], val["y0"], val["y1"]]
        except KeyError as exc:
            raise ConfigError(where, f"missing {exc.args[0]}") from None
    if not (isinstance(val, (list, tuple)) and len(val) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise ConfigError(where, "expected [x0, x1, y0, y1]")
    x0, x1, y0, y1 = map(float, val)
    if not (0 < x0 < x1 < spec.Lx and 0 < y0 < y1 < spec.Ly):
        raise ConfigError(where, "rectangle must lie strictly inside the domain")
    return Rect(x0, x1, y0, y1)


def from_dict(doc: dict) -> RunConfig:
    """Validate a configuration mapping and fill in defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "document must be an object")
    d = _merge(DEFAULTS, doc)

    nx, ny = _int(d, "grid", "nx", 3), _int(d, "grid", "ny", 3)
    Lx, Ly = _num(d, "grid", "Lx", positive=True), _num(d, "grid", "Ly", positive=True)
    spec = GridSpec(nx, ny, Lx, Ly)
    omega1 = _rect(d["domains"]["omega1"], "domains.omega1", spec)
    omega2 = _rect(d["domains"]["omega2"], "domains.omega2", spec)
    if omega1 and omega2 and omega1.overlaps(omega2):
        raise ConfigError("domains.omega2", "overlaps omega1")

    layout = {}
    for side in Side:
        v = d["bc"][side.value]
        if v not in ("D", "N"):
            raise ConfigError(f"bc.{side.value}", "expected 'D' or 'N'")
        layout[side] = BC(v)
    if BC.NEUMANN not in layout.values():
        raise ConfigError("bc", "at least one insulating (N) side is required")

    phys = {}
    for key in ("alpha", "gamma", "D", "tau"):
        phys[key] = _num(d, "physics", key, positive=True)
    if d["physics"]["beta"] == HALF_THRESHOLD:
        phys["beta"] = HALF_THRESHOLD
    else:
        phys["beta"] = _num(d, "physics", "beta", nonneg=True)
    phys["C"] = _num(d, "physics", "C")
    phys["rho_D"] = _num(d, "physics", "rho_D", positive=True)

    hmin = min(spec.hx, spec.hy)
    if d["time"]["dt"] is None:
        dt = _num(d, "time", "cfl", positive=True) * hmin
    else:
        dt = _num(d, "time", "dt", positive=True)
    if dt > 0.5 * hmin:
        raise ConfigError("time.dt", f"dt={dt:g} exceeds the Maxwell limit 0.5*h={0.5 * hmin:g}")
    t_end = _num(d, "time", "t_end", nonneg=True)
    every = _int(d, "time", "output_every", 1)

    sigma = _num(d, "coupling", "sigma")
    if not 0 <= sigma <= 1:
        raise ConfigError("coupling.sigma", "must lie in [0, 1]")
    coupling = CouplingConfig(dt=dt, t_end=t_end, output_every=every, sigma=sigma,
                              picard_tol=_num(d, "coupling", "picard_tol", positive=True),
                              picard_max=_int(d, "coupling", "picard_max", 1),
                              reverse_order=bool(d["coupling"]["reverse_order"]))

    reg = RegParams(_num(d, "reg", "eps_x", nonneg=True), _num(d, "reg", "eps_t", nonneg=True))
    phys["M_trunc"] = _num(d, "reg", "M_trunc", positive=True, allow_inf=True)
    eps_ex = _num(d, "reg", "eps_exchange", nonneg=True)

    sv = d["solver"]
    try:
        scheme = LLGScheme(sv["llg_scheme"])
    except ValueError:
        raise ConfigError("solver.llg_scheme", "expected 'rk2' or 'gilbert'") from None
    solvers = Solvers(
        TransportConfig(diffusion_implicit=bool(sv["diffusion_implicit"]),
                        linsolve_tol=_num(d, "solver", "linsolve_tol", positive=True),
                        linsolve_max_iter=_int(d, "solver", "linsolve_max_iter", 1),
                        reaction_exact=bool(sv["reaction_exact"])),
        LLGConfig(eps_exchange_reg=eps_ex, scheme=scheme,
                  stability_cap=_num(d, "solver", "llg_cap", positive=True)),
        reg)

    init = dict(d["initial"])
    prof = init.get("profile")
    if prof not in PROFILE_KEYS:
        raise ConfigError("initial.profile", f"unknown profile {prof!r}")
    for k in init:
        if k != "profile" and k not in PROFILE_KEYS[prof]:
            raise ConfigError(f"initial.{k}", f"not a parameter of profile {prof!r}")

    o = d["output"]
    output = OutputConfig(str(o["directory"]), str(o["csv"]), bool(o["snapshot"]),
                          _int(d, "output", "snapshot_every", 0))
    seed = d["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", "expected an integer")
    try:
        build_grid(spec, omega1, omega2, layout)
    except GeometryError as exc:
        raise ConfigError("domains", str(exc)) from None
    checks = {k: bool(v) for k, v in d["checks"].items()}
    return RunConfig(str(d["name"]), seed, spec, omega1, omega2, layout, phys, coupling, reg,
                     solvers, init, output, checks, raw=d)


def parse_config(text: str) -> RunConfig:
    """Parse a JSON5 document into a validated :class:`RunConfig`."""
    try:
        doc = json5.loads(text)
    except ValueError as exc:
        msg = str(exc)
        m = _LOC.search(msg)
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ParseError(f"syntax error: {msg}", line, col) from None
    return from_dict(doc)


def load_config(name_or_path: str) -> RunConfig:
    """Preset name or path to a configuration file."""
    if name_or_path in PRESETS:
        return from_dict(PRESETS[name_or_path])
    with open(name_or_path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- initial data -----------------------------------------------------------

def _bump(z, c, w):
    return np.exp(-(((z - c) / w) ** 2))


def _smoothstep(z):
    z = np.clip(z, 0.0, 1.0)
    return z * z * (3.0 - 2.0 * z)


def _params(cfg: RunConfig, beta) -> PhysParams:
    p = cfg.physics
    return PhysParams(alpha=p["alpha"], beta=beta, gamma=p["gamma"], D=p["D"], tau=p["tau"],
                      M_trunc=p["M_trunc"], C=p["C"], rho_D=p["rho_D"])


def build_initial(cfg: RunConfig, grid: Grid):
    """Construct ``(params, state)`` for the configured profile.

    ``beta = "half_threshold"`` resolves to half the certified threshold with
    the density bound taken as twice the initial maximum.
    """
    init = cfg.initial
    prof = init["profile"]
    x, y, om = grid.x, grid.y, grid.omega
    Lx, Ly = grid.spec.Lx, grid.spec.Ly
    C, rho_D = cfg.physics["C"], cfg.physics["rho_D"]
    z3 = np.zeros((3,) + grid.shape)
    rho, s, E, H, m = np.full(grid.shape, rho_D), z3.copy(), z3.copy(), z3.copy(), z3.copy()

    if prof == "zero":
        rho = np.zeros(grid.shape)
    elif prof == "equilibrium":
        rho = np.full(grid.shape, float(init.get("rho0", rho_D)))
        d = np.asarray(init.get("m_direction", [0.0, 0.0, 1.0]), dtype=float)
        if d.shape != (3,) or not np.linalg.norm(d) > 0:
            raise ConfigError("initial.m_direction", "expected a nonzero 3-vector")
        m = (d / np.linalg.norm(d))[:, None, None] * om
    elif prof == "precession":
        th = float(init.get("theta", 0.5))
        ramp = float(init.get("ramp", 1.0))
        m = np.array([math.sin(th), 0.0, math.cos(th)])[:, None, None] * om
        dist = np.minimum.reduce([x, Lx - x, y, Ly - y])
        plateau = _smoothstep((dist - 0.5 * ramp) / ramp)
        H[2] = plateau
        H[:2] = -m[:2]
    elif prof == "interlayer":
        A = float(init.get("amplitude", 0.5))
        a = float(init.get("spin_amplitude", 0.3))
        w = float(init.get("width", 0.8))
        rho = rho_D + A * _bump(x, 0.5 * Lx, w)
        s[0] = a * _bump(x, 0.5 * Lx, w) * _bump(y, 0.5 * Ly, 2 * w)
        m[2] = grid.mask.in_omega1.astype(float) - grid.mask.in_omega2.astype(float)
    elif prof == "moser":
        rho = np.full(grid.shape, float(init.get("rho0", rho_D)))
        a = float(init.get("spin_amplitude", 0.1))
        w = float(init.get("width", 0.8))
        s[2] = a * _bump(x, 0.5 * Lx, w) * _bump(y, 0.5 * Ly, w)
        m[2] = om.astype(float)
    if prof != "zero":
        E = init_electric_field(rho, C, grid, tol=1e-12)

    beta = cfg.physics["beta"]
    if beta == HALF_THRESHOLD:
        probe = _params(cfg, 0.0)
        beta = 0.5 * beta_threshold(probe, 2.0 * max(float(rho.max()), 1e-12))[0]
    try:
        params = _params(cfg, beta)
    except DataError as exc:
        raise ConfigError("physics", str(exc)) from None
    return params, SimState(rho, s, E, H, m, 0.0)
