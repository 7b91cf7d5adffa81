"""Space and time smoothing operators for the regularized system."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .errors import DataError
from .grid import Grid


@dataclass(frozen=True)
class RegParams:
    eps_x: float = 0.0
    eps_t: float = 0.0
    k_eps: float | None = None  # measured, never configured
    k_0: float | None = None

    def __post_init__(self):
        if not (self.eps_x >= 0 and self.eps_t >= 0):
            raise DataError("smoothing lengths must be >= 0")

    @property
    def active(self) -> bool:
        return self.eps_x > 0 or self.eps_t > 0

    def measured(self, grid: Grid, n_samples=16, seed=0) -> "RegParams":
        k_eps, k_0 = measure_constants(self.eps_x, grid, n_samples, seed)
        return RegParams(self.eps_x, self.eps_t, k_eps, k_0)


def triangle_kernel(radius: int) -> np.ndarray:
    k = np.arange(-radius, radius + 1)
    w = (radius + 1 - np.abs(k)).astype(float)
    return w / w.sum()


def smooth_space(u, eps_x, grid: Grid):
    """Separable triangle-kernel average over the last two axes.

    The kernel radius is ceil(eps_x / h) cells per direction; the field is
    reflected evenly across the domain boundary (periodically wrapped on the
    torus harness).
    """
    u = np.asarray(u, dtype=float)
    if eps_x == 0:
        return u.copy()
    if eps_x < 0:
        raise DataError("eps_x must be >= 0")
    mode = "wrap" if grid.periodic else "reflect"
    out = u
    for axis, h in ((-1, grid.hx), (-2, grid.hy)):
        r = math.ceil(eps_x / h - 1e-12)
        if r > 0:
            out = convolve1d(out, triangle_kernel(r), axis=axis, mode=mode)
    return out


def window_length(eps_t, dt) -> int:
    if eps_t < 0 or not dt > 0:
        raise DataError("need eps_t >= 0 and dt > 0")
    return max(1, math.ceil(eps_t / dt - 1e-12))


def smooth_time(history, eps_t, dt):
    """Causal moving average of a sampled series along axis 0 and its backward difference.

    Near t = 0 the window holds only the samples that exist. Returns
    ``(smoothed, derivative)``; the derivative at the first sample is 0.
    """
    v = np.asarray(history, dtype=float)
    if v.shape[0] == 0:
        raise DataError("empty time series")
    w = window_length(eps_t, dt)
    c = np.cumsum(v, axis=0)
    sm = np.empty_like(v)
    sm[:w] = c[:w] / np.arange(1, min(w, len(v)) + 1).reshape((-1,) + (1,) * (v.ndim - 1))
    if len(v) > w:
        sm[w:] = (c[w:] - c[:-w]) / w
    der = np.zeros_like(v)
    der[1:] = (sm[1:] - sm[:-1]) / dt
    return sm, der


class TimeSmoother:
    """Streaming form of :func:`smooth_time` for the time loop.

    ``trial(x)`` gives the smoothed value that committing ``x`` would produce,
    without changing state, so that a Picard iteration can query it freely.
    """

    def __init__(self, eps_t, dt, first):
        self.w = window_length(eps_t, dt)
        self.dt = dt
        self.buf = deque([np.array(first, dtype=float)], maxlen=self.w)

    @property
    def value(self):
        return sum(self.buf) / len(self.buf)

    def trial(self, x):
        kept = list(self.buf)[-(self.w - 1):] if self.w > 1 else []
        return (sum(kept) + x) / (len(kept) + 1)

    def trial_rate(self, x):
        return (self.trial(x) - self.value) / self.dt

    def commit(self, x):
        self.buf.append(np.array(x, dtype=float))


def measure_constants(eps_x, grid: Grid, n_samples=16, seed=0):
    """Empirical (k_eps, k_0): sup of ||R u||_{C^1} and ||R u||_2 over unit L2 random fields."""
    rng = np.random.default_rng(seed)
    k_eps = k_0 = 0.0
    for _ in range(n_samples):
        u = rng.standard_normal(grid.shape)
        u /= math.sqrt(grid.integrate(u * u))
        r = smooth_space(u, eps_x, grid)
        gy, gx = np.gradient(r, grid.hy, grid.hx)
        c1 = float(np.max(np.abs(r)) + np.max(np.hypot(gx, gy)))
        k_eps = max(k_eps, c1)
        k_0 = max(k_0, math.sqrt(grid.integrate(r * r)))
    return k_eps, k_0
