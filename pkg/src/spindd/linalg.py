"""Matrix-free conjugate gradients for stacks of grid fields."""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError
from .grid import BC, Grid, Side


def _dot(a, b):
    return np.sum(a * b, axis=(-2, -1), keepdims=True)


def _project_out(v, basis):
    for q in basis:
        v = v - _dot(v, q) * q
    return v


def cg(apply_A, b, x0=None, tol=1e-10, max_iter=1000, null_space=()):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    ``b`` may carry leading batch axes; every (ny, nx) slice is an independent
    system sharing the operator. Iteration stops once the max-norm of the
    residual is below ``tol`` in every slice. ``null_space`` is a sequence of
    orthonormal grid vectors spanning the kernel of a singular ``A``; the
    right-hand side and iterates are kept orthogonal to it.

    Returns ``(x, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if null_space:
        b = _project_out(b, null_space)
        x = _project_out(x, null_space)
    r = b - apply_A(x)
    if null_space:
        r = _project_out(r, null_space)
    if np.max(np.abs(r), initial=0.0) <= tol:
        return x, 0
    p = r.copy()
    rr = _dot(r, r)
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = _dot(p, Ap)
        alpha = np.divide(rr, pAp, out=np.zeros_like(rr), where=pAp > 0)
        x += alpha * p
        if it % 50 == 0:
            r = b - apply_A(x)
        else:
            r -= alpha * Ap
        if null_space:
            r = _project_out(r, null_space)
        if np.max(np.abs(r)) <= tol:
            # confirm against the true residual before accepting
            true_r = b - apply_A(x)
            if null_space:
                true_r = _project_out(true_r, null_space)
            if np.max(np.abs(true_r)) <= tol:
                return x, it
            r = true_r
        rr_new = _dot(r, r)
        beta = np.divide(rr_new, rr, out=np.zeros_like(rr), where=rr > 0)
        p = r + beta * p
        rr = rr_new
    raise ConvergenceError(
        f"CG did not reach tol={tol:g} in {max_iter} iterations",
        residual=float(np.max(np.abs(r))), iterations=max_iter)


def _null_1d(n, lo: BC | None, hi: BC | None, periodic: bool):
    i = np.arange(n)
    alt = (-1.0) ** i
    if periodic:
        return [np.ones(n)] + ([alt] if n % 2 == 0 else [])
    if lo is BC.DIRICHLET and hi is BC.DIRICHLET:
        return [alt]
    if lo is BC.NEUMANN and hi is BC.NEUMANN:
        return [np.ones(n)]
    return []


def wide_laplacian_null_space(grid: Grid):
    """Orthonormal kernel of the homogeneous DIV2 o GRAD2 operator.

    On a direction with contacts at both ends the odd-even mode (-1)^i is
    invisible to central differences; on a direction with insulators at both
    ends constants are. The kernel is the tensor product of the 1-D kernels.
    """
    t = grid.tags
    nx_null = _null_1d(grid.nx, t[Side.LEFT], t[Side.RIGHT], grid.periodic)
    ny_null = _null_1d(grid.ny, t[Side.BOTTOM], t[Side.TOP], grid.periodic)
    basis = []
    for vy in ny_null:
        for vx in nx_null:
            q = np.outer(vy, vx)
            basis.append(q / np.linalg.norm(q))
    return basis
