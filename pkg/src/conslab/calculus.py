"""Discrete differential operators on masked grids.

Centered second-order differences wherever both neighbors carry values,
one-sided second-order stencils at nodes adjacent to the mask edge.  The mixed
compositions that the conservation-law checks rely on (div of a perp gradient,
curl of a gradient) cancel exactly at nodes whose stencil neighborhood is
fully centered, because they read the same four diagonal values with opposite
signs.
"""

import numpy as np
import scipy.sparse as sp

from .fields import Connection, MapField, ScalarField, VecField, l2_norm
from .grid import check_grid_match


# ---------------------------------------------------------------------------
# cached sparse stencil matrices


def _build_diff(grid, axis):
    n, h, dom = grid.n, grid.h, grid.in_domain
    k = 1.0 / (2.0 * h)
    rows, cols, vals = [], [], []
    di, dj = (1, 0) if axis == 0 else (0, 1)

    def ok(i, j):
        return 0 <= i < n and 0 <= j < n and dom[i, j]

    for i in range(n):
        for j in range(n):
            if not dom[i, j]:
                continue
            p = i * n + j
            if ok(i - di, j - dj) and ok(i + di, j + dj):
                rows += [p, p]
                cols += [(i + di) * n + (j + dj), (i - di) * n + (j - dj)]
                vals += [k, -k]
            elif ok(i + di, j + dj) and ok(i + 2 * di, j + 2 * dj):
                rows += [p, p, p]
                cols += [p, (i + di) * n + (j + dj), (i + 2 * di) * n + (j + 2 * dj)]
                vals += [-3 * k, 4 * k, -k]
            elif ok(i - di, j - dj) and ok(i - 2 * di, j - 2 * dj):
                rows += [p, p, p]
                cols += [p, (i - di) * n + (j - dj), (i - 2 * di) * n + (j - 2 * dj)]
                vals += [3 * k, -4 * k, k]
            elif ok(i + di, j + dj):
                rows += [p, p]
                cols += [(i + di) * n + (j + dj), p]
                vals += [1.0 / h, -1.0 / h]
            elif ok(i - di, j - dj):
                rows += [p, p]
                cols += [p, (i - di) * n + (j - dj)]
                vals += [1.0 / h, -1.0 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))


def _build_lap5(grid):
    """Compact five-point Laplacian, rows at interior nodes only."""
    n, h, dom = grid.n, grid.h, grid.in_domain
    c = 1.0 / h**2
    rows, cols, vals = [], [], []
    ii, jj = np.nonzero(grid.interior)
    for i, j in zip(ii, jj):
        p = i * n + j
        rows += [p] * 5
        cols += [p, (i + 1) * n + j, (i - 1) * n + j, i * n + j + 1, i * n + j - 1]
        vals += [-4 * c, c, c, c, c]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))


def operators(grid):
    """Cached stencil matrices for a grid: Dx, Dy, compact Laplacian."""
    cache = getattr(grid, "_op_cache", None)
    if cache is None:
        cache = {
            "Dx": _build_diff(grid, 0),
            "Dy": _build_diff(grid, 1),
            "lap5": _build_lap5(grid),
        }
        cache["DxT"] = cache["Dx"].T.tocsr()
        cache["DyT"] = cache["Dy"].T.tocsr()
        grid._op_cache = cache
    return cache


def _apply(mat, values):
    n = values.shape[0]
    return (mat @ values.ravel()).reshape(n, n)


def dx_values(grid, values):
    return _apply(operators(grid)["Dx"], values)


def dy_values(grid, values):
    return _apply(operators(grid)["Dy"], values)


# ---------------------------------------------------------------------------
# field-level operators


def grad(f):
    g = f.grid
    return VecField.from_arrays(g, dx_values(g, f.values), dy_values(g, f.values))


def perp_grad(f):
    """(-d/dy, d/dx) rotated gradient; div(perp_grad(f)) vanishes identically
    at fully centered nodes."""
    g = f.grid
    return VecField.from_arrays(g, -dy_values(g, f.values), dx_values(g, f.values))


def div(V):
    g = V.grid
    vals = dx_values(g, V.vx.values) + dy_values(g, V.vy.values)
    return ScalarField(g, vals, check=False)


def curl(V):
    g = V.grid
    vals = dx_values(g, V.vy.values) - dy_values(g, V.vx.values)
    return ScalarField(g, vals, check=False)


def jacobian(a, b):
    """da/dx db/dy - da/dy db/dx; antisymmetric in (a, b) bitwise."""
    g = check_grid_match(a, b)
    ax, ay = dx_values(g, a.values), dy_values(g, a.values)
    bx, by = dx_values(g, b.values), dy_values(g, b.values)
    return ScalarField(g, ax * by - ay * bx, check=False)


def laplacian(f):
    """Compact five-point Laplacian (defined at interior nodes, zero elsewhere)."""
    g = f.grid
    return ScalarField(g, _apply(operators(g)["lap5"], f.values), check=False)


def second_derivatives(f):
    """(f_xx, f_xy, f_yy): compact second differences on each axis and the
    centered-of-centered mixed derivative."""
    g = f.grid
    v = f.values
    h2 = g.h**2
    fxx = np.zeros_like(v)
    fyy = np.zeros_like(v)
    inter = g.interior
    fxx[inter] = (np.roll(v, -1, 0) - 2 * v + np.roll(v, 1, 0))[inter] / h2
    fyy[inter] = (np.roll(v, -1, 1) - 2 * v + np.roll(v, 1, 1))[inter] / h2
    fxy = dy_values(g, dx_values(g, v))
    return (ScalarField(g, fxx, check=False), ScalarField(g, fxy, check=False),
            ScalarField(g, fyy, check=False))


def map_grad_stack(u):
    """(m, n, n, 2) array of component gradients of a map."""
    g = u.grid
    out = np.empty((u.m, g.n, g.n, 2))
    for i in range(u.m):
        out[i, :, :, 0] = dx_values(g, u.comps[i])
        out[i, :, :, 1] = dy_values(g, u.comps[i])
    return out


def connection_apply(omega, u):
    """(Omega . grad u)^i = sum_j Omega^i_j . grad(u^j), nodewise 2-vector dots."""
    check_grid_match(omega, u)
    if omega.m != u.m:
        raise ValueError("connection/map size mismatch")
    G = map_grad_stack(u)
    vals = np.einsum("ijxyc,jxyc->ixy", omega.dense(), G)
    return MapField(u.grid, vals, check=False)


def w12_seminorm(f):
    """L2 norm of the discrete gradient (scalar or map field)."""
    if isinstance(f, MapField):
        G = map_grad_stack(f)
        w = f.grid.weights
        return float(np.sqrt(np.sum(w[..., None] * G**2)))
    return l2_norm(grad(f))


def map_laplacian(u):
    comps = np.stack([laplacian(u.comp(i)).values for i in range(u.m)])
    return MapField(u.grid, comps, check=False)
