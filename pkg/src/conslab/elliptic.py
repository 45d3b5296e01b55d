"""Poisson solvers on the masked grid and the Hodge splitting of vector fields.

The scalar solvers use the compact five-point Laplacian.  The Hodge splitting
instead assembles the *composed* operator (div of grad, curl of perp-grad built
from the first-derivative stencils) so that a field that is exactly a discrete
gradient or perp-gradient is recovered to solver precision, and the div/curl
certificates of the remainder hold at centered nodes regardless of the mask.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import grad, operators, perp_grad
from .fields import ScalarField, VecField, integrate, l2_norm
from .grid import check_grid_match

DIRECT = "direct_sparse"
CG = "cg"


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    solver: str
    projection: float = 0.0


class SolveError(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# matrix assembly (cached per grid)


def _cache(grid):
    c = getattr(grid, "_elliptic_cache", None)
    if c is None:
        c = {}
        grid._elliptic_cache = c
    return c


def dirichlet_system(grid):
    """Reduced SPD system for -lap phi = -f with phi = 0 outside the interior."""
    c = _cache(grid)
    if "dirichlet" not in c:
        n, h = grid.n, grid.h
        idx = -np.ones(n * n, dtype=int)
        ii, jj = np.nonzero(grid.interior)
        pts = ii * n + jj
        idx[pts] = np.arange(len(pts))
        coeff = 1.0 / h**2
        rows, cols, vals = [], [], []
        for r, (i, j) in enumerate(zip(ii, jj)):
            rows.append(r); cols.append(r); vals.append(4 * coeff)
            for q in ((i + 1) * n + j, (i - 1) * n + j, i * n + j + 1, i * n + j - 1):
                if idx[q] >= 0:
                    rows.append(r); cols.append(idx[q]); vals.append(-coeff)
        K = sp.csr_matrix((vals, (rows, cols)), shape=(len(pts), len(pts)))
        c["dirichlet"] = (K, pts)
    return c["dirichlet"]


def _dirichlet_lu(grid):
    c = _cache(grid)
    if "dirichlet_lu" not in c:
        K, _ = dirichlet_system(grid)
        c["dirichlet_lu"] = spla.splu(K.tocsc())
    return c["dirichlet_lu"]


def neumann_matrix(grid):
    """Five-point Laplacian closed with mirrored ghost nodes across the mask
    edge (zero discrete normal derivative); rows at every domain node."""
    c = _cache(grid)
    if "neumann" not in c:
        n, h, dom = grid.n, grid.h, grid.in_domain
        coeff = 1.0 / h**2
        rows, cols, vals = [], [], []

        def ok(i, j):
            return 0 <= i < n and 0 <= j < n and dom[i, j]

        ii, jj = np.nonzero(dom)
        for i, j in zip(ii, jj):
            p = i * n + j
            for di, dj in ((1, 0), (0, 1)):
                hp, hm = ok(i + di, j + dj), ok(i - di, j - dj)
                if hp and hm:
                    rows += [p, p, p]
                    cols += [(i + di) * n + j + dj, (i - di) * n + j - dj, p]
                    vals += [coeff, coeff, -2 * coeff]
                elif hp:
                    rows += [p, p]
                    cols += [(i + di) * n + j + dj, p]
                    vals += [2 * coeff, -2 * coeff]
                elif hm:
                    rows += [p, p]
                    cols += [(i - di) * n + j - dj, p]
                    vals += [2 * coeff, -2 * coeff]
        # identity rows outside the domain keep the full-grid system square
        for p in np.nonzero(~dom.ravel())[0]:
            rows.append(p); cols.append(p); vals.append(1.0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))
        c["neumann"] = A
    return c["neumann"]


def _neumann_lu(grid):
    c = _cache(grid)
    if "neumann_lu" not in c:
        A = neumann_matrix(grid)
        w = grid.in_domain.ravel().astype(float)
        # bordered system pins the constant mode and absorbs residual
        # incompatibility into the multiplier
        B = sp.bmat([[A, w[:, None]], [w[None, :], None]], format="csc")
        c["neumann_lu"] = (spla.splu(B), w)
    return c["neumann_lu"]


# ---------------------------------------------------------------------------
# scalar Poisson solves


def solve_dirichlet(f, tol=1e-10, method=DIRECT):
    """Solve lap phi = f at interior nodes with phi = 0 on the boundary ring."""
    g = f.grid
    K, pts = dirichlet_system(g)
    b = -f.values.ravel()[pts]
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return ScalarField.zeros(g), SolveReport(0, 0.0, method)
    if method == CG:
        M = sp.diags(1.0 / K.diagonal())
        maxiter = 20 * g.n**2
        it = [0]

        def count(_):
            it[0] += 1

        x, info = spla.cg(K, b, rtol=tol, atol=0.0, maxiter=maxiter, M=M,
                          callback=count)
        res = float(np.linalg.norm(K @ x - b) / bnorm)
        report = SolveReport(it[0], res, CG)
        if info != 0 or res > tol:
            raise SolveError("conjugate gradient did not converge", report)
    else:
        x = _dirichlet_lu(g).solve(b)
        res = float(np.linalg.norm(K @ x - b) / bnorm)
        report = SolveReport(0, res, DIRECT)
        if res > tol:
            raise SolveError("direct solve residual above tolerance", report)
    vals = np.zeros(g.n * g.n)
    vals[pts] = x
    return ScalarField(g, vals.reshape(g.n, g.n), check=False), report


def solve_neumann(f, tol=1e-10):
    """Solve lap phi = f - mean(f) with zero discrete normal derivative and
    the weighted integral of phi normalized to zero."""
    g = f.grid
    lu, w = _neumann_lu(g)
    ndom = float(w.sum())
    fvals = f.values.ravel()
    c0 = float(fvals @ w) / ndom
    b = np.where(w > 0, fvals - c0, 0.0)
    sol = lu.solve(np.concatenate([b, [0.0]]))
    x, mu = sol[:-1], sol[-1]
    projection = c0 + mu
    A = neumann_matrix(g)
    rhs_eff = np.where(w > 0, fvals - projection, 0.0)
    rnorm = float(np.linalg.norm(rhs_eff))
    res = float(np.linalg.norm(A @ x - rhs_eff) / rnorm) if rnorm > 0 else \
        float(np.linalg.norm(A @ x))
    report = SolveReport(0, res, DIRECT, projection=projection)
    if rnorm > 0 and res > tol:
        raise SolveError("neumann solve residual above tolerance", report)
    phi = ScalarField(g, x.reshape(g.n, g.n), check=False)
    shift = integrate(phi) / (g.weights.sum())
    phi = ScalarField(g, np.where(g.in_domain, phi.values - shift, 0.0), check=False)
    return phi, report


# ---------------------------------------------------------------------------
# Hodge splitting V = perp_grad(E) + grad(D) + rem


def _flux_nodes(grid):
    """Nodes with at least one one-sided first-derivative stencil, with the
    outward direction signs used for the natural flux rows."""
    n, dom = grid.n, grid.in_domain
    out = {}
    ii, jj = np.nonzero(dom)
    for i, j in zip(ii, jj):
        comps = []
        for axis, (di, dj) in enumerate(((1, 0), (0, 1))):
            hp = 0 <= i + di < n and 0 <= j + dj < n and dom[i + di, j + dj]
            hm = 0 <= i - di < n and 0 <= j - dj < n and dom[i - di, j - dj]
            if hp and hm:
                continue
            comps.append((axis, -1.0 if hp else 1.0))
        if comps:
            out[i * n + j] = comps
    return out


def hodge_systems(grid):
    c = _cache(grid)
    if "hodge" not in c:
        ops = operators(grid)
        Dx, Dy = ops["Dx"], ops["Dy"]
        n = grid.n
        NN = n * n
        M = (Dx @ Dx + Dy @ Dy).tocsr()
        flat_int = grid.interior.ravel()
        flat_dom = grid.in_domain.ravel()

        # E-system: composed rows at interior nodes, E = 0 elsewhere
        keep = sp.diags(flat_int.astype(float))
        ident = sp.diags((~flat_int).astype(float))
        Esys = (keep @ M + ident).tocsc()

        flux = _flux_nodes(grid)
        pde_mask = flat_dom & ~np.isin(np.arange(NN), np.fromiter(flux, int, len(flux)))

        # hard constraints: composed-Laplacian rows at full-stencil nodes,
        # identity at non-domain nodes, one mean row
        rows = [M[pde_mask], sp.identity(NN, format="csr")[~flat_dom],
                sp.csr_matrix(flat_dom.astype(float)[None, :])]
        C = sp.vstack(rows).tocsr()

        # soft rows: outward one-sided flux at mask-edge nodes
        frows, fcols, fvals, forder = [], [], [], []
        Dxl, Dyl = Dx.tolil(), Dy.tolil()
        for r, (p, comps) in enumerate(sorted(flux.items())):
            forder.append((p, comps))
            acc = {}
            for axis, sign in comps:
                D = Dxl if axis == 0 else Dyl
                for col, v in zip(D.rows[p], D.data[p]):
                    acc[col] = acc.get(col, 0.0) + sign * v
            for col, v in acc.items():
                frows.append(r); fcols.append(col); fvals.append(v)
        F = sp.csr_matrix((fvals, (frows, fcols)), shape=(len(flux), NN))

        KKT = sp.bmat([[(F.T @ F).tocsr(), C.T], [C, None]], format="csc")
        c["hodge"] = {
            "Esys_lu": spla.splu(Esys),
            "M": M,
            "pde_mask": pde_mask,
            "flux": forder,
            "F": F,
            "C": C,
            "KKT_lu": spla.splu(KKT),
            "ncon": C.shape[0],
        }
    return c["hodge"]


def hodge_decompose(V, tol=1e-8):
    """Split V into perp_grad(E) + grad(D) + rem with E Dirichlet (zero on the
    boundary ring) and D defined up to its pinned mean.

    div(rem) and curl(rem) are solver-small at interior full-stencil nodes;
    the mask inconsistency of a generic field is pushed onto the boundary flux
    rows and shows up in rem itself.
    """
    g = V.grid
    sysd = hodge_systems(g)
    ops = operators(g)
    Dx, Dy = ops["Dx"], ops["Dy"]
    flat_int = g.interior.ravel()

    vx, vy = V.vx.values.ravel(), V.vy.values.ravel()
    curlV = Dx @ vy - Dy @ vx
    e = sysd["Esys_lu"].solve(np.where(flat_int, curlV, 0.0))
    e[~flat_int] = 0.0  # the Dirichlet data is given, not solved

    wx = vx + Dy @ e
    wy = vy - Dx @ e

    rhs_pde = (Dx @ wx + Dy @ wy)[sysd["pde_mask"]]
    d_con = np.concatenate([rhs_pde, np.zeros(sysd["ncon"] - len(rhs_pde))])
    gsoft = np.array([sum(s * (wx[p] if ax == 0 else wy[p]) for ax, s in comps)
                      for p, comps in sysd["flux"]])
    rhs = np.concatenate([sysd["F"].T @ gsoft, d_con])
    sol = sysd["KKT_lu"].solve(rhs)
    d = sol[:g.n * g.n]

    E = ScalarField(g, e.reshape(g.n, g.n), check=False)
    D = ScalarField(g, d.reshape(g.n, g.n), check=False)
    shift = integrate(D) / g.weights.sum()
    D = ScalarField(g, np.where(g.in_domain, D.values - shift, 0.0), check=False)

    rem = V - perp_grad(E) - grad(D)

    scale = max(float(np.linalg.norm(np.where(flat_int, curlV, 0.0))), 1.0)
    res_e = float(np.linalg.norm((sysd["M"] @ e - curlV)[flat_int])) / scale
    res_d = float(np.linalg.norm((sysd["C"] @ d - d_con))) / max(
        float(np.linalg.norm(d_con)), 1.0)
    report = SolveReport(0, max(res_e, res_d), DIRECT)
    if report.final_residual > tol:
        raise SolveError("hodge solve residual above tolerance", report)
    return E, D, rem, report


def hminus1_norm(f):
    """Energy norm of the Dirichlet Poisson solve against f: the discrete
    stand-in for the H^{-1} norm of a residual."""
    phi, _ = solve_dirichlet(f)
    return l2_norm(grad(phi))


def vec_hminus1(fields):
    """Root-sum-square H^{-1} proxy over a list of scalar residuals."""
    return float(np.sqrt(sum(hminus1_norm(f) ** 2 for f in fields)))
