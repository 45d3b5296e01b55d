"""Coulomb moving frames along maps into an oriented surface and the
cosh/sinh conservation laws they generate.

A frame is an orthonormal tangent pair (e1, e2) along u; the Coulomb
condition div((e2, grad e1)) = 0 is enforced by rotating the initial frame
through a nodal angle found by Newton iteration on the discrete divergence
itself (the single Poisson update is the first iterate).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import (dx_values, dy_values, jacobian, map_grad_stack,
                       operators, second_derivatives)
from .elliptic import solve_dirichlet, vec_hminus1
from .fields import MapField, ScalarField, UNIT_SPHERE, VecField, l2_norm
from .grid import check_grid_match


@dataclass
class Frame:
    e1: MapField
    e2: MapField
    coulomb_residual: float
    theta: ScalarField
    newton_iters: int


class FrameError(RuntimeError):
    pass


POLE_MARGIN = 0.1  # radians; the initial frame needs a usable reference axis


def _connection_form(grid, e1c, e2c):
    """w_mu = sum_k e2^k D_mu e1^k as (n, n, 2)."""
    out = np.zeros((grid.n, grid.n, 2))
    for k in range(e1c.shape[0]):
        out[..., 0] += e2c[k] * dx_values(grid, e1c[k])
        out[..., 1] += e2c[k] * dy_values(grid, e1c[k])
    return out


def _closure_ops(grid):
    """Row operators of the discrete Coulomb system.

    On the square the natural boundary condition (zero outward flux) is
    imposed strongly at the edge nodes; on the staircase disk the strong flux
    rows misrepresent the smooth normal, and the full set of one-sided
    divergence rows is consistent there, so those are used instead.
    """
    if grid.domain == "square":
        from .gauge import _div_flux_ops
        return _div_flux_ops(grid)
    ops = operators(grid)
    cache = getattr(grid, "_frame_cache", None)
    if cache is None:
        keep = sp.diags(grid.in_domain.ravel().astype(float))
        cache = (keep @ ops["Dx"], keep @ ops["Dy"])
        grid._frame_cache = cache
    return cache


def _div_all(grid, w):
    Ax, Ay = _closure_ops(grid)
    return Ax @ w[..., 0].ravel() + Ay @ w[..., 1].ravel()


def connection_1form(frame):
    """(e2, grad e1) of a frame as a VecField."""
    g = frame.e1.grid
    w = _connection_form(g, frame.e1.comps, frame.e2.comps)
    return VecField.from_arrays(g, w[..., 0], w[..., 1])


def coulomb_frame(u, normal=None, tol=1e-8, max_newton=60,
                  pole_margin=POLE_MARGIN):
    """Build a Coulomb moving frame along a unit-sphere map.

    The best-conditioned coordinate axis is projected onto the tangent
    planes for the initial e1 (rejecting maps that come within POLE_MARGIN
    of the axis poles), e2 = n x e1, and the frame is rotated by the nodal
    angle solving the discrete Coulomb condition.
    """
    if u.constraint != UNIT_SPHERE and normal is None:
        raise FrameError("coulomb_frame needs a unit-sphere map or a normal callback")
    g = u.grid
    if normal is None:
        nrm = u.comps
    else:
        pts = u.comps.reshape(u.m, -1).T
        nrm = np.asarray(normal(pts)).T.reshape(u.m, g.n, g.n)

    # pick the reference axis with the largest pole margin
    best_axis, best_margin, best_node = None, -1.0, None
    for axis in range(u.m):
        dots = np.abs(nrm[axis])
        worst = float(np.max(dots[g.in_domain]))
        margin = math.acos(min(worst, 1.0))
        if margin > best_margin:
            best_margin = margin
            best_axis = axis
            idx = np.argwhere((dots >= worst - 1e-15) & g.in_domain)
            best_node = tuple(idx[0])
    if best_margin < pole_margin:
        raise FrameError(
            f"map passes within {best_margin:.3f} rad of every reference-axis "
            f"pole (first offending node {best_node}); no usable initial frame")

    a = np.zeros((u.m, 1, 1))
    a[best_axis] = 1.0
    proj = a - np.sum(a * nrm, axis=0) * nrm
    length = np.sqrt(np.sum(proj**2, axis=0))
    length = np.where(g.in_domain, length, 1.0)
    e1 = np.where(g.in_domain, proj / length, 0.0)
    e2 = np.where(g.in_domain, _cross(nrm, e1), 0.0)

    theta, res, iters = _coulomb_rotate(g, e1, e2, tol, max_newton)
    c, s = np.cos(theta), np.sin(theta)
    e1r = np.where(g.in_domain, c * e1 + s * e2, 0.0)
    e2r = np.where(g.in_domain, -s * e1 + c * e2, 0.0)
    return Frame(
        e1=MapField(g, e1r, check=False),
        e2=MapField(g, e2r, check=False),
        coulomb_residual=res,
        theta=ScalarField(g, theta, check=False),
        newton_iters=iters,
    )


def _cross(a, b):
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _coulomb_rotate(g, e1, e2, tol, max_newton=12):
    """Newton iteration on theta for div((e2(theta), grad e1(theta))) = 0."""
    ops = operators(g)
    Dx, Dy = ops["Dx"], ops["Dy"]
    dom = g.in_domain.ravel()

    e1_0, e2_0 = e1, e2
    theta = np.zeros((g.n, g.n))

    def rotated(theta):
        c, s = np.cos(theta), np.sin(theta)
        return c * e1_0 + s * e2_0, -s * e1_0 + c * e2_0

    def scale(e1c):
        G = np.stack([np.stack([dx_values(g, e1c[k]) for k in range(3)]),
                      np.stack([dy_values(g, e1c[k]) for k in range(3)])])
        return 1.0 + float(np.sqrt(np.sum(g.weights[None, None] * G**2)))

    def fnorm(F):
        return float(np.sqrt(np.sum(g.weights.ravel() * F**2)))

    e1c, e2c = rotated(theta)
    F = _div_all(g, _connection_form(g, e1c, e2c))
    target = tol * scale(e1c)
    res = fnorm(F)
    iters = 0
    W = sp.diags(g.weights.ravel())
    NN = g.n * g.n
    w_b = dom.astype(float)
    while res > target and iters < max_newton:
        # exact linearization: dw = -dtheta (e1, D e1) + (e2, D(dtheta e2))
        ax = -np.sum(e1c * np.stack([dx_values(g, e1c[k]) for k in range(3)]), axis=0)
        ay = -np.sum(e1c * np.stack([dy_values(g, e1c[k]) for k in range(3)]), axis=0)
        Sx = None
        Sy = None
        for k in range(3):
            px = _scale_mat(Dx, e2c[k], e2c[k])
            py = _scale_mat(Dy, e2c[k], e2c[k])
            Sx = px if Sx is None else Sx + px
            Sy = py if Sy is None else Sy + py
        Ax, Ay = _closure_ops(g)
        J = (Ax @ (sp.diags(ax.ravel()) + Sx)
             + Ay @ (sp.diags(ay.ravel()) + Sy)).tolil()
        for p in np.nonzero(~dom)[0]:
            J.rows[p] = [p]
            J.data[p] = [1.0]
        J = J.tocsr()

        def try_step(delta):
            e1n, e2n = rotated(theta + delta.reshape(g.n, g.n))
            Fn = _div_all(g, _connection_form(g, e1n, e2n))
            return Fn, fnorm(Fn)

        # plain Newton through the mean-pinned bordered system, with a short
        # backtracking line search
        B = sp.bmat([[J, w_b[:, None]], [w_b[None, :], None]], format="csc")
        newton = spla.splu(B).solve(np.concatenate([-F, [0.0]]))[:NN]
        newton = np.where(dom, newton, 0.0)
        accepted = False
        step = 1.0
        for _ in range(5):
            Fn, rn = try_step(step * newton)
            if rn < res:
                delta, accepted = step * newton, True
                break
            step *= 0.5
        if not accepted:
            # Levenberg-Marquardt fallback for the strongly nonlinear regime
            JtW = J.T @ W
            H = JtW @ J
            rhs = -(JtW @ F)
            diag = np.maximum(H.diagonal(), 1e-12)
            mu = 1e-6
            for _ in range(30):
                cand = spla.splu((H + sp.diags(mu * diag)).tocsc()).solve(rhs)
                cand = np.where(dom, cand, 0.0)
                Fn, rn = try_step(cand)
                if rn < res:
                    delta, accepted = cand, True
                    break
                mu *= 10.0
        if not accepted:
            break
        theta = theta + delta.reshape(g.n, g.n)
        e1c, e2c = rotated(theta)
        F, res = Fn, rn
        iters += 1
    if res > target:
        raise FrameError(
            f"Coulomb rotation did not converge: residual {res:.3e} > {target:.3e}")
    return theta, res, iters


def _scale_mat(D, left, right):
    return D.multiply(right.ravel()[None, :]).multiply(left.ravel()[:, None]).tocsr()


def frame_invariant_defects(frame, u):
    """(orthonormality defect, tangency defect) measured nodewise sup."""
    g = frame.e1.grid
    e1, e2 = frame.e1.comps, frame.e2.comps
    dom = g.in_domain
    n1 = np.abs(np.sum(e1 * e1, axis=0) - 1.0)
    n2 = np.abs(np.sum(e2 * e2, axis=0) - 1.0)
    o12 = np.abs(np.sum(e1 * e2, axis=0))
    ortho = float(max(n1[dom].max(), n2[dom].max(), o12[dom].max()))
    t1 = np.abs(np.sum(e1 * u.comps, axis=0))
    t2 = np.abs(np.sum(e2 * u.comps, axis=0))
    tang = float(max(t1[dom].max(), t2[dom].max()))
    return ortho, tang


def solve_a(frame):
    """Potential of the frame's curvature 2-form: dirichlet solve of minus the
    sum of component Jacobians (the Wente structure gives its sup bound)."""
    g = frame.e1.grid
    rhs = np.zeros((g.n, g.n))
    for k in range(frame.e1.m):
        rhs += jacobian(frame.e1.comp(k), frame.e2.comp(k)).values
    phi, _ = solve_dirichlet(ScalarField(g, -rhs, check=False))
    return phi


def frame_conservation_residual(u, frame, a):
    """H^{-1}-proxy norms of the two hyperbolic-weighted conservation laws."""
    g = check_grid_match(u, frame.e1)
    G = map_grad_stack(u)
    gx, gy = G[..., 0], G[..., 1]
    e1, e2 = frame.e1.comps, frame.e2.comps
    ch, sh = np.cosh(a.values), np.sinh(a.values)

    du_e1 = (np.sum(gx * e1, axis=0), np.sum(gy * e1, axis=0))
    du_e2 = (np.sum(gx * e2, axis=0), np.sum(gy * e2, axis=0))
    dpu_e1 = (-np.sum(gy * e1, axis=0), np.sum(gx * e1, axis=0))
    dpu_e2 = (-np.sum(gy * e2, axis=0), np.sum(gx * e2, axis=0))

    w1 = VecField.from_arrays(g, ch * du_e1[0] + sh * dpu_e2[0],
                              ch * du_e1[1] + sh * dpu_e2[1])
    w2 = VecField.from_arrays(g, ch * du_e2[0] - sh * dpu_e1[0],
                              ch * du_e2[1] - sh * dpu_e1[1])
    out = []
    from .calculus import div
    for w in (w1, w2):
        d = div(w)
        f = ScalarField(g, np.where(g.interior, d.values, 0.0), check=False)
        out.append(vec_hminus1([f]))
    return out[0], out[1]


def second_derivative_report(u, frame):
    """Half-disk integral of |hess u| against the exponential-energy bracket;
    the ratio is the empirical constant, stable under the dilation sweep."""
    g = u.grid
    hess = np.zeros((g.n, g.n))
    for k in range(u.m):
        fxx, fxy, fyy = second_derivatives(u.comp(k))
        hess += fxx.values**2 + 2 * fxy.values**2 + fyy.values**2
    hess = np.sqrt(hess)
    half = g.interior & (g.X**2 + g.Y**2 <= 0.25)
    lhs = float(np.sum((g.weights * hess)[half]))

    ge1 = _grad_energy(frame.e1)
    ge2 = _grad_energy(frame.e2)
    grad_e_sq = ge1 + ge2
    gu = map_grad_stack(u)
    norm_gu = float(np.sqrt(np.sum(g.weights[..., None, None] *
                                   np.moveaxis(gu, 0, 2)**2)))
    bracket = math.exp(grad_e_sq / (4 * math.pi)) * \
        (math.sqrt(grad_e_sq) + 1.0) * norm_gu
    return {
        "hess_l1_half": lhs,
        "bracket": bracket,
        "empirical_C": lhs / bracket if bracket > 0 else float("nan"),
        "grad_e_sq": grad_e_sq,
        "norm_grad_u": norm_gu,
    }


def _grad_energy(e):
    g = e.grid
    G = map_grad_stack(e)
    return float(np.sum(g.weights[..., None] * G**2))
