"""Construction of the conserved-current coefficients (A, B) and the
conservation-law residual certificates.

Given a gauged small-energy connection, a Picard iteration alternates two
entrywise Poisson solves (Neumann for the deviation Ahat with its mean pinned,
Dirichlet for B) on the coupled Jacobian-sourced system; the limit yields
A = (Ahat + id) P^{-1} and B with grad(A) - A Omega ~ perp_grad(B), and the
current A grad(u) + B perp_grad(u) of any solution is divergence free up to
discretization error.
"""

from dataclasses import dataclass, field

import numpy as np

from .calculus import (div, dx_values, dy_values, grad, map_grad_stack,
                       operators, perp_grad)
from .elliptic import (hodge_decompose, hodge_systems, solve_dirichlet,
                       solve_neumann, vec_hminus1)
from .fields import (MatField, MapField, ScalarField, VecField, l2_norm,
                     matmul, mat_inv, sup_norm, transpose)
from .grid import check_grid_match


@dataclass
class ABOptions:
    tol_fp: float = 1e-9
    max_sweeps: int = 80
    # orientation of the curl-sourced term in the B equation; the published
    # system is ambiguous about the index convention, so the self-consistency
    # certificate (the conserved-current compatibility residual) pins it
    b_curl_sign: float = -1.0


@dataclass
class ABResult:
    A: MatField
    B: MatField
    Ahat: MatField
    gauge: object
    fp_iters: int
    fp_residual: float
    trace: list
    bound_ratios: dict
    dist_so: float
    min_singular: float


class FixedPointError(RuntimeError):
    pass


def _mat_dx(A):
    g = A.grid
    m = A.m
    flat = A.entries.reshape(m * m, g.n * g.n)
    ops = operators(g)
    return ((ops["Dx"] @ flat.T).T.reshape(m, m, g.n, g.n),
            (ops["Dy"] @ flat.T).T.reshape(m, m, g.n, g.n))


def _matjac(F, G):
    """dF/dx . dG/dy - dF/dy . dG/dx with nodal matrix products."""
    fx, fy = F if isinstance(F, tuple) else _mat_dx(F)
    gx, gy = G if isinstance(G, tuple) else _mat_dx(G)
    return (np.einsum("ikxy,kjxy->ijxy", fx, gy)
            - np.einsum("ikxy,kjxy->ijxy", fy, gx))


def _conservative_div(grid, Wx, Wy):
    """Entrywise divergence of a matrix-valued 2-field in conservative form."""
    m = Wx.shape[0]
    NN = grid.n * grid.n
    ops = operators(grid)
    out = (ops["Dx"] @ Wx.reshape(m * m, NN).T).T + \
          (ops["Dy"] @ Wy.reshape(m * m, NN).T).T
    return out.reshape(m, m, grid.n, grid.n)


def build_AB(omega, gauge_result, opts=None):
    """Picard iteration for the coupled system defining (Ahat, B).

    From (0, 0), alternately resolve the Ahat equation (Neumann, deviation
    mean pinned to zero so that Ahat + id averages to the identity) and the
    B equation (Dirichlet); stops when the combined relative update is below
    tol_fp, errors out if the update norm grows five sweeps in a row.
    """
    opts = opts or ABOptions()
    g = omega.grid
    m = omega.m
    P = gauge_result.P
    xi = gauge_result.xi
    Pinv = transpose(P)
    omega_dense = omega.dense()

    dxi = _mat_dx(xi)
    dP = _mat_dx(P)
    dPinv = _mat_dx(Pinv)
    xix, xiy = dxi
    # fixed pieces of the B equation right-hand side
    xiPx = np.einsum("ikxy,kjxy->ijxy", xix, Pinv.entries)
    xiPy = np.einsum("ikxy,kjxy->ijxy", xiy, Pinv.entries)
    rhs_b_fixed = -_conservative_div(g, xiPx, xiPy)

    Ahat = MatField.zeros(g, m)
    B = MatField.zeros(g, m)
    trace = []
    grow = 0
    prev_delta = None
    fp_iters = 0
    for sweep in range(opts.max_sweeps):
        rhs_a = _matjac(_mat_dx(B), dP) - _matjac(_mat_dx(Ahat), dxi)
        new_a = np.empty_like(Ahat.entries)
        for i in range(m):
            for j in range(m):
                f = ScalarField(g, rhs_a[i, j], check=False)
                phi, _ = solve_neumann(f)
                new_a[i, j] = phi.values
        Ahat_new = MatField(g, new_a, check=False)

        dA = _mat_dx(Ahat_new)
        term1 = opts.b_curl_sign * _matjac(dA, dPinv)
        AxiPx = np.einsum("ikxy,kjxy->ijxy", Ahat_new.entries, xiPx)
        AxiPy = np.einsum("ikxy,kjxy->ijxy", Ahat_new.entries, xiPy)
        rhs_b = term1 - _conservative_div(g, AxiPx, AxiPy) + rhs_b_fixed
        new_b = np.empty_like(B.entries)
        for i in range(m):
            for j in range(m):
                f = ScalarField(g, rhs_b[i, j], check=False)
                phi, _ = solve_dirichlet(f)
                new_b[i, j] = phi.values
        B_new = MatField(g, new_b, check=False)

        delta = (l2_norm(MatField(g, Ahat_new.entries - Ahat.entries, check=False))
                 + l2_norm(MatField(g, B_new.entries - B.entries, check=False)))
        scale = 1.0 + l2_norm(Ahat_new) + l2_norm(B_new)
        rel = delta / scale
        trace.append(rel)
        Ahat, B = Ahat_new, B_new
        fp_iters = sweep + 1
        if rel <= opts.tol_fp:
            break
        if prev_delta is not None and rel > prev_delta:
            grow += 1
            if grow >= 5:
                raise FixedPointError(
                    "fixed-point update norm grew five sweeps in a row; the "
                    "connection energy is too large for the contraction")
        else:
            grow = 0
        prev_delta = rel
    else:
        raise FixedPointError(
            f"fixed point did not converge in {opts.max_sweeps} sweeps "
            f"(last update {trace[-1]:.3e})")

    Atilde = MatField(g, Ahat.entries + MatField.identity(g, m).entries,
                      check=False)
    A = matmul(Atilde, Pinv)

    # residual of the re-substituted system (projection constants removed)
    rhs_a = _matjac(_mat_dx(B), dP) - _matjac(_mat_dx(Ahat), dxi)
    fp_res = 0.0
    lap = operators(g)["lap5"]
    NN = g.n * g.n
    inter = g.interior.ravel()
    for i in range(m):
        for j in range(m):
            r = (lap @ Ahat.entries[i, j].ravel() - rhs_a[i, j].ravel())
            r = r[inter]
            r -= r.mean()
            fp_res += float(np.sum(r**2)) * g.h**2
    fp_res = float(np.sqrt(fp_res))

    nodes = A.nodes()[g.in_domain.ravel()]
    svals = np.linalg.svd(nodes, compute_uv=False)
    min_sv = float(svals.min())
    dist_so = _dist_rotations(A)

    energy_in = l2_norm(omega) ** 2
    Ainv = mat_inv(A)
    i15 = (_grad_sq(A) + _grad_sq(Ainv) + dist_so**2) / energy_in \
        if energy_in > 0 else float("nan")
    i16 = _grad_sq(B) / energy_in if energy_in > 0 else float("nan")
    ratios = {"i15": i15, "i16": i16,
              "grad_A": np.sqrt(_grad_sq(A)), "grad_B": np.sqrt(_grad_sq(B))}
    return ABResult(A=A, B=B, Ahat=Ahat, gauge=gauge_result, fp_iters=fp_iters,
                    fp_residual=fp_res, trace=trace, bound_ratios=ratios,
                    dist_so=dist_so, min_singular=min_sv)


def _grad_sq(A):
    dx, dy = _mat_dx(A)
    w = A.grid.weights
    return float(np.sum(w * (dx**2 + dy**2)))


def _dist_rotations(A):
    """sup over nodes of the Frobenius distance from A to its polar rotation."""
    g = A.grid
    nodes = A.nodes()[g.in_domain.ravel()]
    X = nodes.copy()
    for _ in range(30):
        Xn = 0.5 * (X + np.linalg.inv(np.swapaxes(X, 1, 2)))
        if np.max(np.abs(Xn - X)) < 1e-14:
            X = Xn
            break
        X = Xn
    return float(np.max(np.sqrt(np.sum((nodes - X) ** 2, axis=(1, 2)))))


def shatah_pair(u, omega):
    """The symmetric-target special case: A = id and B the antisymmetric
    stream potential with perp_grad(B) ~ -Omega (the sign the compatibility
    relation forces for A = id).

    The symmetric current has nonzero boundary flux, so no boundary-vanishing
    potential exists; the free-boundary stream function is the gradient
    potential of the quarter-turn-rotated entry, i.e. the D part of its Hodge
    split, pinned to zero mean.
    """
    g = u.grid
    m = u.m
    ent = np.zeros((m, m, g.n, g.n))
    for i in range(m):
        for j in range(i + 1, m):
            arr = omega.entry(i, j).stack()
            # perp_grad(B) = -entry  <=>  grad(B) = (-entry_y, entry_x)^perp
            W = VecField.from_arrays(g, -arr[..., 1], arr[..., 0])
            _, D, _, _ = hodge_decompose(W)
            ent[i, j] = D.values
            ent[j, i] = -D.values
    return MatField.identity(g, m, variant="general"), MatField(g, ent, check=False)


def gauge_relation_residual(A, B, omega):
    """L2 norm of grad(A) - A Omega - perp_grad(B) (the conserved-current
    compatibility relation; also certifies that the auxiliary potential of
    the uniqueness lemma vanishes)."""
    check_grid_match(A, B)
    g = A.grid
    ax, ay = _mat_dx(A)
    bx, by = _mat_dx(B)
    om = omega.dense()
    AOmx = np.einsum("ikxy,kjxy->ijxy", A.entries, om[..., 0])
    AOmy = np.einsum("ikxy,kjxy->ijxy", A.entries, om[..., 1])
    rx = ax - AOmx - (-by)
    ry = ay - AOmy - bx
    w = g.weights
    return float(np.sqrt(np.sum(w * (rx**2 + ry**2))))


def conserved_current(u, A, B):
    """The matrix-weighted current A grad(u) + B perp_grad(u), one 2-field
    per target component."""
    g = u.grid
    G = map_grad_stack(u)
    gx, gy = G[..., 0], G[..., 1]
    vx = np.einsum("ikxy,kxy->ixy", A.entries, gx) \
        + np.einsum("ikxy,kxy->ixy", B.entries, -gy)
    vy = np.einsum("ikxy,kxy->ixy", A.entries, gy) \
        + np.einsum("ikxy,kxy->ixy", B.entries, gx)
    return [VecField.from_arrays(g, vx[i], vy[i]) for i in range(u.m)]


def conservation_residual(u, A, B):
    """(L2, H^{-1}-proxy) norms of div(A grad u + B perp_grad u) over the
    interior."""
    g = u.grid
    fields = []
    for V in conserved_current(u, A, B):
        d = div(V)
        vals = np.where(g.interior, d.values, 0.0)
        fields.append(ScalarField(g, vals, check=False))
    l2 = float(np.sqrt(sum(l2_norm(f) ** 2 for f in fields)))
    hm1 = vec_hminus1(fields)
    return l2, hm1


def regularity_demo(u, A, B, radii=(0.5, 0.25, 0.125, 0.0625)):
    """Split the current A grad(u) row by row, reconstruct the gradient, and
    report an oscillation-versus-radius proxy for the continuity mechanism."""
    g = u.grid
    nodes = A.nodes()[g.in_domain.ravel()]
    svals = np.linalg.svd(nodes, compute_uv=False)[:, -1]
    if svals.min() < 1e-10:
        bad = np.argmin(svals)
        loc = int(np.flatnonzero(g.in_domain.ravel())[bad])
        raise ValueError(f"A is singular at flat node {loc} "
                         f"(i={loc // g.n}, j={loc % g.n})")

    G = map_grad_stack(u)
    gx, gy = G[..., 0], G[..., 1]
    Vx = np.einsum("ikxy,kxy->ixy", A.entries, gx)
    Vy = np.einsum("ikxy,kxy->ixy", A.entries, gy)
    rows = []
    rem_sq = 0.0
    v_sq = 0.0
    recon = np.zeros((u.m, g.n, g.n, 2))
    for i in range(u.m):
        V = VecField.from_arrays(g, Vx[i], Vy[i])
        E, D, rem, _ = hodge_decompose(V)
        pe = perp_grad(E)
        gd = grad(D)
        recon[i, :, :, 0] = pe.vx.values + gd.vx.values
        recon[i, :, :, 1] = pe.vy.values + gd.vy.values
        rows.append({"E": E, "D": D, "rem": rem, "rem_norm": l2_norm(rem)})
        rem_sq += l2_norm(rem) ** 2
        v_sq += l2_norm(V) ** 2

    Ainv = mat_inv(A)
    grad_recon = np.einsum("ikxy,kxyc->ixyc", Ainv.entries, recon)
    w = g.weights[..., None]
    recon_err = float(np.sqrt(np.sum(w * (grad_recon - G) ** 2)))
    grad_norm = float(np.sqrt(np.sum(w * G**2)))

    center = (g.n - 1) // 2
    u0 = u.comps[:, center, center]
    r2 = g.X**2 + g.Y**2
    osc = []
    for r in radii:
        mask = g.interior & (r2 <= r**2)
        dev = np.sqrt(np.sum((u.comps - u0[:, None, None]) ** 2, axis=0))
        osc.append(float(np.max(dev[mask])) if mask.any() else 0.0)

    return {
        "rows": rows,
        "split_rel": float(np.sqrt(rem_sq / v_sq)) if v_sq > 0 else 0.0,
        "recon_err_rel": recon_err / grad_norm if grad_norm > 0 else 0.0,
        "radii": list(radii),
        "oscillation": osc,
    }
