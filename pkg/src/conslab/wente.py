"""Bilinear Poisson problems with Jacobian right-hand side and their constants.

``wente_solve`` measures, for a pair (a, b), the ratios

    ratio_sup  = sup|phi| / (||grad a||_2 ||grad b||_2)
    ratio_grad = ||grad phi||_2 / (||grad a||_2 ||grad b||_2)

for phi solving lap(phi) = jacobian(a, b) with Dirichlet or Neumann data.
The sharp continuum sup constant on the disk is 1/(2*pi).
"""

import math
from dataclasses import dataclass

import numpy as np

from .calculus import grad, jacobian, second_derivatives
from .elliptic import solve_dirichlet, solve_neumann
from .fields import ScalarField, l2_norm, sup_norm
from .grid import check_grid_match, make_grid

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

SHARP_SUP = 1.0 / (2.0 * math.pi)
SHARP_GRAD = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass
class WenteReport:
    ratio_sup: float
    ratio_grad: float
    bc: str
    norm_grad_a: float
    norm_grad_b: float
    sup_phi: float
    grad_phi: float
    hess_l1: float


def wente_solve(a, b, bc=DIRICHLET):
    """Solve the Jacobian-sourced Poisson problem and report the constants.

    Constant inputs are allowed; the ratios are then NaN (flagged undefined).
    """
    g = check_grid_match(a, b)
    rhs = jacobian(a, b)
    if bc == DIRICHLET:
        phi, _ = solve_dirichlet(rhs)
    elif bc == NEUMANN:
        phi, _ = solve_neumann(rhs)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    na = l2_norm(grad(a))
    nb = l2_norm(grad(b))
    sphi = sup_norm(phi)
    gphi = l2_norm(grad(phi))
    fxx, fxy, fyy = second_derivatives(phi)
    hess = np.sqrt(fxx.values**2 + 2 * fxy.values**2 + fyy.values**2)
    hess_l1 = float(np.sum(g.weights * hess))
    denom = na * nb
    if denom == 0.0:
        ratio_sup = ratio_grad = float("nan")
    else:
        ratio_sup = sphi / denom
        ratio_grad = gphi / denom
    return phi, WenteReport(ratio_sup, ratio_grad, bc, na, nb, sphi, gphi, hess_l1)


# ---------------------------------------------------------------------------
# input families


def band_limited(grid, seed, kmax=8, decay=2.0, amplitude=1.0):
    """Seeded truncated Fourier field with power-law coefficient decay."""
    rng = np.random.default_rng(seed)
    X, Y = grid.X, grid.Y
    vals = np.zeros_like(X)
    for kx in range(1, kmax + 1):
        for ky in range(1, kmax + 1):
            amp = rng.standard_normal() * (kx**2 + ky**2) ** (-decay / 2.0)
            px, py = rng.uniform(0, 2 * np.pi, size=2)
            vals += amp * np.cos(np.pi * kx * X + px) * np.cos(np.pi * ky * Y + py)
    return ScalarField(grid, amplitude * vals)


def bubble_pair(grid, lam, center=(0.0, 0.0)):
    """Concentrating pair: the two horizontal components of the inverse
    stereographic dilation, whose Jacobian is the pulled-back area element."""
    wx = lam * (grid.X - center[0])
    wy = lam * (grid.Y - center[1])
    den = 1.0 + wx**2 + wy**2
    return ScalarField(grid, 2 * wx / den), ScalarField(grid, 2 * wy / den)


def dipole_pair(grid, lam, offset=0.35):
    """Two opposite-sign concentrations along the x axis."""
    a1, b1 = bubble_pair(grid, lam, center=(offset, 0.0))
    a2, b2 = bubble_pair(grid, lam, center=(-offset, 0.0))
    return a1 - a2, b1 + b2


FAMILIES = ("random", "bubble", "dipole")


def _family_pair(family, grid, seed, sample):
    if family == "random":
        a = band_limited(grid, (seed, sample, 0))
        b = band_limited(grid, (seed, sample, 1))
        return a, b
    if family == "bubble":
        return bubble_pair(grid, lam=1.0 + 0.75 * sample)
    if family == "dipole":
        return dipole_pair(grid, lam=1.0 + 0.75 * sample)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def wente_sweep(family, n_list, samples=20, seed=0, bc=DIRICHLET, domain="disk_mask"):
    """One report row per (sample, n); bit-reproducible for a fixed seed."""
    rows = []
    for n in n_list:
        grid = make_grid(n, domain)
        for s in range(samples):
            a, b = _family_pair(family, grid, seed, s)
            _, rep = wente_solve(a, b, bc=bc)
            rows.append({
                "sample_id": s,
                "n": n,
                "h": grid.h,
                "bc": rep.bc,
                "norm_grad_a": rep.norm_grad_a,
                "norm_grad_b": rep.norm_grad_b,
                "ratio_sup": rep.ratio_sup,
                "ratio_grad": rep.ratio_grad,
            })
    return rows
