"""Masked Cartesian discretization of the unit disk (or the full square)."""

import numpy as np

DISK = "disk_mask"
SQUARE = "square"


class Grid:
    """Uniform n-by-n node grid on [-1,1]^2, optionally masked to the unit disk.

    Nodes are indexed (i, j) with x = -1 + i*h, y = -1 + j*h and h = 2/(n-1).
    ``interior`` marks nodes where PDE stencils are imposed; ``boundary`` marks
    the ring of nodes (8-adjacent to the interior for the disk mask, the outer
    edge for the square) that carry boundary data.  Every stencil used by the
    operators reads only ``in_domain = interior | boundary`` nodes.
    """

    def __init__(self, n, domain=DISK):
        if n % 2 == 0:
            raise ValueError("n must be odd")
        if n < 17:
            raise ValueError("n must be >= 17")
        if domain not in (DISK, SQUARE):
            raise ValueError(f"unknown domain {domain!r}")
        self.n = int(n)
        self.domain = domain
        self.h = 2.0 / (n - 1)
        self.xs = -1.0 + self.h * np.arange(n)
        self.X, self.Y = np.meshgrid(self.xs, self.xs, indexing="ij")

        if domain == DISK:
            interior = self.X**2 + self.Y**2 < 1.0
            boundary = _dilate8(interior) & ~interior
        else:
            interior = np.zeros((n, n), dtype=bool)
            interior[1:-1, 1:-1] = True
            boundary = ~interior
        self.interior = interior
        self.boundary = boundary
        self.in_domain = interior | boundary

        # quadrature weights: h^2 per node, boundary nodes weighted 1/2
        w = np.where(self.in_domain, self.h**2, 0.0)
        w[boundary] *= 0.5
        self.weights = w

        self._centered = {}

    # -- masks ---------------------------------------------------------------

    def centered(self, depth=1):
        """Nodes where ``depth`` nested applications of the first-derivative
        stencils stay fully centered (used by the exact-identity checks)."""
        if depth not in self._centered:
            dom = self.in_domain
            c = np.zeros_like(dom)
            c[1:-1, 1:-1] = (dom[2:, 1:-1] & dom[:-2, 1:-1]
                             & dom[1:-1, 2:] & dom[1:-1, :-2] & dom[1:-1, 1:-1])
            m = c
            for _ in range(depth - 1):
                m2 = np.zeros_like(m)
                m2[1:-1, 1:-1] = (m[2:, 1:-1] & m[:-2, 1:-1]
                                  & m[1:-1, 2:] & m[1:-1, :-2] & m[1:-1, 1:-1])
                m = m2
            self._centered[depth] = m
        return self._centered[depth]

    # -- bookkeeping ---------------------------------------------------------

    def same_as(self, other):
        return self is other or (self.n == other.n and self.domain == other.domain)

    def __repr__(self):
        return f"Grid(n={self.n}, domain={self.domain!r})"


def _dilate8(mask):
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    out[1:, :-1] |= mask[:-1, 1:]
    out[:-1, 1:] |= mask[1:, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    return out


def make_grid(n, domain=DISK):
    """Build a grid; rejects even or too-small n."""
    return Grid(n, domain)


def check_grid_match(*objs):
    """Raise if the fields/grids passed do not share one grid."""
    grids = [o if isinstance(o, Grid) else o.grid for o in objs]
    g0 = grids[0]
    for g in grids[1:]:
        if not g0.same_as(g):
            raise ValueError(f"grid mismatch: {g0!r} vs {g!r}")
    return g0
