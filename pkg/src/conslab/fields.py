"""Field containers (scalar, vector, map, matrix, connection) and their algebra.

All values live on the nodes of a :class:`~conslab.grid.Grid`; entries outside
``grid.in_domain`` are stored as zero and never read.  Fields are treated as
immutable after construction: every operation returns a fresh field.
"""

import numpy as np

from .grid import check_grid_match


# ---------------------------------------------------------------------------
# containers


class ScalarField:
    def __init__(self, grid, values, check=True):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"values shape {values.shape} != grid {grid.n}")
        values = np.where(grid.in_domain, values, 0.0)
        if check and not np.all(np.isfinite(values[grid.interior])):
            raise ValueError("non-finite value at an interior node")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.n, grid.n)), check=False)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.X, grid.Y))

    def __add__(self, other):
        check_grid_match(self, other)
        return ScalarField(self.grid, self.values + other.values, check=False)

    def __sub__(self, other):
        check_grid_match(self, other)
        return ScalarField(self.grid, self.values - other.values, check=False)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            check_grid_match(self, c)
            return ScalarField(self.grid, self.values * c.values, check=False)
        return ScalarField(self.grid, self.values * c, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values, check=False)


class VecField:
    """Two-component field (vx, vy) sharing one grid."""

    def __init__(self, vx, vy):
        check_grid_match(vx, vy)
        self.grid = vx.grid
        self.vx = vx
        self.vy = vy

    @classmethod
    def from_arrays(cls, grid, vx, vy):
        return cls(ScalarField(grid, vx, check=False), ScalarField(grid, vy, check=False))

    @classmethod
    def zeros(cls, grid):
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def stack(self):
        """(n, n, 2) view of the components."""
        return np.stack([self.vx.values, self.vy.values], axis=-1)

    def __add__(self, other):
        return VecField(self.vx + other.vx, self.vy + other.vy)

    def __sub__(self, other):
        return VecField(self.vx - other.vx, self.vy - other.vy)

    def __mul__(self, c):
        return VecField(self.vx * c, self.vy * c)

    __rmul__ = __mul__

    def __neg__(self):
        return VecField(-self.vx, -self.vy)

    def dot(self, other):
        """Pointwise 2-vector dot product -> ScalarField."""
        check_grid_match(self, other)
        vals = self.vx.values * other.vx.values + self.vy.values * other.vy.values
        return ScalarField(self.grid, vals, check=False)


UNIT_SPHERE = "unit_sphere"


class MapField:
    """Map u: grid -> R^m stored as an (m, n, n) component stack."""

    def __init__(self, grid, comps, constraint="none", check=True):
        comps = np.asarray(comps, dtype=float)
        if comps.ndim != 3 or comps.shape[1:] != (grid.n, grid.n):
            raise ValueError("comps must have shape (m, n, n)")
        comps = np.where(grid.in_domain, comps, 0.0)
        self.grid = grid
        self.comps = comps
        self.m = comps.shape[0]
        self.constraint = constraint
        if check:
            if not np.all(np.isfinite(comps[:, grid.interior])):
                raise ValueError("non-finite map value at an interior node")
            if constraint == UNIT_SPHERE:
                norms = np.sqrt(np.sum(comps**2, axis=0))
                err = np.max(np.abs(norms[grid.in_domain] - 1.0))
                if err > 1e-12:
                    raise ValueError(f"unit-sphere constraint violated by {err:.3e}")

    def comp(self, i):
        return ScalarField(self.grid, self.comps[i], check=False)

    @classmethod
    def zeros(cls, grid, m):
        return cls(grid, np.zeros((m, grid.n, grid.n)), check=False)


GENERAL = "general"
ROTATION = "rotation"
ANTISYM = "antisym"


class MatField:
    """m-by-m matrix-valued field stored as (m, m, n, n).

    ``antisym`` fields are materialized from their strict upper triangle so
    that M^T = -M holds bitwise; ``rotation`` fields are checked against
    orthogonality nodewise at construction.
    """

    def __init__(self, grid, entries, variant=GENERAL, check=True):
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 4 or entries.shape[0] != entries.shape[1] \
                or entries.shape[2:] != (grid.n, grid.n):
            raise ValueError("entries must have shape (m, m, n, n)")
        m = entries.shape[0]
        if variant == ANTISYM:
            rebuilt = np.zeros_like(entries)
            for i in range(m):
                for j in range(i + 1, m):
                    rebuilt[i, j] = entries[i, j]
                    rebuilt[j, i] = -entries[i, j]
            entries = rebuilt
        entries = np.where(grid.in_domain, entries, 0.0)
        self.grid = grid
        self.entries = entries
        self.m = m
        self.variant = variant
        if check:
            if not np.all(np.isfinite(entries[:, :, grid.interior])):
                raise ValueError("non-finite matrix entry at an interior node")
            if variant == ROTATION:
                err = orthogonality_defect(self)
                if err > 1e-10:
                    raise ValueError(f"rotation variant violated by {err:.3e}")

    def entry(self, i, j):
        return ScalarField(self.grid, self.entries[i, j], check=False)

    @classmethod
    def identity(cls, grid, m, variant=ROTATION):
        e = np.zeros((m, m, grid.n, grid.n))
        for i in range(m):
            e[i, i] = 1.0
        return cls(grid, np.where(grid.in_domain, e, 0.0), variant=variant, check=False)

    @classmethod
    def zeros(cls, grid, m, variant=GENERAL):
        return cls(grid, np.zeros((m, m, grid.n, grid.n)), variant=variant, check=False)

    def nodes(self):
        """(N, m, m) stack over domain nodes (row-major over the full grid)."""
        return np.moveaxis(self.entries, (0, 1), (2, 3)).reshape(-1, self.m, self.m)


def orthogonality_defect(P):
    """max over domain nodes of ||P^T P - id||_inf."""
    g = P.grid
    PtP = np.einsum("kixy,kjxy->ijxy", P.entries, P.entries)
    for i in range(P.m):
        PtP[i, i] -= 1.0
    return np.max(np.abs(PtP[:, :, g.in_domain])) if g.in_domain.any() else 0.0


class Connection:
    """so(m)-valued 1-form: only entries i < j are stored, so the
    antisymmetry Omega^i_j = -Omega^j_i is exact by construction."""

    def __init__(self, grid, m, upper=None):
        self.grid = grid
        self.m = m
        # upper[(i, j)] for i < j: array (n, n, 2)
        self._upper = {}
        if upper is not None:
            for (i, j), arr in upper.items():
                self.set_entry(i, j, arr)

    def set_entry(self, i, j, arr):
        if not (0 <= i < j < self.m):
            raise ValueError("set_entry expects i < j")
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (self.grid.n, self.grid.n, 2):
            raise ValueError("entry must have shape (n, n, 2)")
        self._upper[(i, j)] = np.where(self.grid.in_domain[..., None], arr, 0.0)

    def entry(self, i, j):
        """VecField Omega^i_j (exact negation for i > j, zero on diagonal)."""
        if i == j:
            return VecField.zeros(self.grid)
        sign, key = (1.0, (i, j)) if i < j else (-1.0, (j, i))
        arr = self._upper.get(key)
        if arr is None:
            return VecField.zeros(self.grid)
        return VecField.from_arrays(self.grid, sign * arr[..., 0], sign * arr[..., 1])

    def dense(self):
        """(m, m, n, n, 2) array with exact antisymmetry."""
        n = self.grid.n
        out = np.zeros((self.m, self.m, n, n, 2))
        for (i, j), arr in self._upper.items():
            out[i, j] = arr
            out[j, i] = -arr
        return out

    @classmethod
    def zeros(cls, grid, m):
        return cls(grid, m)

    @classmethod
    def from_dense(cls, grid, dense):
        """Store the strict upper triangle of an (m, m, n, n, 2) array."""
        m = dense.shape[0]
        conn = cls(grid, m)
        for i in range(m):
            for j in range(i + 1, m):
                conn.set_entry(i, j, dense[i, j])
        return conn


# ---------------------------------------------------------------------------
# algebra


def matmul(A, B):
    check_grid_match(A, B)
    if A.m != B.m:
        raise ValueError("matrix size mismatch")
    vals = np.einsum("ikxy,kjxy->ijxy", A.entries, B.entries)
    return MatField(A.grid, vals, check=False)


def transpose(A):
    return MatField(A.grid, np.swapaxes(A.entries, 0, 1), variant=A.variant, check=False)


def matvec(A, u):
    """Apply an m-by-m matrix field to the components of a map, nodewise."""
    check_grid_match(A, u)
    if A.m != u.m:
        raise ValueError("size mismatch between matrix and map")
    comps = np.einsum("ikxy,kxy->ixy", A.entries, u.comps)
    return MapField(A.grid, comps, check=False)


def mat_inv(A):
    """Nodewise inverse of a matrix field (domain nodes only)."""
    g = A.grid
    nodes = A.nodes()
    dom = g.in_domain.ravel()
    out = np.zeros_like(nodes)
    out[dom] = np.linalg.inv(nodes[dom])
    ent = np.moveaxis(out.reshape(g.n, g.n, A.m, A.m), (2, 3), (0, 1))
    return MatField(g, ent, check=False)


def exp_antisym(xi):
    """Nodewise matrix exponential of an antisymmetric field -> rotation field.

    Scaling-and-squaring with the Taylor series truncated at machine
    precision; exact antisymmetry of the input makes the result orthogonal
    to roundoff.
    """
    if xi.variant != ANTISYM:
        raise ValueError("exp_antisym expects an antisym variant field")
    g, m = xi.grid, xi.m
    X = xi.nodes()
    nrm = np.max(np.abs(X))
    s = max(0, int(np.ceil(np.log2(nrm))) + 1) if nrm > 0 else 0
    A = X / (2.0**s)
    N = A.shape[0]
    out = np.tile(np.eye(m), (N, 1, 1))
    term = np.tile(np.eye(m), (N, 1, 1))
    k = 1
    while True:
        term = term @ A / k
        out += term
        if np.max(np.abs(term)) < 1e-17 or k > 40:
            break
        k += 1
    for _ in range(s):
        out = out @ out
    out[~g.in_domain.ravel()] = 0.0
    ent = np.moveaxis(out.reshape(g.n, g.n, m, m), (2, 3), (0, 1))
    ent = np.where(g.in_domain, ent, 0.0)
    return MatField(g, ent, variant=ROTATION)


# ---------------------------------------------------------------------------
# norms and integrals (discrete proxies: weighted nodal sums)


def _component_arrays(obj):
    if isinstance(obj, ScalarField):
        return [obj.values]
    if isinstance(obj, VecField):
        return [obj.vx.values, obj.vy.values]
    if isinstance(obj, MapField):
        return [obj.comps[i] for i in range(obj.m)]
    if isinstance(obj, MatField):
        return [obj.entries[i, j] for i in range(obj.m) for j in range(obj.m)]
    if isinstance(obj, Connection):
        d = obj.dense()
        return [d[i, j, :, :, c] for i in range(obj.m) for j in range(obj.m)
                for c in (0, 1)]
    raise TypeError(f"no components for {type(obj)!r}")


def l2_norm(obj):
    """sqrt(sum over nodes of h^2-weighted squared entries)."""
    w = obj.grid.weights
    total = 0.0
    for arr in _component_arrays(obj):
        total += float(np.sum(w * arr * arr))
    return float(np.sqrt(total))


def sup_norm(obj):
    dom = obj.grid.in_domain
    vals = [np.max(np.abs(arr[dom])) for arr in _component_arrays(obj)]
    return float(max(vals))


def integrate(f):
    """Weighted nodal integral of a scalar field."""
    return float(np.sum(f.grid.weights * f.values))
