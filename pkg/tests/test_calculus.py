import numpy as np
import pytest

from conslab.calculus import (connection_apply, curl, div, grad, jacobian,
                              laplacian, perp_grad, w12_seminorm)
from conslab.fields import (ANTISYM, Connection, MapField, MatField,
                            ScalarField, exp_antisym, integrate, l2_norm,
                            matmul, matvec, sup_norm, transpose)

from conftest import binade_field, get_grid


def field(grid, fn):
    return ScalarField.from_function(grid, fn)


# ---------------------------------------------------------------------------
# first-derivative stencils


def test_grad_linear_exact():
    g = get_grid(17)
    f = field(g, lambda x, y: x)
    v = grad(f)
    c = g.centered(1)
    assert np.max(np.abs(v.vx.values[c] - 1.0)) == 0.0
    assert np.max(np.abs(v.vy.values[c])) == 0.0


def test_laplacian_quadratic_exact():
    g = get_grid(17)
    f = field(g, lambda x, y: x**2 + y**2)
    lap = laplacian(f)
    assert np.max(np.abs(lap.values[g.interior] - 4.0)) < 1e-12


def test_div_grad_quadratic():
    g = get_grid(17)
    f = field(g, lambda x, y: x**2 + y**2)
    d = div(grad(f))
    c = g.centered(2)
    assert np.max(np.abs(d.values[c] - 4.0)) < 1e-12


def test_exact_identities_hundred_cases():
    # the identity suite: div of a perp gradient and curl of a gradient vanish
    # bitwise at fully centered nodes, jacobian antisymmetry is bitwise
    rng = np.random.default_rng(7)
    worst_div = worst_curl = worst_jac = 0.0
    for case in range(100):
        g = get_grid(17 if case % 2 else 33, "disk_mask" if case % 3 else "square")
        a = binade_field(g, rng)
        b = binade_field(g, rng)
        c2 = g.centered(2)
        worst_div = max(worst_div, np.max(np.abs(div(perp_grad(a)).values[c2])))
        worst_curl = max(worst_curl, np.max(np.abs(curl(grad(a)).values[c2])))
        s = jacobian(a, b).values + jacobian(b, a).values
        worst_jac = max(worst_jac, np.max(np.abs(s[g.in_domain])))
    assert worst_div == 0.0
    assert worst_curl == 0.0
    assert worst_jac == 0.0


def test_jacobian_self_is_zero():
    g = get_grid(17)
    rng = np.random.default_rng(3)
    a = binade_field(g, rng)
    assert np.max(np.abs(jacobian(a, a).values)) == 0.0


def test_jacobian_examples():
    g = get_grid(17, "square")
    a = field(g, lambda x, y: x)
    b = field(g, lambda x, y: y)
    c = g.centered(1)
    assert np.max(np.abs(jacobian(a, b).values[c] - 1.0)) < 1e-13
    a2 = field(g, lambda x, y: x**2)
    b2 = field(g, lambda x, y: y**2)
    j = jacobian(a2, b2)
    expect = 4.0 * g.X * g.Y
    assert np.max(np.abs((j.values - expect)[c])) < 1e-12


def test_grid_mismatch_rejected():
    a = ScalarField.zeros(get_grid(17))
    b = ScalarField.zeros(get_grid(33))
    with pytest.raises(ValueError, match="mismatch"):
        jacobian(a, b)


@pytest.mark.parametrize("op_name", ["grad", "div", "curl"])
def test_operators_second_order(op_name):
    # error on sin(pi x) cos(pi y) shrinks with fitted slope >= 1.9
    errs = []
    ns = (33, 65, 129)
    for n in ns:
        g = get_grid(n)
        f = field(g, lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y))
        fx = np.pi * np.cos(np.pi * g.X) * np.cos(np.pi * g.Y)
        fy = -np.pi * np.sin(np.pi * g.X) * np.sin(np.pi * g.Y)
        inter = g.interior
        if op_name == "grad":
            v = grad(f)
            err = np.sqrt(np.sum(g.weights[inter] * ((v.vx.values - fx)**2
                                                     + (v.vy.values - fy)**2)[inter]))
        elif op_name == "div":
            from conslab.fields import VecField
            V = VecField.from_arrays(g, np.where(g.in_domain, fx, 0),
                                     np.where(g.in_domain, fy, 0))
            exact = -2 * np.pi**2 * np.sin(np.pi * g.X) * np.cos(np.pi * g.Y)
            err = np.sqrt(np.sum(g.weights[inter] * ((div(V).values - exact)**2)[inter]))
        else:
            from conslab.fields import VecField
            vx = np.sin(np.pi * g.X) * np.cos(np.pi * g.Y)
            vy = np.cos(2 * g.X) * g.Y**3
            V = VecField.from_arrays(g, np.where(g.in_domain, vx, 0),
                                     np.where(g.in_domain, vy, 0))
            exact = (-2 * np.sin(2 * g.X) * g.Y**3
                     + np.pi * np.sin(np.pi * g.X) * np.sin(np.pi * g.Y))
            err = np.sqrt(np.sum(g.weights[inter] * ((curl(V).values - exact)**2)[inter]))
        errs.append(err)
    slope = np.polyfit(np.log([2 / (n - 1) for n in ns]), np.log(errs), 1)[0]
    assert slope >= 1.9


# ---------------------------------------------------------------------------
# field algebra


def test_matmul_transpose_matvec():
    g = get_grid(17)
    rng = np.random.default_rng(11)
    A = MatField(g, np.where(g.in_domain, rng.standard_normal((3, 3, 17, 17)), 0))
    B = MatField(g, np.where(g.in_domain, rng.standard_normal((3, 3, 17, 17)), 0))
    C = matmul(A, B)
    i, j = 5, 9
    expect = A.entries[:, :, i, j] @ B.entries[:, :, i, j]
    assert np.allclose(C.entries[:, :, i, j], expect)
    assert np.array_equal(transpose(A).entries[0, 2], A.entries[2, 0])
    u = MapField(g, np.where(g.in_domain, rng.standard_normal((3, 17, 17)), 0))
    v = matvec(A, u)
    assert np.allclose(v.comps[:, i, j], A.entries[:, :, i, j] @ u.comps[:, i, j])


def test_connection_apply_zero():
    g = get_grid(17)
    u = MapField(g, np.where(g.in_domain, np.random.default_rng(0).random((3, 17, 17)), 0))
    out = connection_apply(Connection.zeros(g, 3), u)
    assert np.max(np.abs(out.comps)) == 0.0


def test_connection_storage_antisymmetry():
    g = get_grid(17)
    rng = np.random.default_rng(1)
    conn = Connection(g, 3)
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        conn.set_entry(i, j, np.where(g.in_domain[..., None],
                                      rng.standard_normal((17, 17, 2)), 0))
    d = conn.dense()
    assert np.max(np.abs(d + np.swapaxes(d, 0, 1))) == 0.0
    e = conn.entry(2, 0).stack()
    assert np.array_equal(e, -conn.entry(0, 2).stack())


def test_connection_apply_antisym_contraction(rng):
    # sum_i u^i (Omega . grad u)^i equals the brute-force antisymmetrized sum
    g = get_grid(17)
    conn = Connection(g, 3)
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        conn.set_entry(i, j, np.where(g.in_domain[..., None],
                                      rng.standard_normal((17, 17, 2)), 0))
    u = MapField(g, np.where(g.in_domain, rng.standard_normal((3, 17, 17)), 0))
    out = connection_apply(conn, u)
    lhs = np.sum(u.comps * out.comps, axis=0)

    from conslab.calculus import map_grad_stack
    G = map_grad_stack(u)
    d = conn.dense()
    brute = np.zeros((17, 17))
    for i in range(3):
        for j in range(3):
            dot = d[i, j, :, :, 0] * G[j, :, :, 0] + d[i, j, :, :, 1] * G[j, :, :, 1]
            brute += 0.5 * (u.comps[i] * dot - u.comps[j] *
                            (d[i, j, :, :, 0] * G[i, :, :, 0]
                             + d[i, j, :, :, 1] * G[i, :, :, 1]))
    assert np.max(np.abs((lhs - brute)[g.in_domain])) < 1e-12


def test_exp_antisym_zero_gives_identity():
    g = get_grid(17)
    xi = MatField.zeros(g, 3, variant=ANTISYM)
    P = exp_antisym(xi)
    idm = MatField.identity(g, 3)
    assert np.max(np.abs(P.entries - idm.entries)) == 0.0


def test_exp_antisym_2x2_rotation():
    g = get_grid(17)
    theta = 0.7
    ent = np.zeros((2, 2, 17, 17))
    ent[0, 1] = np.where(g.in_domain, theta, 0.0)
    xi = MatField(g, ent, variant=ANTISYM)
    P = exp_antisym(xi)
    dom = g.in_domain
    assert np.max(np.abs(P.entries[0, 0][dom] - np.cos(theta))) < 1e-14
    assert np.max(np.abs(P.entries[0, 1][dom] - np.sin(theta))) < 1e-14
    assert np.max(np.abs(P.entries[1, 0][dom] + np.sin(theta))) < 1e-14


def test_exp_antisym_orthogonality(rng):
    g = get_grid(17)
    ent = np.zeros((3, 3, 17, 17))
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        ent[i, j] = np.where(g.in_domain, 2.0 * rng.standard_normal((17, 17)), 0)
    P = exp_antisym(MatField(g, ent, variant=ANTISYM))
    from conslab.fields import orthogonality_defect
    assert orthogonality_defect(P) <= 1e-12


def test_exp_antisym_rejects_general_variant():
    g = get_grid(17)
    with pytest.raises(ValueError, match="antisym"):
        exp_antisym(MatField.zeros(g, 3))


def test_norms_and_integrate():
    g = get_grid(33)
    one = ScalarField(g, np.where(g.in_domain, 1.0, 0.0))
    # nodal integral of 1 over the masked disk approximates pi up to the
    # O(h) staircase ring
    assert abs(integrate(one) - np.pi) < 4 * g.h
    assert abs(l2_norm(one) - np.sqrt(integrate(one))) < 1e-12
    assert sup_norm(one) == 1.0
    f = ScalarField.from_function(g, lambda x, y: x)
    assert abs(w12_seminorm(f) - l2_norm(one)) < 1e-10
