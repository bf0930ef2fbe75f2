import numpy as np
import pytest

from oddchern import exterior as ex
from oddchern import maps
from oddchern import matrix as mx

H = 1e-6


def fd_x(fn, x):
    if x.shape[-1] == 0:
        n = fn(x).shape[-1]
        return np.zeros(x.shape[:-1] + (0, n, n))
    out = []
    for mu in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[mu] = H
        out.append((fn(x + e) - fn(x - e)) / (2 * H))
    return np.stack(out, axis=-3)


def fd_t(fn, t):
    return (fn(t + H) - fn(t - H)) / (2 * H)


@pytest.fixture
def pts(rng):
    return rng.uniform(0, 1, size=(6, 2))


@pytest.fixture
def chart():
    return ex.torus2(8)


def check_map(g, x, tol=1e-7):
    assert mx.is_unitary(g(x), 1e-12)
    assert mx.max_norm(g.partials(x) - fd_x(g, x)) < tol


def check_path(p, x, ts=(0.1, 0.35, 0.8), tol=1e-7):
    for t in ts:
        val, dg, gt = p.jet(x, t)
        assert mx.is_unitary(val, 1e-11)
        assert mx.max_norm(val - p(x, t)) < 1e-14
        assert mx.max_norm(dg - fd_x(lambda y: p(y, t), x)) < tol
        assert mx.max_norm(gt - fd_t(lambda s: p(x, s), t)) < tol
        assert mx.max_norm(p.partials(x, t) - dg) < 1e-12
        assert mx.max_norm(p.dt(x, t) - gt) < 1e-12


def test_random_map_partials(chart, pts):
    check_map(maps.random_analytic_map(chart, seed=1, dim=3), pts)
    check_map(maps.random_analytic_map(chart, seed=2, dim=2, max_mode=2), pts)


def test_random_map_periodic(chart, rng):
    g = maps.random_analytic_map(chart, seed=5)
    x = rng.uniform(size=(4, 2))
    assert mx.max_norm(g(x) - g(x + [1.0, 0.0])) < 1e-12
    assert mx.max_norm(g(x) - g(x + [0.0, 1.0])) < 1e-12


def test_random_map_winding(chart, pts):
    g = maps.random_analytic_map(chart, seed=5, dim=1, winding=(1, 0))
    check_map(g, pts)
    assert mx.max_norm(g(pts) - g(pts + [1.0, 0.0])) < 1e-12


def test_random_path(chart, pts):
    check_path(maps.random_analytic_path(chart, seed=3), pts)


def test_exp_product_grad_matches_fd(rng):
    herms = [mx.random_hermitian(3, rng) for _ in range(3)]
    polys = [maps.TrigPoly.random(rng, [None, None]) for _ in range(3)]
    prod = maps.ExpProduct(herms, polys, maps.TrigPoly.random(rng, [None, None]))
    v = rng.uniform(size=(5, 2))
    val, grad = prod.value_and_grad(v)
    assert mx.max_norm(val - prod.value(v)) < 1e-14
    assert mx.max_norm(grad - fd_x(prod.value, v)) < 1e-7


def test_inverse_and_product_maps(chart, pts):
    g = maps.random_analytic_map(chart, seed=1)
    h = maps.random_analytic_map(chart, seed=2, dim=3)
    check_map(maps.inverse_map(g), pts)
    assert mx.max_norm(maps.inverse_map(g)(pts) @ g(pts) - np.eye(2)) < 1e-13
    prod = maps.product_map(g, h)
    assert prod.dim == 3
    check_map(prod, pts)


def test_block_sum_and_stabilize(chart, pts):
    g = maps.random_analytic_map(chart, seed=1)
    h = maps.random_analytic_map(chart, seed=2, dim=1)
    s = maps.block_sum_map(g, h)
    check_map(s, pts)
    np.testing.assert_array_equal(s(pts)[..., 2:, 2:], h(pts))
    st = maps.stabilize_map(h, 3)
    check_map(st, pts)
    np.testing.assert_array_equal(st(pts)[..., 1:, 1:], np.broadcast_to(np.eye(2), (6, 2, 2)))
    assert maps.stabilize_map(g, 2) is g


def test_block_sum_rejects_other_chart(chart):
    g = maps.random_analytic_map(chart)
    h = maps.random_analytic_map(ex.torus2(9))
    with pytest.raises(ValueError):
        maps.block_sum_map(g, h)


def test_exp_scalar_expression(pts):
    c = ex.torus2(8)
    g = maps.exp_scalar_map("sin(2*pi*x)*cos(2*pi*y)", c)
    assert g.analytic
    check_map(g, pts)
    f = np.sin(2 * np.pi * pts[:, 0]) * np.cos(2 * np.pi * pts[:, 1])
    np.testing.assert_allclose(g(pts)[:, 0, 0], np.exp(2j * np.pi * f), atol=1e-14)


def test_exp_scalar_errors():
    c = ex.interval(8)
    with pytest.raises(ValueError):
        maps.exp_scalar_map("sin(z)", c)
    with pytest.raises(ValueError):
        maps.exp_scalar_map("sin(", c)


def test_exp_scalar_callable_uses_fd():
    c = ex.interval(8)
    g = maps.exp_scalar_map(lambda p: p[..., 0] ** 2, c)
    assert not g.analytic
    x = np.array([[0.3]])
    np.testing.assert_allclose(g.partials(x)[0, 0, 0, 0], 2j * np.pi * 0.6 * g(x)[0, 0, 0], atol=1e-6)


@pytest.mark.parametrize("n", [0, 1])
def test_clifford_map(n, rng):
    g = maps.clifford_sphere_map(n)
    x = rng.uniform(0.1, 1.2, size=(5, g.chart.dim))
    check_map(g, x)
    assert g.dim == 2 ** (n + 1)


def test_clifford_map_rejects_wrong_chart():
    with pytest.raises(ValueError):
        maps.clifford_sphere_map(1, ex.sphere2())
    with pytest.raises(ValueError):
        maps.clifford_sphere_map(2)


def test_bott_projection(rng):
    p = maps.bott_projection()
    x = rng.uniform(0.1, 3.0, size=(5, 2))
    assert mx.is_projection(p(x))
    np.testing.assert_allclose(np.trace(p(x), axis1=-2, axis2=-1), 1.0)
    assert mx.max_norm(p.partials(x) - fd_x(p, x)) < 1e-7


def test_projection_loop(rng):
    p = maps.bott_projection(ex.sphere2((9, 8)))
    x = rng.uniform(0.1, 3.0, size=(4, 2))
    for s in (1.0, 0.5):
        loop = maps.projection_loop(p, s)
        check_path(loop, x)
    assert maps.projection_loop(p).is_loop()
    assert not maps.projection_loop(p, 0.5).is_loop()
    with pytest.raises(ValueError):
        maps.projection_loop(p, 0.0)


def test_exp_and_conjugated_loops():
    c = ex.point()
    x = c.flat_points()
    for k in (-2, 0, 3):
        check_path(maps.exp_loop(c, k), x)
        loop = maps.conjugated_loop(c, k, n=3, seed=1)
        check_path(loop, x, tol=1e-6)
    assert maps.conjugated_loop(c, 2).is_loop()


def test_conjugation_path_ends(rng):
    c = ex.point()
    a = mx.random_unitary(2, rng)
    h = mx.random_hermitian(2, rng)
    p = maps.conjugation_path(c, a, h)
    x = c.flat_points()
    lam, vec = np.linalg.eigh(h)
    e = vec @ np.diag(np.exp(1j * lam)) @ vec.conj().T
    assert mx.max_norm(p(x, 0.0) - a) < 1e-14
    assert mx.max_norm(p(x, 1.0) - e @ a @ e.conj().T) < 1e-13
    check_path(p, x)


def test_swap_cancel_mult_endpoints(chart, pts):
    g = maps.random_analytic_map(chart, seed=1)
    h = maps.random_analytic_map(chart, seed=2)
    sw = maps.swap_path(g, h)
    check_path(sw, pts)
    assert mx.max_norm(sw(pts, 0.0) - mx.block_sum(g(pts), h(pts))) == 0
    assert mx.max_norm(sw(pts, 1.0) - mx.block_sum(h(pts), g(pts))) == 0
    ca = maps.cancellation_path(g)
    check_path(ca, pts)
    assert mx.max_norm(ca(pts, 0.0) - mx.block_sum(g(pts), mx.dagger(g(pts)))) < 1e-15
    assert mx.max_norm(ca(pts, 1.0) - np.eye(4)) < 1e-14
    mu = maps.multiplication_path(g, h)
    check_path(mu, pts)
    assert mx.max_norm(mu(pts, 1.0) - mx.block_sum(g(pts) @ h(pts), np.eye(2))) < 1e-14


def test_constant_and_inverse_path(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    check_path(maps.constant_path(p.at(0.3)), pts)
    inv = maps.inverse_path(p)
    check_path(inv, pts)
    assert mx.max_norm(inv(pts, 0.4) @ p(pts, 0.4) - np.eye(2)) < 1e-13


def test_stabilize_and_block_sum_paths(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    q = maps.random_analytic_path(chart, seed=5, dim=1)
    check_path(maps.stabilize_path(q, 3), pts)
    check_path(maps.block_sum_path(p, q), pts)


def test_compose_paths(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    q = maps.anchored_path(p.at(1.0), maps.random_analytic_path(chart, seed=5))
    c = maps.compose_paths(p, q)
    assert set(maps.PLATEAU) <= set(c.breakpoints)
    check_path(c, pts, ts=(0.1, 0.3, 0.5, 0.7, 0.9))
    assert mx.max_norm(c(pts, 0.0) - p(pts, 0.0)) < 1e-14
    assert mx.max_norm(c(pts, 1.0) - q(pts, 1.0)) < 1e-14
    assert mx.max_norm(c.dt(pts, 0.5)) == 0
    t = np.full(6, 0.2)
    assert mx.max_norm(c(pts, t) - c(pts, 0.2)) < 1e-14


def test_compose_rejects_gap(chart):
    p = maps.random_analytic_path(chart, seed=4)
    with pytest.raises(ValueError):
        maps.compose_paths(p, maps.random_analytic_path(chart, seed=5))


def test_anchored_path(chart, pts):
    g = maps.random_analytic_map(chart, seed=1)
    a = maps.anchored_path(g, maps.random_analytic_path(chart, seed=7))
    check_path(a, pts)
    assert mx.max_norm(a(pts, 0.0) - g(pts)) < 1e-13
    x = chart.flat_points()
    assert mx.max_norm(a(x, 0.0) - g(x)) < 1e-13


def test_reparametrize(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    r = maps.reparametrize(p, lambda t: np.asarray(t) ** 2, lambda t: 2 * np.asarray(t))
    check_path(r, pts)
    assert mx.max_norm(r(pts, 0.5) - p(pts, 0.25)) == 0


def check_family(f, x):
    for t, s in [(0.2, 0.3), (0.7, 0.9)]:
        g, dg, gt, gs = f.jet(x, t, s)
        assert mx.is_unitary(g, 1e-11)
        assert mx.max_norm(dg - fd_x(lambda y: f(y, t, s), x)) < 1e-7
        assert mx.max_norm(gt - fd_t(lambda u: f(x, u, s), t)) < 1e-7
        assert mx.max_norm(gs - fd_t(lambda u: f(x, t, u), s)) < 1e-7


def test_reparametrization_family(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    bump = lambda x: 0.5 * np.sin(2 * np.pi * x[..., 0])  # noqa: E731
    grad = lambda x: np.stack([np.pi * np.cos(2 * np.pi * x[..., 0]), 0 * x[..., 1]], axis=-1)  # noqa: E731
    fam = maps.reparametrization_family(p, bump, grad)
    check_family(fam, pts)
    assert fam.endpoint_fixed and fam.endpoint_gap(pts) < 1e-14
    with pytest.raises(ValueError):
        maps.reparametrization_family(p)


def test_bending_homotopy(chart, pts):
    p = maps.random_analytic_path(chart, seed=4)
    fam = maps.bending_homotopy(p, maps.random_analytic_path(chart, seed=6))
    check_family(fam, pts)
    assert fam.endpoint_gap() < 1e-13
    assert mx.max_norm(fam(pts, 0.4, 0.0) - p(pts, 0.4)) < 1e-13
    sl = fam.path_at(0.5)
    check_path(sl, pts)


def test_maurer_cartan_is_skew(chart, pts):
    a = maps.maurer_cartan(maps.random_analytic_map(chart, seed=1), pts)
    for c in a.terms.values():
        assert mx.max_norm(c + mx.dagger(c)) < 1e-13


def test_maurer_cartan_checks_unitarity(chart):
    bad = maps.UnitaryMap(chart, 1, lambda x: 2 * np.ones(x.shape[:-1] + (1, 1)))
    with pytest.raises(ValueError):
        maps.maurer_cartan(bad, chart.flat_points())
    with pytest.raises(ValueError):
        bad.check_unitary()
