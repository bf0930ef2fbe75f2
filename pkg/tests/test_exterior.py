import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddchern import exterior as ex


# --- independent oracle: forms as fully antisymmetric coefficient tensors ---


def perm_sign(seq):
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def to_tensor(form, k):
    """Scalar k-form (1x1 coefficients at one point) as an antisymmetric array."""
    d = form.chart_dim
    t = np.zeros((d,) * k, dtype=complex)
    for idx, c in form.terms.items():
        if len(idx) != k:
            continue
        for perm in itertools.permutations(range(k)):
            t[tuple(idx[p] for p in perm)] = perm_sign(perm) * c[0, 0]
    return t


def alt_wedge(a, b, p, q):
    """(a ^ b)_{i1..i(p+q)} = sum over shuffles, via the full antisymmetrisation."""
    d = a.shape[0] if p else b.shape[0]
    out = np.zeros((d,) * (p + q), dtype=complex)
    for idx in itertools.product(range(d), repeat=p + q):
        total = 0
        for perm in itertools.permutations(range(p + q)):
            j = [idx[s] for s in perm]
            total += perm_sign(perm) * a[tuple(j[:p])] * b[tuple(j[p:])]
        out[idx] = total / (math.factorial(p) * math.factorial(q))
    return out


def random_scalar_form(rng, d, k):
    terms = {idx: rng.standard_normal((1, 1)) + 0j for idx in itertools.combinations(range(d), k)}
    return ex.MatrixForm(d, 1, terms)


@pytest.mark.parametrize("d,p,q", [(3, 1, 1), (4, 1, 2), (4, 2, 2), (5, 2, 3), (3, 0, 2)])
def test_wedge_matches_antisymmetric_tensor_oracle(rng, d, p, q):
    a, b = random_scalar_form(rng, d, p), random_scalar_form(rng, d, q)
    got = to_tensor(ex.wedge(a, b), p + q)
    want = alt_wedge(to_tensor(a, p), to_tensor(b, q), p, q)
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_wedge_graded_commutativity(rng):
    for p, q in [(1, 1), (1, 2), (2, 2)]:
        a, b = random_scalar_form(rng, 5, p), random_scalar_form(rng, 5, q)
        lhs, rhs = ex.wedge(a, b), ex.wedge(b, a) * (-1) ** (p * q)
        assert (lhs - rhs).max_abs() < 1e-13


def test_wedge_basis_signs():
    d = 3
    one = np.ones((1, 1))
    dx = [ex.MatrixForm(d, 1, {(i,): one}) for i in range(d)]
    assert ex.wedge(dx[1], dx[0]).terms[(0, 1)][0, 0] == -1
    assert ex.wedge(ex.wedge(dx[2], dx[0]), dx[1]).terms[(0, 1, 2)][0, 0] == 1
    assert ex.wedge(dx[0], dx[0]).terms == {}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_wedge_associative_with_matrices(seed):
    r = np.random.default_rng(seed)
    d, n = 4, 2

    def one_form():
        return ex.MatrixForm.from_partials(r.standard_normal((d, n, n)) + 1j * r.standard_normal((d, n, n)))

    a, b, c = one_form(), one_form(), one_form()
    lhs = ex.wedge(ex.wedge(a, b), c)
    rhs = ex.wedge(a, ex.wedge(b, c))
    assert (lhs - rhs).max_abs() < 1e-12


def test_trace_of_odd_power_of_matrix_one_form_squared_is_not_zero_but_even_power_is():
    # Tr(A^2) vanishes for a matrix 1-form by cyclicity; Tr(A^3) generally does not.
    r = np.random.default_rng(3)
    a = ex.MatrixForm.from_partials(r.standard_normal((3, 2, 2)) + 1j * r.standard_normal((3, 2, 2)))
    assert ex.trace_form(ex.wedge(a, a)).max_abs() < 1e-13
    assert ex.trace_form(a.power(3)).max_abs() > 1e-3


def test_matrix_form_validation():
    with pytest.raises(ValueError):
        ex.MatrixForm(2, 1, {(1, 0): np.ones((1, 1))})
    with pytest.raises(ValueError):
        ex.MatrixForm(2, 1, {(2,): np.ones((1, 1))})
    with pytest.raises(ValueError):
        ex.MatrixForm(2, 2, {(0,): np.ones((1, 1))})
    with pytest.raises(ValueError):
        ex.MatrixForm(2, 1) + ex.MatrixForm(3, 1)


def test_power_zero_is_identity():
    a = ex.MatrixForm.from_partials(np.ones((2, 3, 3)))
    np.testing.assert_array_equal(a.power(0).terms[()], np.eye(3))


# --- charts ---


def test_axis_rejects_tiny_grids():
    with pytest.raises(ValueError):
        ex.Axis(0, 1, 2)
    with pytest.raises(ValueError):
        ex.Axis(1, 1, 5)


def test_axis_nodes_and_spacing():
    per = ex.Axis(0, 1, 4, True)
    np.testing.assert_allclose(per.nodes(), [0, 0.25, 0.5, 0.75])
    bnd = ex.Axis(0, 1, 5)
    np.testing.assert_allclose(bnd.nodes(), [0, 0.25, 0.5, 0.75, 1])
    assert bnd.interior().samples == 3 and bnd.interior().lo == 0.25


@pytest.mark.parametrize("name,dim", [("interval", 1), ("circle", 1), ("torus2", 2), ("sphere1", 1),
                                      ("sphere2", 2), ("sphere3", 3), ("point", 0)])
def test_builtin_charts(name, dim):
    c = ex.get_chart(name)
    assert c.dim == dim and c.kind == name
    assert c.flat_points().shape == (c.size, dim)


def test_get_chart_errors():
    with pytest.raises(KeyError):
        ex.get_chart("klein")
    with pytest.raises(ValueError):
        ex.get_chart("point", (4,))
    with pytest.raises(ValueError):
        ex.get_chart("torus2", (4, 4, 4))


def test_torus_factory():
    assert ex.torus(2, 8).kind == "torus2"
    t4 = ex.torus(4, 3)
    assert t4.shape == (3, 3, 3, 3) and t4.kind == "torus4"


@pytest.mark.parametrize(
    "name,volume,tol",
    [("sphere1", 2 * math.pi, 1e-12), ("torus2", 1.0, 1e-12), ("sphere2", 4 * math.pi, 1e-5), ("sphere3", 2 * math.pi**2, 1e-3)],
)
def test_volumes(name, volume, tol):
    # bounded polar axes use Simpson on an even node count, so only the periodic charts are exact
    c = ex.get_chart(name)
    assert abs(ex.integrate_top(c.volume_form()) - volume) < tol


def test_embedding_partials_match_finite_differences():
    h = 1e-6
    for name in ("sphere1", "sphere2", "sphere3"):
        c = ex.get_chart(name, 5)
        x = c.flat_points()
        dp = c.embedding_partials(x)
        for mu in range(c.dim):
            e = np.zeros(c.dim)
            e[mu] = h
            fd = (c.embedding(x + e) - c.embedding(x - e)) / (2 * h)
            assert np.max(np.abs(fd - dp[..., mu, :])) < 1e-8


def test_embeddings_land_on_unit_spheres():
    for name in ("sphere1", "sphere2", "sphere3"):
        c = ex.get_chart(name, 7)
        np.testing.assert_allclose(np.linalg.norm(c.embedding(c.flat_points()), axis=-1), 1.0, atol=1e-14)


# --- derivative, integration, alignment ---


def test_derivative_of_periodic_sine_is_second_order():
    errs = []
    for n in (32, 64):
        c = ex.circle(n)
        f = c.field_from(lambda p: np.sin(2 * np.pi * p[..., 0]))
        d = ex.exterior_derivative(f).component((0,))
        exact = 2 * np.pi * np.cos(2 * np.pi * c.points()[..., 0])
        errs.append(np.max(np.abs(d - exact)))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_derivative_trims_bounded_axes():
    c = ex.interval(11)
    d = ex.exterior_derivative(c.field_from(lambda p: p[..., 0] ** 2))
    assert d.chart.shape == (9,) and d.chart.trimmed == 1
    np.testing.assert_allclose(d.component((0,)), 2 * d.chart.points()[..., 0], atol=1e-13)


def test_d_of_one_form_on_torus_sign():
    # d(x dy) = dx ^ dy and d(y dx) = -dx ^ dy for the linear coordinate functions.
    c = ex.torus2(16)
    f = c.field_from(lambda p: np.sin(2 * np.pi * p[..., 0]), index=(1,))
    g = c.field_from(lambda p: np.sin(2 * np.pi * p[..., 1]), index=(0,))
    df = ex.exterior_derivative(f).component((0, 1))
    dg = ex.exterior_derivative(g).component((0, 1))
    pts = c.points()
    h = 1 / 16
    scale = np.sin(2 * np.pi * h) / h
    np.testing.assert_allclose(df, scale * np.cos(2 * np.pi * pts[..., 0]), atol=1e-12)
    np.testing.assert_allclose(dg, -scale * np.cos(2 * np.pi * pts[..., 1]), atol=1e-12)


def test_dd_vanishes_on_torus(rng):
    c = ex.torus2(24)
    coeff = rng.standard_normal(c.shape)
    f = ex.FormField(c, {(): coeff})
    assert ex.exterior_derivative(ex.exterior_derivative(f)).max_abs() < 1e-10


def test_integrate_top_simpson_exact_on_cubics():
    c = ex.interval(9)
    f = c.field_from(lambda p: p[..., 0] ** 3, index=(0,))
    assert abs(ex.integrate_top(f) - 0.25) < 1e-14


def test_integrate_top_without_top_part_is_zero():
    c = ex.torus2(8)
    assert ex.integrate_top(c.constant(1.0, degree=1)) == 0


def test_align_and_field_arithmetic():
    c = ex.interval(9)
    f = c.field_from(lambda p: p[..., 0])
    d = ex.exterior_derivative(f)
    a, b = ex.align(f, d)
    assert a.chart.shape == b.chart.shape == (7,)
    with pytest.raises(ValueError):
        f + d
    assert ex.max_difference(f, f * 1.0) == 0


def test_real_tag_enforced():
    c = ex.circle(8)
    with pytest.raises(ValueError):
        ex.FormField(c, {(): np.full(8, 1j)}, real=True)
    f = ex.FormField(c, {(): np.full(8, 1 + 1e-12j)}, real=True)
    assert f.max_imag() < 1e-11


def test_field_shape_checked():
    with pytest.raises(ValueError):
        ex.FormField(ex.circle(8), {(): np.zeros(9)})


# --- quadrature ---


@pytest.mark.parametrize("rule", ["gauss", "simpson"])
def test_quadrature_exactness(rule):
    q = ex.QuadratureSpec(9, rule)
    t, w = q.rule_on(0.0, 2.0)
    assert abs(np.sum(w * t**3) - 4.0) < 1e-13


def test_composite_respects_breakpoints():
    q = ex.QuadratureSpec(8)
    t, w = q.composite(breakpoints=(0.5,))
    assert abs(np.sum(w * np.abs(t - 0.5)) - 0.25) < 1e-14
    assert len(t) == 16 and abs(w.sum() - 1) < 1e-14


def test_fiber_integrate_t_forms():
    total = ex.fiber_integrate_t(lambda t: np.array([t, t**2]), ex.QuadratureSpec(4))
    np.testing.assert_allclose(total, [0.5, 1 / 3], atol=1e-15)


def test_quadrature_validation():
    with pytest.raises(ValueError):
        ex.QuadratureSpec(1)
    with pytest.raises(ValueError):
        ex.QuadratureSpec(4, "midpoint")


# --- csv ---


def test_csv_roundtrip(tmp_path):
    c = ex.torus2(5)
    f = ex.FormField(c, {(): np.arange(25.0).reshape(5, 5) + 0.5j, (0, 1): np.ones((5, 5))})
    path = tmp_path / "f.csv"
    ex.write_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "multi_index,x,y,re,im"
    assert lines[1].startswith("(),")
    assert any(line.startswith('"(1,2)"') for line in lines)
    g = ex.read_csv(path, c)
    assert ex.max_difference(f, g) == 0


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n")
    with pytest.raises(ValueError):
        ex.read_csv(path, ex.circle(3))
