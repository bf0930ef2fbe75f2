"""Chern character and Chern-Simons kernels.

All kernels work on the flattened chart grid at once.  The series over n
stop as soon as the form degree would exceed the chart dimension, where
every term vanishes identically, so the truncation is exact.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import matrix as mx
from .exterior import FormField, MatrixForm, QuadratureSpec, fiber_integrate_t, trace_form, wedge

__all__ = [
    "QuadratureSpec",
    "SeriesSpec",
    "odd_coefficient",
    "cs_coefficient",
    "even_coefficient",
    "odd_chern",
    "odd_chern_density",
    "cs",
    "cs_density",
    "cs_integrand_traces",
    "even_chern_of_projection",
    "h_form",
    "h_density",
    "winding",
    "WindingResult",
    "truncated_loop_coefficient",
    "truncated_cs_check",
]


@dataclass(frozen=True)
class SeriesSpec:
    """Optional cap on the series index n; ``None`` keeps every nonvanishing term."""

    n_max: Optional[int] = None

    def __post_init__(self):
        if self.n_max is not None and self.n_max < 0:
            raise ValueError("n_max must be nonnegative")

    def indices(self, chart_dim, degree_of):
        n = 0
        while degree_of(n) <= chart_dim and (self.n_max is None or n <= self.n_max):
            yield n
            n += 1


def odd_coefficient(n):
    return (-1) ** n * math.factorial(n) / ((2j * math.pi) ** (n + 1) * math.factorial(2 * n + 1))


def cs_coefficient(n):
    return (-1) ** n * math.factorial(n) / ((2j * math.pi) ** (n + 1) * math.factorial(2 * n))


def even_coefficient(n):
    return 1.0 / ((2j * math.pi) ** n * math.factorial(n))


def _accumulate(total, term):
    return term if total is None else total + term


def _zero_trace(chart_dim):
    return MatrixForm(chart_dim, 1, {})


# ---------------------------------------------------------------------------
# densities on a batch of points


def odd_chern_density(a, spec=SeriesSpec()):
    """``Tr sum_n c_n A^(2n+1)`` for a matrix 1-form A."""
    d = a.chart_dim
    a2 = wedge(a, a)
    power = a
    total = _zero_trace(d)
    for n in spec.indices(d, lambda n: 2 * n + 1):
        if n:
            power = wedge(power, a2)
        total = total + trace_form(power) * odd_coefficient(n)
    return total


def cs_density(t_log, a, spec=SeriesSpec()):
    """``Tr sum_n d_n T A^(2n)`` with T the logarithmic t-derivative."""
    d = a.chart_dim
    a2 = wedge(a, a)
    power = MatrixForm.scalar(d, t_log)
    total = _zero_trace(d)
    for n in spec.indices(d, lambda n: 2 * n):
        if n:
            power = wedge(power, a2)
        total = total + trace_form(power) * cs_coefficient(n)
    return total


def cs_integrand_traces(path, x, t, n_max=None):
    """Raw traces ``Tr(g^-1 g' (g^-1 dg)^(2n))`` keyed by n, without series coefficients."""
    g, dg, gt = path.jet(x, t)
    gi = mx.dagger(g)
    t_log = gi @ gt
    a = _maurer_cartan(g, dg)
    d = a.chart_dim
    spec = SeriesSpec(n_max)
    a2 = wedge(a, a)
    power = MatrixForm.scalar(d, t_log)
    out = {}
    for n in spec.indices(d, lambda n: 2 * n):
        if n:
            power = wedge(power, a2)
        out[n] = trace_form(power)
    return out


def _word(slots, a, t_log, s_log):
    """Product of the slot sequence: 'A' wedges the 1-form, 'T'/'S' multiply by a 0-form."""
    form = MatrixForm.scalar(a.chart_dim, np.broadcast_to(np.eye(a.matrix_dim), t_log.shape).astype(complex))
    for kind in slots:
        if kind == "A":
            form = wedge(form, a)
        else:
            form = form.right_mul(t_log if kind == "T" else s_log)
    return form


def insertion_sign(i, j):
    """Sign from moving dt (slot i) and ds (slot j) to the front as ``dt ^ ds``."""
    parity = i + j + 1 if i < j else i + j
    return -1 if parity % 2 else 1


def h_density(t_log, s_log, a, spec=SeriesSpec()):
    """Integrand of the two-parameter transgression form.

    ``Tr sum_n c_n sum_{i != j} eps_ij W_ij`` where ``W_ij`` is the word of
    2n+1 factors with ``g^-1 d_t g`` in slot i, ``g^-1 d_s g`` in slot j and
    ``g^-1 dg`` elsewhere, and ``eps_ij`` is the Koszul sign of pulling
    ``dt ^ ds`` to the front.
    """
    d = a.chart_dim
    total = _zero_trace(d)
    for n in spec.indices(d, lambda n: 2 * n - 1):
        if n == 0:
            continue
        length = 2 * n + 1
        acc = None
        for i in range(length):
            for j in range(length):
                if i == j:
                    continue
                slots = ["A"] * length
                slots[i], slots[j] = "T", "S"
                w = _word(slots, a, t_log, s_log)
                w = w if insertion_sign(i, j) > 0 else -w
                acc = _accumulate(acc, w)
        total = total + trace_form(acc) * odd_coefficient(n)
    return total


def even_chern_density(p, dp, spec=SeriesSpec()):
    """``Tr sum_n (2 pi i)^-n / n! P (dP)^(2n)``."""
    d = dp.chart_dim
    dp2 = wedge(dp, dp)
    power = MatrixForm.scalar(d, p)
    total = _zero_trace(d)
    for n in spec.indices(d, lambda n: 2 * n):
        if n:
            power = wedge(power, dp2)
        total = total + trace_form(power) * even_coefficient(n)
    return total


# ---------------------------------------------------------------------------
# grid-level kernels


def _maurer_cartan(gx, partials):
    return MatrixForm.from_partials(mx.dagger(gx)[..., None, :, :] @ partials)


def odd_chern(g, spec=SeriesSpec()):
    """Odd Chern character of a map, as a real odd-degree field on its chart."""
    chart = g.chart
    x = chart.flat_points()
    gx = g(x)
    if not mx.is_unitary(gx, 1e-9):
        raise ValueError(f"{g!r} is not unitary on its chart grid")
    a = _maurer_cartan(gx, g.partials(x))
    return FormField.from_matrix_form(chart, odd_chern_density(a, spec), real=True)


def cs(path, spec=SeriesSpec(), quad=QuadratureSpec()):
    """Chern-Simons form of a path of maps, as a real even-degree field."""
    chart = path.chart
    x = chart.flat_points()

    def integrand(t):
        g, dg, gt = path.jet(x, t)
        return cs_density(mx.dagger(g) @ gt, _maurer_cartan(g, dg), spec)

    total = fiber_integrate_t(integrand, quad, path.breakpoints)
    return FormField.from_matrix_form(chart, total, real=True)


def h_form(family, spec=SeriesSpec(), quad=QuadratureSpec()):
    """Two-parameter transgression form by tensor-product quadrature over (t, s)."""
    chart = family.chart
    x = chart.flat_points()
    ts, ws = quad.composite(breakpoints=getattr(family, "breakpoints", ()))
    total = _zero_trace(chart.dim)
    for s, ws_ in zip(ts, ws):
        for t, wt in zip(ts, ws):
            g, dg, gt, gs = family.jet(x, t, s)
            gi = mx.dagger(g)
            dens = h_density(gi @ gt, gi @ gs, _maurer_cartan(g, dg), spec)
            total = total + dens * float(wt * ws_)
    return FormField.from_matrix_form(chart, total, real=True)


def even_chern_of_projection(p, spec=SeriesSpec()):
    """Chern character of the image bundle of a projection-valued map with the projected connection."""
    chart = p.chart
    x = chart.flat_points()
    px = p(x)
    if not mx.is_projection(px):
        raise ValueError(f"{p.name or 'map'} is not projection valued on its chart grid")
    dp = MatrixForm.from_partials(p.partials(x))
    return FormField.from_matrix_form(chart, even_chern_density(px, dp, spec), real=True)


@dataclass
class WindingResult:
    value: object
    residual: object

    @property
    def integer(self):
        return np.rint(self.value).astype(int)


def winding(loop, quad=QuadratureSpec(), tol=1e-10):
    """``(1 / 2 pi i) Tr int_0^1 g^-1 g' dt`` at every chart point, with distance to the nearest integer."""
    x = loop.chart.flat_points()
    gap = loop.endpoint_gap(x)
    if gap >= tol:
        raise ValueError(f"path is not a loop: |g_1 - g_0| = {gap:.3e}")

    def integrand(t):
        g = loop(x, t)
        return np.trace(mx.dagger(g) @ loop.dt(x, t), axis1=-2, axis2=-1)

    total = fiber_integrate_t(integrand, quad, loop.breakpoints) / (2j * math.pi)
    value = total.real.reshape(loop.chart.shape)
    residual = np.abs(total.reshape(loop.chart.shape) - np.rint(value))
    if loop.chart.dim == 0:
        return WindingResult(float(value), float(residual))
    return WindingResult(value, residual)


def truncated_loop_coefficient(n, s, quad=QuadratureSpec()):
    """``4^n / C(2n, n) * int_0^s sin^(2n)(pi t) dt``; equals 1 at s = 1."""
    ts, ws = quad.rule_on(0.0, s)
    integral = float(np.sum(ws * np.sin(np.pi * ts) ** (2 * n)))
    return 4**n / math.comb(2 * n, n) * integral


def truncated_cs_check(p, s, spec=SeriesSpec(), quad=QuadratureSpec()):
    """Compare CS of the projection loop run to ``s`` with the rescaled even Chern character.

    Returns ``{"s", "coefficients", "differences", "max_difference"}`` where
    ``differences[k]`` is the max-norm gap in degree k.
    """
    from .maps import projection_loop

    lhs = cs(projection_loop(p, s), spec, quad)
    ch = even_chern_of_projection(p, spec)
    coeffs = {}
    rhs = None
    for k in ch.degrees():
        f = truncated_loop_coefficient(k // 2, s, quad)
        coeffs[k] = f
        part = ch.degree_part(k) * f
        rhs = part if rhs is None else rhs + part
    diffs = {}
    for k in sorted(set(lhs.degrees()) | set(ch.degrees())):
        diffs[k] = (lhs.degree_part(k) - rhs.degree_part(k)).max_abs()
    return {
        "s": s,
        "coefficients": coeffs,
        "differences": diffs,
        "max_difference": max(diffs.values(), default=0.0),
    }
