"""Exterior algebra on coordinate charts.

Two kinds of forms live here.  A :class:`MatrixForm` is a matrix-valued
form whose coefficients are stacks of matrices over an arbitrary batch of
points; wedge products multiply the matrices and track Koszul signs.  A
:class:`FormField` is a scalar form sampled on the full grid of a
:class:`Chart`; it supports the finite-difference exterior derivative,
integration of the top-degree part, and CSV serialization.

Multi-indices are increasing tuples of 0-based axis numbers.  The CSV
schema writes them 1-based, e.g. ``(1,3)`` for ``dx1^dx3``.
"""
import csv
import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import simpson

REAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    samples: int
    periodic: bool = False

    def __post_init__(self):
        if self.samples < 3:
            raise ValueError(f"an axis needs at least 3 samples, got {self.samples}")
        if not self.hi > self.lo:
            raise ValueError(f"empty axis [{self.lo}, {self.hi}]")

    @property
    def spacing(self):
        n = self.samples if self.periodic else self.samples - 1
        return (self.hi - self.lo) / n

    def nodes(self):
        if self.periodic:
            return self.lo + self.spacing * np.arange(self.samples)
        return np.linspace(self.lo, self.hi, self.samples)

    def interior(self):
        """The axis with its two endpoint nodes removed (periodic axes unchanged)."""
        if self.periodic:
            return self
        h = self.spacing
        return Axis(self.lo + h, self.hi - h, self.samples - 2, False)

    def weights(self):
        """Trapezoidal weights on periodic axes, composite Simpson otherwise."""
        if self.periodic:
            return np.full(self.samples, self.spacing)
        return simpson(np.eye(self.samples), x=self.nodes(), axis=1)


def _unit_jacobian(x):
    return np.ones(x.shape[:-1])


@dataclass(frozen=True, eq=False)
class Chart:
    """A product grid standing in for a manifold.

    ``jacobian`` is the density of the volume form in these coordinates;
    ``embedding`` (optional) maps coordinates to a Euclidean space, with
    ``embedding_partials`` returning shape ``(..., dim, ambient)``.
    ``kind`` names the topology, which selects the built-in cycle set.
    """

    name: str
    axes: tuple
    coord_names: tuple
    jacobian: Callable = _unit_jacobian
    embedding: Optional[Callable] = None
    embedding_partials: Optional[Callable] = None
    kind: str = "user"
    trimmed: int = 0

    def __post_init__(self):
        if len(self.coord_names) != len(self.axes):
            raise ValueError("one coordinate name per axis is required")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(ax.samples for ax in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=int))

    @property
    def closed(self):
        """True when the chart has no boundary (every bounded axis is a collapsed coordinate)."""
        return self.trimmed == 0 and self.kind in CLOSED_KINDS

    def nodes(self):
        return [ax.nodes() for ax in self.axes]

    def points(self):
        """Grid coordinates with shape ``shape + (dim,)``."""
        if self.dim == 0:
            return np.zeros((0,))
        mesh = np.meshgrid(*self.nodes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def flat_points(self):
        return self.points().reshape(self.size, self.dim)

    def with_samples(self, samples):
        """Copy of the chart with new per-axis sample counts (an int applies to all axes)."""
        if isinstance(samples, (int, np.integer)):
            samples = [int(samples)] * self.dim
        samples = list(samples)
        if len(samples) == 1 and self.dim > 1:
            samples = samples * self.dim
        if len(samples) != self.dim:
            raise ValueError(f"chart {self.name} has {self.dim} axes, got {len(samples)} sample counts")
        axes = tuple(replace(ax, samples=int(n)) for ax, n in zip(self.axes, samples))
        return replace(self, axes=axes)

    def interior(self):
        if all(ax.periodic for ax in self.axes):
            return self
        return replace(self, axes=tuple(ax.interior() for ax in self.axes), trimmed=self.trimmed + 1)

    def is_trim_of(self, other, levels):
        return (
            self.kind == other.kind
            and self.dim == other.dim
            and self.trimmed == other.trimmed + levels
            and all(
                a.periodic == b.periodic and a.samples == b.samples - (0 if b.periodic else 2 * levels)
                for a, b in zip(self.axes, other.axes)
            )
        )

    def jacobian_values(self):
        if self.dim == 0:
            return np.ones(())
        return np.asarray(self.jacobian(self.points()), dtype=float)

    def volume_form(self):
        """The top form ``jacobian * dx_1 ... dx_d``."""
        top = tuple(range(self.dim))
        return FormField(self, {top: self.jacobian_values().astype(complex)}, real=True)

    def constant(self, value, degree=0):
        """A form with the same constant coefficient on every basis multi-index of ``degree``."""
        terms = {
            idx: np.full(self.shape, value, dtype=complex)
            for idx in itertools.combinations(range(self.dim), degree)
        }
        return FormField(self, terms, real=np.isrealobj(value))

    def field_from(self, fn, index=()):
        """Form ``fn(x) dx_index`` with ``fn`` evaluated on the grid coordinates."""
        values = np.asarray(fn(self.points()), dtype=complex)
        return FormField(self, {tuple(index): np.broadcast_to(values, self.shape).copy()})


CLOSED_KINDS = {"circle", "torus2", "sphere1", "sphere2", "sphere3", "point"}


def interval(samples=256):
    return Chart("interval", (Axis(0.0, 1.0, samples),), ("x",), kind="interval")


def circle(samples=256):
    return Chart("circle", (Axis(0.0, 1.0, samples, True),), ("x",), kind="circle")


def torus2(samples=64):
    chart = Chart(
        "torus2",
        (Axis(0.0, 1.0, 64, True), Axis(0.0, 1.0, 64, True)),
        ("x", "y"),
        kind="torus2",
    )
    return chart.with_samples(samples)


def torus(dim, samples=16):
    """The flat torus ``[0, 1)^dim``; ``torus(2)`` has the cycle set of ``torus2``."""
    if dim == 2:
        return torus2(samples)
    axes = tuple(Axis(0.0, 1.0, 3, True) for _ in range(dim))
    names = tuple(f"x{i + 1}" for i in range(dim))
    return Chart(f"torus{dim}", axes, names, kind=f"torus{dim}").with_samples(samples)


def _circle_embedding(x):
    a = x[..., 0]
    return np.stack([np.cos(a), np.sin(a)], axis=-1)


def _circle_embedding_partials(x):
    a = x[..., 0]
    return np.stack([-np.sin(a), np.cos(a)], axis=-1)[..., None, :]


def sphere1(samples=256):
    """The unit circle in R^2, angle coordinate on [0, 2 pi)."""
    return Chart(
        "sphere1",
        (Axis(0.0, 2 * math.pi, samples, True),),
        ("alpha",),
        embedding=_circle_embedding,
        embedding_partials=_circle_embedding_partials,
        kind="sphere1",
    )


def _sphere2_embedding(x):
    th, ph = x[..., 0], x[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def _sphere2_embedding_partials(x):
    th, ph = x[..., 0], x[..., 1]
    d_th = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
    d_ph = np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), np.zeros_like(th)], axis=-1)
    return np.stack([d_th, d_ph], axis=-2)


def sphere2(samples=(64, 128)):
    """Polar coordinates (theta, phi) on the unit 2-sphere; density sin(theta)."""
    chart = Chart(
        "sphere2",
        (Axis(0.0, math.pi, 64), Axis(0.0, 2 * math.pi, 128, True)),
        ("theta", "phi"),
        jacobian=lambda x: np.sin(x[..., 0]),
        embedding=_sphere2_embedding,
        embedding_partials=_sphere2_embedding_partials,
        kind="sphere2",
    )
    return chart.with_samples(samples)


def _hopf_embedding(x):
    eta, a, b = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [np.cos(a) * np.sin(eta), np.sin(a) * np.sin(eta), np.cos(b) * np.cos(eta), np.sin(b) * np.cos(eta)],
        axis=-1,
    )


def _hopf_embedding_partials(x):
    eta, a, b = x[..., 0], x[..., 1], x[..., 2]
    zero = np.zeros_like(eta)
    d_eta = np.stack(
        [np.cos(a) * np.cos(eta), np.sin(a) * np.cos(eta), -np.cos(b) * np.sin(eta), -np.sin(b) * np.sin(eta)],
        axis=-1,
    )
    d_a = np.stack([-np.sin(a) * np.sin(eta), np.cos(a) * np.sin(eta), zero, zero], axis=-1)
    d_b = np.stack([zero, zero, -np.sin(b) * np.cos(eta), np.cos(b) * np.cos(eta)], axis=-1)
    return np.stack([d_eta, d_a, d_b], axis=-2)


def sphere3_hopf(samples=24):
    """Hopf coordinates (eta, xi1, xi2) on the unit 3-sphere; density sin(eta) cos(eta)."""
    chart = Chart(
        "sphere3",
        (Axis(0.0, math.pi / 2, 24), Axis(0.0, 2 * math.pi, 24, True), Axis(0.0, 2 * math.pi, 24, True)),
        ("eta", "xi1", "xi2"),
        jacobian=lambda x: np.sin(x[..., 0]) * np.cos(x[..., 0]),
        embedding=_hopf_embedding,
        embedding_partials=_hopf_embedding_partials,
        kind="sphere3",
    )
    return chart.with_samples(samples)


def point():
    """The one-point manifold (a chart of dimension 0)."""
    return Chart("point", (), (), kind="point")


BUILTIN_CHARTS = {
    "interval": interval,
    "circle": circle,
    "torus2": torus2,
    "sphere1": sphere1,
    "sphere2": sphere2,
    "sphere3": sphere3_hopf,
    "point": point,
}


def get_chart(name, samples=None):
    try:
        factory = BUILTIN_CHARTS[name]
    except KeyError:
        raise KeyError(f"unknown chart {name!r}; choose from {sorted(BUILTIN_CHARTS)}") from None
    if name == "point":
        if samples:
            raise ValueError("the point chart has no grid")
        return factory()
    return factory() if samples is None else factory().with_samples(samples)


# ---------------------------------------------------------------------------
# pointwise matrix-valued forms


def merge_sign(a, b):
    """Sign of the permutation sorting the concatenation of disjoint increasing ``a`` and ``b``."""
    inversions = sum(1 for i in a for j in b if i > j)
    return -1 if inversions % 2 else 1


class MatrixForm:
    """Matrix-valued differential form at a batch of points.

    ``terms`` maps an increasing multi-index to coefficients of shape
    ``batch + (n, n)``.  Missing multi-indices are zero.
    """

    def __init__(self, chart_dim, matrix_dim, terms=None):
        self.chart_dim = int(chart_dim)
        self.matrix_dim = int(matrix_dim)
        self.terms = {}
        for idx, coeff in (terms or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)) or (idx and (idx[0] < 0 or idx[-1] >= self.chart_dim)):
                raise ValueError(f"invalid multi-index {idx} for chart dimension {self.chart_dim}")
            coeff = np.asarray(coeff, dtype=complex)
            if coeff.shape[-2:] != (self.matrix_dim, self.matrix_dim):
                raise ValueError(f"coefficient shape {coeff.shape} does not match matrix_dim {self.matrix_dim}")
            self.terms[idx] = coeff

    @classmethod
    def from_partials(cls, partials):
        """Degree-1 form ``sum_i partials[..., i, :, :] dx_i``."""
        partials = np.asarray(partials, dtype=complex)
        d, n = partials.shape[-3], partials.shape[-1]
        return cls(d, n, {(i,): partials[..., i, :, :] for i in range(d)})

    @classmethod
    def scalar(cls, chart_dim, coeff):
        coeff = np.asarray(coeff, dtype=complex)
        return cls(chart_dim, coeff.shape[-1], {(): coeff})

    def _check(self, other):
        if self.chart_dim != other.chart_dim or self.matrix_dim != other.matrix_dim:
            raise ValueError(
                f"form dimensions differ: ({self.chart_dim}, {self.matrix_dim}) vs "
                f"({other.chart_dim}, {other.matrix_dim})"
            )

    def degrees(self):
        return sorted({len(i) for i in self.terms})

    def degree_part(self, k):
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: c for i, c in self.terms.items() if len(i) == k})

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for idx, c in other.terms.items():
            out[idx] = out[idx] + c if idx in out else c
        return MatrixForm(self.chart_dim, self.matrix_dim, out)

    def __neg__(self):
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = np.asarray(scalar)
        if scalar.ndim:
            scalar = scalar[..., None, None]
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: scalar * c for i, c in self.terms.items()})

    __rmul__ = __mul__

    def left_mul(self, m):
        """``m . self`` for a (batched) matrix 0-form ``m``."""
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: m @ c for i, c in self.terms.items()})

    def right_mul(self, m):
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: c @ m for i, c in self.terms.items()})

    def conjugate_by(self, left, right):
        return MatrixForm(self.chart_dim, self.matrix_dim, {i: left @ c @ right for i, c in self.terms.items()})

    def wedge(self, other):
        return wedge(self, other)

    def power(self, k):
        """k-fold wedge power; the zero-th power is the identity 0-form."""
        if k == 0:
            return MatrixForm(self.chart_dim, self.matrix_dim, {(): np.eye(self.matrix_dim, dtype=complex)})
        out = self
        for _ in range(k - 1):
            out = wedge(out, self)
        return out

    def max_abs(self):
        return max((float(np.max(np.abs(c))) for c in self.terms.values() if c.size), default=0.0)

    def __repr__(self):
        return f"MatrixForm(chart_dim={self.chart_dim}, matrix_dim={self.matrix_dim}, terms={sorted(self.terms)})"


def wedge(a, b):
    """Wedge product of matrix-valued forms (matrix product of coefficients)."""
    a._check(b)
    out = {}
    for i, ca in a.terms.items():
        si = set(i)
        for j, cb in b.terms.items():
            if si.intersection(j):
                continue
            k = tuple(sorted(i + j))
            term = ca @ cb
            if merge_sign(i, j) < 0:
                term = -term
            out[k] = out[k] + term if k in out else term
    return MatrixForm(a.chart_dim, a.matrix_dim, out)


def trace_form(a):
    """Componentwise trace, returned as a form with 1x1 coefficients."""
    return MatrixForm(
        a.chart_dim, 1, {i: np.trace(c, axis1=-2, axis2=-1)[..., None, None] for i, c in a.terms.items()}
    )


def scalar_terms(a):
    """Coefficient dictionary of a form with 1x1 coefficients, matrix axes dropped."""
    if a.matrix_dim != 1:
        raise ValueError("scalar_terms needs a trace (1x1) form")
    return {i: c[..., 0, 0] for i, c in a.terms.items()}


# ---------------------------------------------------------------------------
# grid form fields


class FormField:
    """Complex scalar form sampled on every node of a chart grid."""

    def __init__(self, chart, terms=None, real=False):
        self.chart = chart
        self.terms = {}
        for idx, values in (terms or {}).items():
            values = np.asarray(values, dtype=complex)
            if values.shape != chart.shape:
                raise ValueError(f"coefficient grid {values.shape} does not match chart grid {chart.shape}")
            self.terms[tuple(idx)] = values
        self.real = real
        if real:
            self.check_real()

    @classmethod
    def from_matrix_form(cls, chart, form, real=False):
        """Reshape a trace form evaluated on the flattened grid into a field."""
        terms = {i: c.reshape(chart.shape) for i, c in scalar_terms(form).items()}
        return cls(chart, terms, real=real)

    def check_real(self, tol=REAL_TOL):
        imag = self.max_imag()
        if imag >= tol:
            raise ValueError(f"field tagged real has imaginary part {imag:.3e}")

    def max_imag(self):
        return max((float(np.max(np.abs(v.imag))) for v in self.terms.values() if v.size), default=0.0)

    def max_abs(self):
        return max((float(np.max(np.abs(v))) for v in self.terms.values() if v.size), default=0.0)

    def degrees(self):
        return sorted({len(i) for i in self.terms})

    def degree_part(self, k):
        return FormField(self.chart, {i: v for i, v in self.terms.items() if len(i) == k}, real=False)

    def component(self, idx):
        idx = tuple(idx)
        return self.terms.get(idx, np.zeros(self.chart.shape, dtype=complex))

    def _combine(self, other, sign):
        if other.chart.shape != self.chart.shape or other.chart.kind != self.chart.kind:
            raise ValueError("fields live on different grids; use align() first")
        out = dict(self.terms)
        for idx, v in other.terms.items():
            out[idx] = out[idx] + sign * v if idx in out else sign * v
        return FormField(self.chart, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return FormField(self.chart, {i: -v for i, v in self.terms.items()}, real=self.real)

    def __mul__(self, scalar):
        return FormField(self.chart, {i: scalar * v for i, v in self.terms.items()})

    __rmul__ = __mul__

    def crop_to(self, chart):
        """Restrict to a chart obtained from ours by ``Chart.interior`` (possibly repeatedly)."""
        levels = chart.trimmed - self.chart.trimmed
        if levels == 0 and chart.shape == self.chart.shape:
            return self
        if levels < 0 or not chart.is_trim_of(self.chart, levels):
            raise ValueError(f"grid {chart.shape} is not an interior restriction of {self.chart.shape}")
        sl = tuple(slice(None) if ax.periodic else slice(levels, -levels) for ax in self.chart.axes)
        return FormField(chart, {i: v[sl] for i, v in self.terms.items()}, real=self.real)

    def real_part(self):
        return FormField(self.chart, {i: v.real.astype(complex) for i, v in self.terms.items()}, real=True)

    def __repr__(self):
        return f"FormField(chart={self.chart.name}, grid={self.chart.shape}, terms={sorted(self.terms)})"


def align(*fields):
    """Crop fields to the most-trimmed grid among them."""
    target = max(fields, key=lambda f: f.chart.trimmed).chart
    return [f.crop_to(target) for f in fields]


def max_difference(a, b):
    a, b = align(a, b)
    return (a - b).max_abs()


def _central_difference(values, axis, ax):
    h = ax.spacing
    if ax.periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
    fwd = [slice(None)] * values.ndim
    bwd = [slice(None)] * values.ndim
    fwd[axis] = slice(2, None)
    bwd[axis] = slice(None, -2)
    return (values[tuple(fwd)] - values[tuple(bwd)]) / (2 * h)


def exterior_derivative(f):
    """Second-order central-difference exterior derivative.

    Bounded axes lose their endpoint nodes, so the result lives on
    ``f.chart.interior()``.  Components of degree ``chart.dim`` contribute
    nothing.
    """
    chart = f.chart
    out_chart = chart.interior()
    crop = tuple(slice(None) if ax.periodic else slice(1, -1) for ax in chart.axes)
    out = {}
    for idx, values in f.terms.items():
        for mu, ax in enumerate(chart.axes):
            if mu in idx:
                continue
            deriv = _central_difference(values, mu, ax)
            # crop the other bounded axes to the interior
            sl = list(crop)
            sl[mu] = slice(None)
            deriv = deriv[tuple(sl)]
            new = tuple(sorted(idx + (mu,)))
            if merge_sign((mu,), idx) < 0:
                deriv = -deriv
            out[new] = out[new] + deriv if new in out else deriv
    return FormField(out_chart, out)


def integrate_top(f):
    """Integral of the top-degree coefficient over the grid.

    Coordinate coefficients are integrated as they are; to integrate a
    density against the volume use ``Chart.volume_form``.
    """
    chart = f.chart
    top = tuple(range(chart.dim))
    if top not in f.terms:
        return 0.0 + 0.0j
    values = f.terms[top]
    for ax in reversed(chart.axes):
        values = values @ ax.weights()
    return complex(values)


def integrate_along_axis(values, ax, axis):
    return np.tensordot(values, ax.weights(), axes=([axis], [0]))


# ---------------------------------------------------------------------------
# quadrature in the fiber direction


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 64
    rule: str = "gauss"

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError(f"quadrature needs at least 2 nodes, got {self.nodes}")
        if self.rule not in ("gauss", "simpson"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")

    def rule_on(self, a, b):
        """Nodes and weights on ``[a, b]``."""
        if self.rule == "gauss":
            x, w = leggauss(self.nodes)
            return a + (b - a) * (x + 1) / 2, w * (b - a) / 2
        x = np.linspace(a, b, self.nodes)
        return x, simpson(np.eye(self.nodes), x=x, axis=1)

    def composite(self, a=0.0, b=1.0, breakpoints=()):
        """Nodes and weights with the rule applied separately between breakpoints."""
        cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
        xs, ws = zip(*(self.rule_on(lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:])))
        return np.concatenate(xs), np.concatenate(ws)


def fiber_integrate_t(integrand, quad=QuadratureSpec(), breakpoints=(), interval=(0.0, 1.0)):
    """``int integrand(t) dt`` over ``interval`` by the rule in ``quad``.

    ``integrand`` may return anything closed under addition and scalar
    multiplication (arrays, :class:`MatrixForm`, :class:`FormField`).
    """
    ts, ws = quad.composite(interval[0], interval[1], breakpoints)
    total = None
    for t, w in zip(ts, ws):
        term = integrand(float(t)) * float(w)
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# CSV


def _format_index(idx):
    return "(" + ",".join(str(i + 1) for i in idx) + ")"


def _parse_index(text):
    inner = text.strip().strip("()")
    return tuple(int(p) - 1 for p in inner.split(",") if p.strip())


def write_csv(f, path):
    """One row per grid point per multi-index: multi_index, coordinates, re, im."""
    chart = f.chart
    pts = chart.points().reshape(chart.size, chart.dim)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["multi_index", *chart.coord_names, "re", "im"])
        for idx in sorted(f.terms, key=lambda i: (len(i), i)):
            vals = f.terms[idx].reshape(chart.size)
            for p, v in zip(pts, vals):
                w.writerow([_format_index(idx), *(repr(float(c)) for c in p), repr(float(v.real)), repr(float(v.imag))])


def read_csv(path, chart):
    """Inverse of :func:`write_csv` for a field on ``chart`` (rows in grid order)."""
    groups = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[0] != "multi_index" or header[-2:] != ["re", "im"]:
            raise ValueError(f"unexpected CSV header {header}")
        for row in r:
            groups.setdefault(_parse_index(row[0]), []).append(complex(float(row[-2]), float(row[-1])))
    return FormField(chart, {i: np.array(v).reshape(chart.shape) for i, v in groups.items()})
