"""Equivalence of maps through Chern-Simons forms.

Equality modulo exact forms is decided by comparing periods over a fixed
list of cycles on each built-in chart.  Everything here is a one-sided
check: a positive answer certifies equivalence through the supplied
witness, a negative answer only says that this witness does not work.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matrix as mx
from .chern import QuadratureSpec, SeriesSpec, cs, odd_chern
from .exterior import FormField, align, exterior_derivative, fiber_integrate_t, integrate_top
from .maps import block_sum_map, identity_map, stabilize_map

PERIOD_TOL = 1e-6
COARSE_PERIOD_TOL = 1e-3
ENDPOINT_TOL = 1e-10


def default_tolerance(chart):
    """Period tolerance suited to the default grid of ``chart``."""
    return COARSE_PERIOD_TOL if chart.kind == "sphere3" else PERIOD_TOL


@dataclass(frozen=True)
class Cycle:
    label: str
    degree: int
    integrate: Callable


@dataclass(frozen=True)
class CycleSet:
    chart_kind: str
    cycles: tuple

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self):
        return len(self.cycles)

    def labels(self):
        return [c.label for c in self.cycles]


def _fundamental(dim):
    def integrate(f):
        return integrate_top(f.degree_part(dim))

    return Cycle("fundamental", dim, integrate)


def _axis_loop(mu, label):
    """Closed coordinate loop along axis ``mu`` through the first node of the other axes."""

    def integrate(f):
        values = f.component((mu,))
        ax = f.chart.axes[mu]
        sl = [0] * f.chart.dim
        sl[mu] = slice(None)
        return complex(np.dot(values[tuple(sl)], ax.weights()))

    return Cycle(label, 1, integrate)


def _points():
    """Degree-0 classes modulo exact forms are functions; compare them everywhere."""

    def integrate(f):
        values = f.component(())
        if values.size == 0:
            return 0.0
        flat = values.reshape(-1)
        return complex(flat[np.argmax(np.abs(flat))])

    return Cycle("points", 0, integrate)


def cycles_for(chart):
    """Generating cycles of the built-in chart kinds."""
    kind = chart.kind
    cycles = [_points()]
    if kind in ("circle", "sphere1"):
        cycles.append(_fundamental(1))
    elif kind == "torus2":
        cycles += [_axis_loop(0, "loop_x"), _axis_loop(1, "loop_y"), _fundamental(2)]
    elif kind == "sphere2":
        cycles.append(_fundamental(2))
    elif kind == "sphere3":
        cycles.append(_fundamental(3))
    elif kind not in ("interval", "point"):
        raise ValueError(f"no built-in cycle set for chart kind {kind!r}; pass one explicitly")
    return CycleSet(kind, tuple(cycles))


@dataclass
class ModExactResult:
    """Outcome of a period comparison; truthy iff every tested period agrees."""

    equal: bool
    residuals: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)
    tolerance: float = PERIOD_TOL

    def __bool__(self):
        return self.equal

    def max_residual(self):
        return max(self.residuals.values(), default=0.0)


def mod_exact_equal(a, b, cycles=None, tol=None):
    """Compare two forms by their periods over ``cycles``.

    A cycle whose degree occurs in neither form is skipped and listed in
    ``skipped``.
    """
    a, b = align(a, b)
    cycles = cycles_for(a.chart) if cycles is None else cycles
    tol = default_tolerance(a.chart) if tol is None else tol
    diff = a - b
    present = set(a.degrees()) | set(b.degrees())
    residuals, skipped = {}, []
    for cyc in cycles:
        if cyc.degree not in present:
            skipped.append(cyc.label)
            continue
        residuals[cyc.label] = abs(cyc.integrate(diff))
    equal = all(r < tol for r in residuals.values())
    return ModExactResult(equal, residuals, skipped, tol)


def periods(f, cycles=None):
    """Periods of ``f`` over every cycle whose degree it carries."""
    cycles = cycles_for(f.chart) if cycles is None else cycles
    degrees = set(f.degrees())
    return {c.label: c.integrate(f) for c in cycles if c.degree in degrees}


def zero_field(chart):
    return FormField(chart, {}, real=True)


def cs_equivalent_witness(path, cycles=None, tol=None, spec=SeriesSpec(), quad=QuadratureSpec()):
    """Whether ``path`` certifies that its endpoints are CS-equivalent (its CS form is exact)."""
    form = cs(path, spec, quad)
    return mod_exact_equal(form, zero_field(form.chart), cycles, tol)


# ---------------------------------------------------------------------------
# the one-point manifold


def point_cs(path, quad=QuadratureSpec()):
    """``Tr int_0^1 g^-1 g' dt`` for a path over a single point.

    No ``1 / 2 pi i`` factor: the degree-0 Chern-Simons component is this
    value divided by ``2 pi i``.
    """
    if path.chart.size != 1:
        raise ValueError(f"point_cs needs a single-point chart, got grid {path.chart.shape}")
    x = path.chart.flat_points()

    def integrand(t):
        g = path(x, t)
        return np.trace(mx.dagger(g) @ path.dt(x, t), axis1=-2, axis2=-1)

    return complex(fiber_integrate_t(integrand, quad, path.breakpoints)[0])


@dataclass(frozen=True)
class PointClass:
    """Class of a unitary matrix over a point."""

    representative: np.ndarray

    def __post_init__(self):
        rep = mx.as_matrix(self.representative)
        if rep.ndim != 2 or not mx.is_unitary(rep, mx.TOL):
            raise ValueError("a point class needs a single unitary representative")
        object.__setattr__(self, "representative", rep)

    def __add__(self, other):
        return PointClass(mx.block_sum(self.representative, other.representative))

    def inverse(self):
        return PointClass(mx.dagger(self.representative))


def point_det(c):
    d = complex(np.linalg.det(c.representative))
    if abs(abs(d) - 1.0) >= 1e-10:
        raise ValueError(f"determinant {d} is not a unit complex number")
    return d


# ---------------------------------------------------------------------------
# pairs (g, X) of a map and an even form


@dataclass
class PairElement:
    g: object
    X: FormField

    def __post_init__(self):
        if self.X.chart.kind != self.g.chart.kind:
            raise ValueError("map and form live on different charts")
        odd = [k for k in self.X.degrees() if k % 2]
        if odd:
            raise ValueError(f"the form of a pair must have even degree, got degrees {odd}")


def pair_sum(a, b):
    """``(g, X) + (h, Y) = (g + h, X + Y)``."""
    if a.g.chart.kind != b.g.chart.kind or a.g.chart.shape != b.g.chart.shape:
        raise ValueError("pairs live on different charts")
    x, y = align(a.X, b.X)
    return PairElement(block_sum_map(a.g, b.g), x + y)


def pair_S(a, spec=SeriesSpec()):
    """``Ch(g) + dX``, on the interior grid of the chart."""
    dx = exterior_derivative(a.X)
    ch, dx = align(odd_chern(a.g, spec), dx)
    return ch + dx


def pair_b(X, chart=None):
    """The pair ``(1, X)``."""
    return PairElement(identity_map(chart or X.chart, 1), X)


def phi(g):
    """The pair ``(g, 0)``."""
    return PairElement(g, zero_field(g.chart))


def pair_equivalent(a, b, path, cycles=None, tol=None, spec=SeriesSpec(), quad=QuadratureSpec()):
    """Whether ``path`` from ``a.g`` to ``b.g`` has CS form equal to ``b.X - a.X`` modulo exact forms.

    Maps of different size are compared after padding with identities.
    """
    x = path.chart.flat_points()
    n = path.dim
    for label, g, t in (("start", a.g, 0.0), ("end", b.g, 1.0)):
        if g.dim > n:
            raise ValueError(f"{label} map is larger than the witness path")
        gap = mx.max_norm(path(x, t) - stabilize_map(g, n)(x))
        if gap >= ENDPOINT_TOL:
            raise ValueError(f"witness path does not match the {label} map: gap {gap:.3e}")
    target_x, source_x = align(b.X, a.X)
    return mod_exact_equal(cs(path, spec, quad), target_x - source_x, cycles, tol)
