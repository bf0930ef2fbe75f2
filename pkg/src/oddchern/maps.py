"""Maps, paths and two-parameter families into U(n), with derivatives.

Every callable takes coordinates ``x`` of shape ``(..., d)`` and returns
matrices of shape ``(..., n, n)``; spatial partials come back stacked as
``(..., d, n, n)``.  Path and family parameters ``t``/``s`` are floats or
arrays broadcasting against ``x.shape[:-1]``.
"""
import math

import numpy as np
import sympy

from . import matrix as mx
from .exterior import Chart, MatrixForm, sphere1, sphere2, sphere3_hopf

FD_STEP = 1e-5
UNITARY_TOL = 1e-9


def _col(t):
    return np.asarray(t, dtype=float)[..., None, None]


def _batch(x):
    return np.asarray(x, dtype=float).shape[:-1]


def _fd_partials(fn, x, step):
    x = np.asarray(x, dtype=float)
    out = []
    for mu in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[mu] = step
        out.append((fn(x + e) - fn(x - e)) / (2 * step))
    if not out:
        n = fn(x).shape[-1]
        return np.zeros(x.shape[:-1] + (0, n, n), dtype=complex)
    return np.stack(out, axis=-3)


class UnitaryMap:
    """A smooth map ``chart -> U(n)``.

    Without analytic ``partials`` the spatial derivatives fall back to
    central differences with step ``fd_step``.
    """

    def __init__(self, chart, dim, value, partials=None, fd_step=FD_STEP, name=""):
        self.chart = chart
        self.dim = int(dim)
        self._value = value
        self._partials = partials
        self.fd_step = fd_step
        self.name = name

    @property
    def analytic(self):
        return self._partials is not None

    def __call__(self, x):
        return self._value(np.asarray(x, dtype=float))

    def partials(self, x):
        x = np.asarray(x, dtype=float)
        if self._partials is not None:
            return self._partials(x)
        return _fd_partials(self._value, x, self.fd_step)

    def fd_partials(self, x, step=1e-4):
        return _fd_partials(self._value, np.asarray(x, dtype=float), step)

    def check_unitary(self, x=None, tol=UNITARY_TOL):
        x = self.chart.flat_points() if x is None else x
        if not mx.is_unitary(self(x), tol):
            raise ValueError(f"map {self.name or '<anonymous>'} is not unitary on the sampled points")
        return True

    def __repr__(self):
        return f"UnitaryMap({self.name or '?'}, U({self.dim}) on {self.chart.name})"


class ProjectionMap:
    """A smooth map ``chart -> {orthogonal projections on C^n}``."""

    def __init__(self, chart, dim, value, partials=None, fd_step=FD_STEP, name=""):
        self.chart = chart
        self.dim = int(dim)
        self._value = value
        self._partials = partials
        self.fd_step = fd_step
        self.name = name

    def __call__(self, x):
        return self._value(np.asarray(x, dtype=float))

    def partials(self, x):
        x = np.asarray(x, dtype=float)
        if self._partials is not None:
            return self._partials(x)
        return _fd_partials(self._value, x, self.fd_step)

    def check_projection(self, x=None, tol=mx.TOL):
        x = self.chart.flat_points() if x is None else x
        if not mx.is_projection(self(x), tol):
            raise ValueError(f"{self.name or 'map'} is not projection valued")
        return True


class PathOfMaps:
    """A family ``g_t`` of maps ``chart -> U(n)`` for t in [0, 1].

    ``breakpoints`` lists parameter values where the path is only finitely
    smooth (joints of a composition); t-quadrature splits there.
    """

    def __init__(
        self, chart, dim, value, partials=None, dt=None, breakpoints=(), fd_step=FD_STEP, name="", jet=None
    ):
        self.chart = chart
        self.dim = int(dim)
        self._value = value
        self._partials = partials
        self._dt = dt
        self._jet = jet
        self.breakpoints = tuple(breakpoints)
        self.fd_step = fd_step
        self.name = name

    def __call__(self, x, t):
        return self._value(np.asarray(x, dtype=float), t)

    def partials(self, x, t):
        x = np.asarray(x, dtype=float)
        if self._partials is not None:
            return self._partials(x, t)
        return _fd_partials(lambda y: self._value(y, t), x, self.fd_step)

    def dt(self, x, t):
        x = np.asarray(x, dtype=float)
        if self._dt is not None:
            return self._dt(x, t)
        h = self.fd_step
        t = np.asarray(t, dtype=float)
        return (self._value(x, t + h) - self._value(x, t - h)) / (2 * h)

    def jet(self, x, t):
        """``(g, dg/dx, dg/dt)`` at once; shares work when the path provides a joint evaluator."""
        if self._jet is not None:
            return self._jet(np.asarray(x, dtype=float), t)
        return self(x, t), self.partials(x, t), self.dt(x, t)

    def at(self, t):
        """The time-``t`` slice as a :class:`UnitaryMap`."""
        partials = None if self._partials is None else (lambda x: self._partials(x, t))
        return UnitaryMap(self.chart, self.dim, lambda x: self._value(x, t), partials, self.fd_step, f"{self.name}@{t}")

    def endpoint_gap(self, x=None):
        x = self.chart.flat_points() if x is None else x
        return mx.max_norm(self(x, 1.0) - self(x, 0.0))

    def is_loop(self, tol=1e-10, x=None):
        return self.endpoint_gap(x) < tol

    def __repr__(self):
        return f"PathOfMaps({self.name or '?'}, U({self.dim}) on {self.chart.name})"


class TwoParamFamily:
    """A map ``(x, t, s) -> U(n)`` with first partials in x, t and s."""

    def __init__(self, chart, dim, value, partials, dt, ds, endpoint_fixed=False, name="", jet=None, breakpoints=()):
        self.chart = chart
        self.dim = int(dim)
        self._value = value
        self._partials = partials
        self._dt = dt
        self._ds = ds
        self._jet = jet
        self.breakpoints = tuple(breakpoints)
        self.endpoint_fixed = endpoint_fixed
        self.name = name

    def __call__(self, x, t, s):
        return self._value(np.asarray(x, dtype=float), t, s)

    def partials(self, x, t, s):
        return self._partials(np.asarray(x, dtype=float), t, s)

    def dt(self, x, t, s):
        return self._dt(np.asarray(x, dtype=float), t, s)

    def ds(self, x, t, s):
        return self._ds(np.asarray(x, dtype=float), t, s)

    def jet(self, x, t, s):
        """``(g, dg/dx, dg/dt, dg/ds)``."""
        if self._jet is not None:
            return self._jet(np.asarray(x, dtype=float), t, s)
        return self(x, t, s), self.partials(x, t, s), self.dt(x, t, s), self.ds(x, t, s)

    def path_at(self, s):
        """The path ``t -> g(., t, s)`` at fixed s."""
        return PathOfMaps(
            self.chart,
            self.dim,
            lambda x, t: self._value(x, t, s),
            lambda x, t: self._partials(x, t, s),
            lambda x, t: self._dt(x, t, s),
            breakpoints=self.breakpoints,
            name=f"{self.name}|s={s}",
            jet=lambda x, t: self.jet(x, t, s)[:3],
        )

    def endpoint_gap(self, x=None, samples=5):
        x = self.chart.flat_points() if x is None else x
        gap = 0.0
        for s in np.linspace(0.0, 1.0, samples):
            for t in (0.0, 1.0):
                gap = max(gap, mx.max_norm(self(x, t, s) - self(x, t, 0.0)))
        return gap


def maurer_cartan(g, x, check=True):
    """The pulled-back Maurer-Cartan form ``g^-1 dg`` at the points ``x``."""
    x = np.asarray(x, dtype=float)
    gx = g(x)
    if check and not mx.is_unitary(gx, UNITARY_TOL):
        raise ValueError(f"{g!r} is not unitary at the requested points")
    return MatrixForm.from_partials(mx.dagger(gx)[..., None, :, :] @ g.partials(x))


# ---------------------------------------------------------------------------
# scalar fields and analytic random unitaries


class TrigPoly:
    """``sum_j amp_j cos(freq_j . v + phase_j)`` on a variable vector ``v``."""

    def __init__(self, amps, freqs, phases):
        self.amps = np.asarray(amps, dtype=float)
        self.freqs = np.asarray(freqs, dtype=float)
        self.phases = np.asarray(phases, dtype=float)

    @classmethod
    def random(cls, rng, frequency_sets, n_terms=3, amp=1.0):
        """Random polynomial; ``frequency_sets[mu]`` lists allowed frequencies on variable mu
        (``None`` means an arbitrary real frequency)."""
        freqs = np.empty((n_terms, len(frequency_sets)))
        for mu, allowed in enumerate(frequency_sets):
            if allowed is None:
                freqs[:, mu] = rng.normal(0.0, 1.5, n_terms)
            else:
                freqs[:, mu] = rng.choice(allowed, n_terms)
        amps = amp * rng.uniform(-1.0, 1.0, n_terms)
        return cls(amps, freqs, rng.uniform(0.0, 2 * math.pi, n_terms))

    def __call__(self, v):
        return np.cos(v @ self.freqs.T + self.phases) @ self.amps

    def grad(self, v):
        s = -np.sin(v @ self.freqs.T + self.phases) * self.amps
        return s @ self.freqs


class ExpProduct:
    """``exp(i phi(v)) * prod_k exp(i theta_k(v) H_k)`` with hermitian constant ``H_k``."""

    def __init__(self, hermitians, angles, phase=None, winding=None):
        self.hermitians = [np.asarray(h, dtype=complex) for h in hermitians]
        self._eig = [np.linalg.eigh(h) for h in self.hermitians]
        self.angles = list(angles)
        self.phase = phase
        self.winding = None if winding is None else np.asarray(winding, dtype=float)
        self.dim = self.hermitians[0].shape[0] if self.hermitians else 1

    def _factor(self, k, theta):
        lam, vec = self._eig[k]
        diag = np.exp(1j * theta[..., None] * lam)
        return (vec * diag[..., None, :]) @ mx.dagger(vec)

    def _phase(self, v):
        phi = np.zeros(v.shape[:-1]) if self.phase is None else self.phase(v)
        grad = np.zeros(v.shape) if self.phase is None else self.phase.grad(v)
        if self.winding is not None:
            phi = phi + v @ self.winding
            grad = grad + self.winding
        return phi, grad

    def value(self, v):
        phi, _ = self._phase(v)
        out = np.exp(1j * phi)[..., None, None] * np.eye(self.dim)
        for k, ang in enumerate(self.angles):
            out = out @ self._factor(k, ang(v))
        return out

    def grad(self, v):
        """Partials along every variable, shape ``(..., D, n, n)``."""
        return self.value_and_grad(v)[1]

    def value_and_grad(self, v):
        phi, dphi = self._phase(v)
        factors = [self._factor(k, ang(v)) for k, ang in enumerate(self.angles)]
        dangles = [ang.grad(v) for ang in self.angles]
        batch = v.shape[:-1]
        prefix = [mx.identity(self.dim, batch)]
        for f in factors:
            prefix.append(prefix[-1] @ f)
        suffix = [mx.identity(self.dim, batch)]
        for f in reversed(factors):
            suffix.append(f @ suffix[-1])
        suffix.reverse()
        total = prefix[-1]
        eph = np.exp(1j * phi)[..., None, None]
        # d/dtheta_k of the product is prefix_k (i H_k) suffix_k
        inserted = [1j * prefix[k] @ self.hermitians[k] @ suffix[k] for k in range(len(factors))]
        out = []
        for mu in range(v.shape[-1]):
            d = 1j * dphi[..., mu][..., None, None] * total
            for k, ins in enumerate(inserted):
                d = d + dangles[k][..., mu][..., None, None] * ins
            out.append(eph * d)
        return eph * total, np.stack(out, axis=-3)


def _frequency_sets(chart, max_mode):
    sets = []
    for ax in chart.axes:
        if ax.periodic:
            base = 2 * math.pi / (ax.hi - ax.lo)
            sets.append(base * np.arange(-max_mode, max_mode + 1))
        else:
            sets.append(None)
    return sets


def _random_product(chart, rng, dim, n_factors, max_mode, amp, extra_vars, winding):
    sets = _frequency_sets(chart, max_mode) + [None] * extra_vars
    herms = [mx.random_hermitian(dim, rng) for _ in range(n_factors)]
    herms = [h / np.linalg.norm(h, 2) for h in herms]
    angles = [TrigPoly.random(rng, sets, amp=amp) for _ in range(n_factors)]
    phase = TrigPoly.random(rng, sets, amp=amp)
    w = None
    if winding is not None:
        w = np.zeros(chart.dim + extra_vars)
        for mu, k in enumerate(winding):
            ax = chart.axes[mu]
            w[mu] = 2 * math.pi * k / (ax.hi - ax.lo)
    return ExpProduct(herms, angles, phase, w)


def random_analytic_map(chart, seed=42, dim=2, n_factors=3, max_mode=1, amp=1.0, winding=None):
    """Random smooth U(dim)-valued map, periodic along periodic axes, with analytic partials.

    ``winding`` optionally adds ``exp(2 pi i k_mu x_mu / L_mu)`` phase windings.
    """
    rng = np.random.default_rng(seed)
    prod = _random_product(chart, rng, dim, n_factors, max_mode, amp, 0, winding)
    return UnitaryMap(chart, dim, prod.value, prod.grad, name=f"random:{seed}")


def random_analytic_path(chart, seed=42, dim=2, n_factors=3, max_mode=1, amp=1.0):
    """Random smooth path of U(dim)-valued maps with analytic x- and t-derivatives."""
    rng = np.random.default_rng(seed)
    prod = _random_product(chart, rng, dim, n_factors, max_mode, amp, 1, None)
    d = chart.dim

    def join(x, t):
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.concatenate([x, t[..., None]], axis=-1)

    def value(x, t):
        return prod.value(join(x, t))

    def partials(x, t):
        return prod.grad(join(x, t))[..., :d, :, :]

    def dt(x, t):
        return prod.grad(join(x, t))[..., d, :, :]

    def jet(x, t):
        val, grad = prod.value_and_grad(join(x, t))
        return val, grad[..., :d, :, :], grad[..., d, :, :]

    return PathOfMaps(chart, dim, value, partials, dt, name=f"random_path:{seed}", jet=jet)


# ---------------------------------------------------------------------------
# elementary constructors


def constant_map(chart, m, name="constant"):
    m = mx.as_matrix(m)
    n = m.shape[-1]
    return UnitaryMap(
        chart,
        n,
        lambda x: np.broadcast_to(m, _batch(x) + (n, n)).copy(),
        lambda x: np.zeros(_batch(x) + (chart.dim, n, n), dtype=complex),
        name=name,
    )


def identity_map(chart, n=1):
    return constant_map(chart, np.eye(n, dtype=complex), name=f"identity:{n}")


def constant_path(g):
    """The path that stays at ``g`` for all t."""
    n = g.dim
    return PathOfMaps(
        g.chart,
        n,
        lambda x, t: g(x),
        lambda x, t: g.partials(x),
        lambda x, t: np.zeros(_batch(x) + (n, n), dtype=complex),
        name=f"const({g.name})",
        jet=lambda x, t: (g(x), g.partials(x), np.zeros(_batch(x) + (n, n), dtype=complex)),
    )


def expression_field(expr, chart):
    """Parse ``expr`` in the chart's coordinate names; return (f, grad) numpy callables."""
    syms = sympy.symbols(chart.coord_names) if chart.dim else ()
    if chart.dim == 1:
        syms = (syms,) if not isinstance(syms, tuple) else syms
    local = {name: s for name, s in zip(chart.coord_names, syms)}
    try:
        e = sympy.sympify(expr, locals=local)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse expression {expr!r}: {exc}") from None
    unknown = {str(s) for s in e.free_symbols} - set(chart.coord_names)
    if unknown:
        raise ValueError(f"expression {expr!r} uses unknown symbols {sorted(unknown)}; chart has {chart.coord_names}")
    f = sympy.lambdify(syms, e, "numpy")
    dfs = [sympy.lambdify(syms, sympy.diff(e, s), "numpy") for s in syms]

    def value(x):
        return np.broadcast_to(np.asarray(f(*np.moveaxis(x, -1, 0)), dtype=float), x.shape[:-1])

    def grad(x):
        cols = np.moveaxis(x, -1, 0)
        return np.stack([np.broadcast_to(np.asarray(df(*cols), dtype=float), x.shape[:-1]) for df in dfs], axis=-1)

    return value, grad


def exp_scalar_map(f, chart, grad=None):
    """``g = exp(2 pi i f)`` as a 1x1 map.

    ``f`` is a callable on coordinates or an expression string in the chart's
    coordinate names (then differentiated symbolically).  Without ``grad``
    a callable ``f`` gets finite-difference partials.
    """
    name = f"exp_scalar:{f}" if isinstance(f, str) else "exp_scalar"
    if isinstance(f, str):
        f, grad = expression_field(f, chart)

    def value(x):
        return np.exp(2j * np.pi * np.asarray(f(x), dtype=float))[..., None, None]

    partials = None
    if grad is not None:

        def partials(x):
            g = value(x)
            return 2j * np.pi * np.asarray(grad(x), dtype=float)[..., :, None, None] * g[..., None, :, :]

    return UnitaryMap(chart, 1, value, partials, name=name)


def inverse_map(g):
    """Pointwise inverse; ``d(g^-1) = -g^-1 dg g^-1``."""

    def value(x):
        return mx.dagger(g(x))

    def partials(x):
        gi = mx.dagger(g(x))[..., None, :, :]
        return -gi @ g.partials(x) @ gi

    return UnitaryMap(g.chart, g.dim, value, partials, name=f"inv({g.name})")


def _common_dim(*dims):
    return max(dims)


def _stab(m, n):
    k = m.shape[-1]
    if k == n:
        return m
    batch = m.shape[:-2]
    out = mx.identity(n, batch)
    out[..., :k, :k] = m
    return out


def _stab_derivative(dm, n):
    k = dm.shape[-1]
    if k == n:
        return dm
    out = np.zeros(dm.shape[:-2] + (n, n), dtype=complex)
    out[..., :k, :k] = dm
    return out


def stabilize_map(g, n):
    """``g`` block-summed with an identity to size n."""
    if g.dim == n:
        return g
    return UnitaryMap(
        g.chart, n, lambda x: _stab(g(x), n), lambda x: _stab_derivative(g.partials(x), n), name=f"{g.name}+1"
    )


def stabilize_path(p, n):
    if p.dim == n:
        return p
    return PathOfMaps(
        p.chart,
        n,
        lambda x, t: _stab(p(x, t), n),
        lambda x, t: _stab_derivative(p.partials(x, t), n),
        lambda x, t: _stab_derivative(p.dt(x, t), n),
        p.breakpoints,
        name=f"{p.name}+1",
        jet=lambda x, t: _stab_jet(p.jet(x, t), n),
    )


def _stab_jet(jet, n):
    g, dg, gt = jet
    return _stab(g, n), _stab_derivative(dg, n), _stab_derivative(gt, n)


def _check_charts(*objs):
    first = objs[0].chart
    for o in objs[1:]:
        if o.chart is not first and (o.chart.kind != first.kind or o.chart.shape != first.shape):
            raise ValueError("maps live on different charts")


def block_sum_map(g, h):
    _check_charts(g, h)
    return UnitaryMap(
        g.chart,
        g.dim + h.dim,
        lambda x: mx.block_sum(g(x), h(x)),
        lambda x: mx.block_sum(g.partials(x), h.partials(x)),
        name=f"({g.name}+{h.name})",
    )


def block_sum_path(a, b):
    _check_charts(a, b)
    return PathOfMaps(
        a.chart,
        a.dim + b.dim,
        lambda x, t: mx.block_sum(a(x, t), b(x, t)),
        lambda x, t: mx.block_sum(a.partials(x, t), b.partials(x, t)),
        lambda x, t: mx.block_sum(a.dt(x, t), b.dt(x, t)),
        tuple(sorted(set(a.breakpoints) | set(b.breakpoints))),
        name=f"({a.name}+{b.name})",
        jet=lambda x, t: tuple(mx.block_sum(u, v) for u, v in zip(a.jet(x, t), b.jet(x, t))),
    )


def inverse_path(a):
    def value(x, t):
        return mx.dagger(a(x, t))

    def partials(x, t):
        gi = mx.dagger(a(x, t))[..., None, :, :]
        return -gi @ a.partials(x, t) @ gi

    def dt(x, t):
        gi = mx.dagger(a(x, t))
        return -gi @ a.dt(x, t) @ gi

    def jet(x, t):
        g, dg, gt = a.jet(x, t)
        gi = mx.dagger(g)
        return gi, -gi[..., None, :, :] @ dg @ gi[..., None, :, :], -gi @ gt @ gi

    return PathOfMaps(a.chart, a.dim, value, partials, dt, a.breakpoints, name=f"inv({a.name})", jet=jet)


def product_map(g, h):
    """Pointwise matrix product (after stabilizing to a common size)."""
    n = _common_dim(g.dim, h.dim)
    g, h = stabilize_map(g, n), stabilize_map(h, n)
    return UnitaryMap(
        g.chart,
        n,
        lambda x: g(x) @ h(x),
        lambda x: g.partials(x) @ h(x)[..., None, :, :] + g(x)[..., None, :, :] @ h.partials(x),
        name=f"{g.name}*{h.name}",
    )


def anchored_path(g, c):
    """``t -> g(x) c(x, t) c(x, 0)^-1``, a path starting at ``g``."""
    _check_charts(g, c)
    n = _common_dim(g.dim, c.dim)
    g, c = stabilize_map(g, n), stabilize_path(c, n)
    x_all = g.chart.flat_points()
    cache = {"x": x_all, "base": c.jet(x_all, 0.0)[:2] + (g(x_all), g.partials(x_all))}

    def base(x):
        if x.shape == cache["x"].shape and np.array_equal(x, cache["x"]):
            return cache["base"]
        return c.jet(x, 0.0)[:2] + (g(x), g.partials(x))

    def jet(x, t):
        c0, dc0, gx, dg = base(x)
        inv = mx.dagger(c0)
        ct, dct, ctt = c.jet(x, t)
        right = ct @ inv
        d_inv = -(inv[..., None, :, :] @ dc0 @ inv[..., None, :, :])
        partials = (
            dg @ right[..., None, :, :]
            + gx[..., None, :, :] @ dct @ inv[..., None, :, :]
            + (gx @ ct)[..., None, :, :] @ d_inv
        )
        return gx @ right, partials, gx @ ctt @ inv

    return PathOfMaps(
        g.chart,
        n,
        lambda x, t: jet(x, t)[0],
        lambda x, t: jet(x, t)[1],
        lambda x, t: jet(x, t)[2],
        c.breakpoints,
        name=f"{g.name}.{c.name}",
        jet=jet,
    )


# ---------------------------------------------------------------------------
# the explicit constructions


def clifford_sphere_map(n=1, chart=None):
    """Clifford map ``S^(2n+1) -> U(2^(n+1))``.

    ``E(x) = gamma_m (sum_i gamma_i x_i)`` with m = 2n+2 preserves the two
    eigenspaces of the chirality operator, and its restrictions to them
    have opposite degrees, so ``Ch(E)`` has vanishing top-degree part.  The
    map returned is ``E`` on the +1 eigenspace and the identity on the
    other: ``g = Pi_+ E + Pi_-``.  It is unitary, has the same size, and its
    top Chern form is a nonzero constant multiple of the volume form.
    """
    if n not in (0, 1):
        raise ValueError(f"Clifford sphere maps are provided for n in {{0, 1}}, got {n}")
    if chart is None:
        chart = sphere1() if n == 0 else sphere3_hopf()
    m = 2 * n + 2
    if chart.embedding is None or chart.dim != 2 * n + 1:
        raise ValueError(f"chart {chart.name} is not an embedded {2 * n + 1}-sphere")
    gens = mx.clifford_generators(m)
    size = gens[0].shape[0]
    chi = mx.chirality(gens)
    plus = (np.eye(size) + chi) / 2
    minus = (np.eye(size) - chi) / 2
    blocks = np.stack([plus @ gens[-1] @ g for g in gens])

    def value(x):
        return np.einsum("...i,ijk->...jk", chart.embedding(x), blocks) + minus

    def partials(x):
        return np.einsum("...mi,ijk->...mjk", chart.embedding_partials(x), blocks)

    return UnitaryMap(chart, size, value, partials, name=f"clifford:{n}")


def clifford_sphere_map_unprojected(n=1, chart=None):
    """``gamma_m sum_i gamma_i x_i`` on the full spinor space (top Chern form vanishes)."""
    if chart is None:
        chart = sphere1() if n == 0 else sphere3_hopf()
    gens = mx.clifford_generators(2 * n + 2)
    blocks = np.stack([gens[-1] @ g for g in gens])
    return UnitaryMap(
        chart,
        blocks.shape[-1],
        lambda x: np.einsum("...i,ijk->...jk", chart.embedding(x), blocks),
        lambda x: np.einsum("...mi,ijk->...mjk", chart.embedding_partials(x), blocks),
        name=f"clifford_full:{n}",
    )


BOTT_SIGN = 1


def bott_projection(chart=None, sign=BOTT_SIGN):
    """Rank-one projection ``(Id + sign * x.sigma) / 2`` on the embedded 2-sphere.

    With the default sign and the (theta, phi) orientation of ``sphere2``
    the image bundle has first Chern number +1.
    """
    chart = sphere2() if chart is None else chart
    if chart.embedding is None or chart.dim != 2:
        raise ValueError("the Bott projection needs an embedded 2-sphere chart")
    sig = np.stack(mx.PAULI)

    def value(x):
        return 0.5 * (np.eye(2) + sign * np.einsum("...k,kij->...ij", chart.embedding(x), sig))

    def partials(x):
        return 0.5 * sign * np.einsum("...mk,kij->...mij", chart.embedding_partials(x), sig)

    return ProjectionMap(chart, 2, value, partials, name="bott")


def constant_projection(chart, p):
    p = mx.as_matrix(p)
    if not mx.is_projection(p):
        raise ValueError("not a projection")
    n = p.shape[-1]
    return ProjectionMap(
        chart,
        n,
        lambda x: np.broadcast_to(p, _batch(x) + (n, n)).copy(),
        lambda x: np.zeros(_batch(x) + (chart.dim, n, n), dtype=complex),
        name="constant_projection",
    )


def projection_loop(p, s_cut=1.0):
    """``t -> exp(2 pi i s_cut t P)``, the projection loop run up to ``s_cut``."""
    if not 0.0 < s_cut <= 1.0:
        raise ValueError(f"s_cut must lie in (0, 1], got {s_cut}")
    n = p.dim

    def value(x, t):
        return mx.projection_exponential(p(x), s_cut * np.asarray(t, dtype=float), check=False)

    def partials(x, t):
        phase = np.exp(2j * np.pi * s_cut * np.asarray(t, dtype=float)) - 1.0
        return np.asarray(phase)[..., None, None, None] * p.partials(x)

    def dt(x, t):
        pv = p(x)
        return 2j * np.pi * s_cut * pv @ mx.projection_exponential(pv, s_cut * np.asarray(t, dtype=float), check=False)

    label = "" if s_cut == 1.0 else f",s={s_cut}"
    return PathOfMaps(p.chart, n, value, partials, dt, name=f"projection_loop:{p.name}{label}")


def exp_loop(chart, k=1):
    """The 1x1 loop ``exp(2 pi i k t)``, constant over the chart."""

    def value(x, t):
        ph = np.exp(2j * np.pi * k * np.asarray(t, dtype=float))
        return np.broadcast_to(np.asarray(ph)[..., None, None], _batch(x) + (1, 1)).astype(complex)

    def partials(x, t):
        return np.zeros(_batch(x) + (chart.dim, 1, 1), dtype=complex)

    def dt(x, t):
        return 2j * np.pi * k * value(x, t)

    return PathOfMaps(chart, 1, value, partials, dt, name=f"exp_loop:k={k}")


class _ExpPath:
    """``Q_t = exp(i t H)`` for a constant hermitian H."""

    def __init__(self, h):
        self.h = np.asarray(h, dtype=complex)
        self.lam, self.vec = np.linalg.eigh(self.h)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        diag = np.exp(1j * t[..., None] * self.lam)
        return (self.vec * diag[..., None, :]) @ mx.dagger(self.vec)

    def dt(self, t):
        return 1j * self.h @ self(t)


def conjugation_path(chart, a, h):
    """``Q_t A Q_t^-1`` with ``Q_t = exp(i t H)``: a path from A to its conjugate by ``exp(iH)``."""
    a = mx.as_matrix(a)
    q = _ExpPath(h)
    n = a.shape[-1]

    def value(x, t):
        qt = q(t)
        return np.broadcast_to(qt @ a @ mx.dagger(qt), _batch(x) + (n, n)).copy()

    def partials(x, t):
        return np.zeros(_batch(x) + (chart.dim, n, n), dtype=complex)

    def dt(x, t):
        qt, dq = q(t), q.dt(t)
        qi = mx.dagger(qt)
        d = dq @ a @ qi - qt @ a @ qi @ dq @ qi
        return np.broadcast_to(d, _batch(x) + (n, n)).copy()

    return PathOfMaps(chart, n, value, partials, dt, name="conjugation")


def conjugated_loop(chart, k, n=2, seed=42, scale=3.0):
    """``Q_t diag(exp(2 pi i k t), 1, ...) Q_t^-1`` with ``Q_t = exp(i t H)``, H random hermitian."""
    rng = np.random.default_rng(seed)
    q = _ExpPath(mx.random_hermitian(n, rng, scale))
    mask = np.zeros(n)
    mask[0] = 1.0

    def diag(t):
        t = np.asarray(t, dtype=float)
        ph = np.exp(2j * np.pi * k * t[..., None] * mask)
        return ph[..., :, None] * np.eye(n)

    def value(x, t):
        qt = q(t)
        return np.broadcast_to(qt @ diag(t) @ mx.dagger(qt), _batch(x) + (n, n)).copy()

    def partials(x, t):
        return np.zeros(_batch(x) + (chart.dim, n, n), dtype=complex)

    def dt(x, t):
        qt, dq, dg = q(t), q.dt(t), diag(t)
        qi = mx.dagger(qt)
        ddiag = 2j * np.pi * k * mask[:, None] * np.eye(n) @ dg
        d = dq @ dg @ qi + qt @ ddiag @ qi - qt @ dg @ qi @ dq @ qi
        return np.broadcast_to(d, _batch(x) + (n, n)).copy()

    return PathOfMaps(chart, n, value, partials, dt, name=f"conjugated_loop:k={k}")


def _rotation_sandwich(outer, inner, name):
    """``t -> G X(pi t / 2) H X(pi t / 2)^-1`` for maps G and H of even size 2n."""
    size = inner.dim
    half = size // 2
    jmat = mx.rotation_generator(half)

    def rot(t):
        c, s = mx.quarter_turn(t)
        return mx.rotation_from_cos_sin(c, s, half)

    def value(x, t):
        r = rot(t)
        mid = r @ inner(x) @ np.swapaxes(r, -1, -2)
        return mid if outer is None else outer(x) @ mid

    def partials(x, t):
        r = rot(t)
        rt = np.swapaxes(r, -1, -2)[..., None, :, :]
        r4 = r[..., None, :, :]
        d_mid = r4 @ inner.partials(x) @ rt
        if outer is None:
            return d_mid
        mid = (r @ inner(x) @ np.swapaxes(r, -1, -2))[..., None, :, :]
        return outer.partials(x) @ mid + outer(x)[..., None, :, :] @ d_mid

    def dt(x, t):
        r = rot(t)
        mid = r @ inner(x) @ np.swapaxes(r, -1, -2)
        d = 0.5 * np.pi * (jmat @ mid - mid @ jmat)
        return d if outer is None else outer(x) @ d

    return PathOfMaps(inner.chart, size, value, partials, dt, name=name)


def _pair_to_common(g, h):
    n = _common_dim(g.dim, h.dim)
    return stabilize_map(g, n), stabilize_map(h, n), n


def swap_path(g, h):
    """From ``g + h`` to ``h + g`` by conjugating with the block rotation; CS vanishes."""
    _check_charts(g, h)
    g, h, n = _pair_to_common(g, h)
    return _rotation_sandwich(None, block_sum_map(g, h), name=f"swap:{g.name},{h.name}")


def cancellation_path(g):
    """From ``g + g^-1`` to the identity; CS vanishes."""
    one = identity_map(g.chart, g.dim)
    outer = block_sum_map(g, one)
    inner = block_sum_map(one, inverse_map(g))
    return _rotation_sandwich(outer, inner, name=f"cancel:{g.name}")


def multiplication_path(g, h):
    """From ``g + h`` to ``gh + 1``."""
    _check_charts(g, h)
    g, h, n = _pair_to_common(g, h)
    one = identity_map(g.chart, n)
    return _rotation_sandwich(block_sum_map(g, one), block_sum_map(one, h), name=f"mult:{g.name},{h.name}")


def smoothstep(u):
    """Quintic clock with vanishing first and second derivatives at 0 and 1."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10 - 15 * u + 6 * u**2)


def smoothstep_rate(u):
    u = np.clip(u, 0.0, 1.0)
    return 30 * u**2 * (1 - u) ** 2


PLATEAU = (0.4, 0.6)


def compose_paths(a, b, tol=1e-10):
    """Concatenate ``a`` then ``b`` with a constant plateau between them.

    ``a`` runs on [0, 2/5] and ``b`` on [3/5, 1], each through the quintic
    clock, so the t-derivative vanishes on the plateau and at the joints.
    """
    _check_charts(a, b)
    n = _common_dim(a.dim, b.dim)
    a, b = stabilize_path(a, n), stabilize_path(b, n)
    gap = mx.max_norm(a(a.chart.flat_points(), 1.0) - b(b.chart.flat_points(), 0.0))
    if gap >= tol:
        raise ValueError(f"paths do not compose: end of first differs from start of second by {gap:.3e}")
    t0, t1 = PLATEAU
    width = t0

    def clocks(t):
        t = np.asarray(t, dtype=float)
        ua, ub = t / width, (t - t1) / (1 - t1)
        return ua, ub, t <= 0.5

    def pick(x, t, fa, fb):
        ua, ub, use_a = clocks(t)
        if np.ndim(use_a) == 0:
            return fa(x, ua) if use_a else fb(x, ub)
        va, vb = fa(x, ua), fb(x, ub)
        cond = use_a.reshape(use_a.shape + (1,) * (va.ndim - use_a.ndim))
        return np.where(cond, va, vb)

    def value(x, t):
        return pick(x, t, lambda y, u: a(y, smoothstep(u)), lambda y, u: b(y, smoothstep(u)))

    def partials(x, t):
        return pick(x, t, lambda y, u: a.partials(y, smoothstep(u)), lambda y, u: b.partials(y, smoothstep(u)))

    def dt(x, t):
        def da(y, u):
            return a.dt(y, smoothstep(u)) * _col(smoothstep_rate(u) / width)

        def db(y, u):
            return b.dt(y, smoothstep(u)) * _col(smoothstep_rate(u) / (1 - t1))

        return pick(x, t, da, db)

    def jet(x, t):
        ua, ub, use_a = clocks(t)
        if np.ndim(use_a) == 0:
            path, u, w = (a, ua, width) if use_a else (b, ub, 1 - t1)
            g, dg, gt = path.jet(x, smoothstep(u))
            return g, dg, gt * _col(smoothstep_rate(u) / w)
        return value(x, t), partials(x, t), dt(x, t)

    breaks = sorted({t0 * p for p in a.breakpoints} | {t1 + (1 - t1) * p for p in b.breakpoints} | {t0, t1})
    return PathOfMaps(a.chart, n, value, partials, dt, breaks, name=f"({a.name}*{b.name})", jet=jet)


def reparametrize(a, clock, rate):
    """``t -> a(clock(t))`` for an increasing clock with ``clock(0)=0``, ``clock(1)=1``."""
    return PathOfMaps(
        a.chart,
        a.dim,
        lambda x, t: a(x, clock(t)),
        lambda x, t: a.partials(x, clock(t)),
        lambda x, t: a.dt(x, clock(t)) * _col(rate(t)),
        name=f"{a.name}@clock",
        jet=lambda x, t: _rescale_jet(a.jet(x, clock(t)), rate(t)),
    )


def _rescale_jet(jet, rate):
    g, dg, gt = jet
    return g, dg, gt * _col(rate)


def reparametrization_family(path, bump=None, bump_grad=None, clocks=None):
    """Endpoint-fixed family ``g(x, t, s) = path(x, phi(x, t, s))``.

    Default clock: ``phi = t + s c(x) t (1 - t)`` with a spatial bump ``c``
    (``|c| < 1`` keeps phi increasing).  Alternatively ``clocks`` is a
    callable ``(x, t, s) -> (phi, dphi_dx, dphi_dt, dphi_ds)``.
    """
    chart = path.chart
    if clocks is None:
        if bump is None:
            raise ValueError("either a spatial bump or explicit clocks are required")

        def clocks(x, t, s):
            c = bump(x)
            dc = bump_grad(x)
            t = np.asarray(t, dtype=float)
            s = np.asarray(s, dtype=float)
            w = t * (1 - t)
            phi = t + s * c * w
            return phi, (s * w)[..., None] * dc, 1 + s * c * (1 - 2 * t), c * w

    def value(x, t, s):
        phi, *_ = clocks(x, t, s)
        return path(x, phi)

    def partials(x, t, s):
        phi, dphi_dx, _, _ = clocks(x, t, s)
        dphi_dx = np.broadcast_to(dphi_dx, _batch(x) + (chart.dim,))
        return path.partials(x, phi) + dphi_dx[..., :, None, None] * path.dt(x, phi)[..., None, :, :]

    def dt(x, t, s):
        phi, _, dphi_dt, _ = clocks(x, t, s)
        return path.dt(x, phi) * _col(dphi_dt)

    def ds(x, t, s):
        phi, _, _, dphi_ds = clocks(x, t, s)
        return path.dt(x, phi) * _col(dphi_ds)

    def jet(x, t, s):
        phi, dphi_dx, dphi_dt, dphi_ds = clocks(x, t, s)
        g, dg, gt = path.jet(x, phi)
        dphi_dx = np.broadcast_to(dphi_dx, _batch(x) + (chart.dim,))
        return g, dg + dphi_dx[..., :, None, None] * gt[..., None, :, :], gt * _col(dphi_dt), gt * _col(dphi_ds)

    return TwoParamFamily(
        chart, path.dim, value, partials, dt, ds, endpoint_fixed=True, name=f"reparam({path.name})", jet=jet
    )


def bending_homotopy(path, bend):
    """Endpoint-fixed family ``g(x, t, s) = path(x, t) b(x, s t (1 - t)) b(x, 0)^-1``.

    ``bend`` is any path b of the same size; the factor ``b(tau) b(0)^-1``
    is the identity whenever ``tau = 0``, so the ends t = 0, 1 stay put and
    s = 0 reproduces ``path``.
    """
    _check_charts(path, bend)
    if path.dim != bend.dim:
        raise ValueError("path and bend must have the same matrix size")
    chart = path.chart
    x_all = chart.flat_points()
    b0, db0, _ = bend.jet(x_all, 0.0)
    cache = {"x": x_all, "b0": b0, "db0": db0}

    def base(x):
        if x.shape == cache["x"].shape and np.array_equal(x, cache["x"]):
            return cache["b0"], cache["db0"]
        b, db, _ = bend.jet(x, 0.0)
        return b, db

    def jet(x, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        w, dw = t * (1 - t), 1 - 2 * t
        a, da, at = path.jet(x, t)
        b, db, bt = bend.jet(x, s * w)
        b0, db0 = base(x)
        c = mx.dagger(b0)
        bc = b @ c
        abc = a @ bc
        dc = -(c[..., None, :, :] @ db0 @ c[..., None, :, :])
        partials = (
            da @ bc[..., None, :, :]
            + a[..., None, :, :] @ db @ c[..., None, :, :]
            + (a @ b)[..., None, :, :] @ dc
        )
        abtc = a @ bt @ c
        return abc, partials, at @ bc + abtc * _col(s * dw), abtc * _col(w)

    return TwoParamFamily(
        chart,
        path.dim,
        lambda x, t, s: jet(x, t, s)[0],
        lambda x, t, s: jet(x, t, s)[1],
        lambda x, t, s: jet(x, t, s)[2],
        lambda x, t, s: jet(x, t, s)[3],
        endpoint_fixed=True,
        name=f"bend({path.name},{bend.name})",
        jet=jet,
        breakpoints=path.breakpoints,
    )


def check_chart(obj, chart: Chart):
    if obj.chart.kind != chart.kind or obj.chart.shape != chart.shape:
        raise ValueError(f"{obj!r} does not live on {chart.name}{chart.shape}")
