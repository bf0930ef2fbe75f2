"""Verification suites: each one checks a family of identities numerically.

A suite is a function ``SuiteConfig -> list[CheckResult]``.  Grids,
quadrature nodes, series caps, tolerances and random seeds come from the
config, so every report can be reproduced from its header.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import khat, maps
from . import matrix as mx
from .chern import (
    QuadratureSpec,
    SeriesSpec,
    cs,
    cs_integrand_traces,
    even_chern_of_projection,
    h_form,
    odd_chern,
    truncated_cs_check,
    truncated_loop_coefficient,
    winding,
)
from .exterior import (
    FormField,
    exterior_derivative,
    fiber_integrate_t,
    integrate_top,
    max_difference,
    point,
    sphere1,
    sphere2,
    sphere3_hopf,
    torus,
    torus2,
)

# observed order p from residuals at spacing h and h / r must satisfy
# 2**p in this window, i.e. the ratio on halving lies in [3.5, 4.5]
RATIO_WINDOW = (3.5, 4.5)
# residuals this small are rounding noise; refinement ratios are meaningless there
ROUNDOFF_FLOOR = 1e-11
# largest acceptable max-norm transgression residual on the coarse torus grid
STOKES_BUDGET = 1e-2


@dataclass
class SuiteConfig:
    grid: Optional[tuple] = None
    nodes: int = 64
    nmax: Optional[int] = None
    tol: Optional[float] = None
    seed: int = 42

    @property
    def series(self):
        return SeriesSpec(self.nmax)

    @property
    def quad(self):
        return QuadratureSpec(self.nodes)

    def tolerance(self, default):
        return default if self.tol is None else self.tol

    def base_grid(self, default):
        """First grid size of a suite, overridable by ``--grid``."""
        if self.grid is None:
            return default
        return self.grid[0] if len(self.grid) == 1 else tuple(self.grid)


@dataclass
class CheckResult:
    check_id: str
    lemma_ref: str
    status: str
    residuals: list = field(default_factory=list)
    grid: object = None
    tolerance: object = None
    note: str = ""

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return asdict(self)


def _num(v):
    if isinstance(v, complex):
        return abs(v) if abs(v.imag) > 0 else v.real
    return float(v)


def _check(check_id, ref, ok, residuals, grid, tol, note=""):
    res = [{"label": k, "value": _num(v)} for k, v in residuals.items()]
    return CheckResult(check_id, ref, "pass" if ok else "fail", res, grid, tol, note)


def refinement_order(coarse, fine, factor):
    """Observed convergence order from residuals at spacing h and h / factor."""
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return math.log(coarse / fine) / math.log(factor)


def second_order(coarse, fine, factor=2.0):
    """Whether two residuals show second-order decay (or both sit at rounding level).

    The accepted window for the order is the one that maps the halving
    ratio window [3.5, 4.5] to other refinement factors.
    """
    if max(coarse, fine) < ROUNDOFF_FLOOR:
        return True
    p = refinement_order(coarse, fine, factor)
    lo, hi = (math.log2(r) for r in RATIO_WINDOW)
    return lo <= p <= hi


def _grid_list(n):
    return list(n) if isinstance(n, tuple) else [n]


def _scaled(n, factor):
    if isinstance(n, tuple):
        return tuple(int(round(k * factor)) for k in n)
    return int(round(n * factor))


# ---------------------------------------------------------------------------
# suites


def quadrature_identities(cfg):
    quad = cfg.quad
    tol = cfg.tolerance(1e-12)
    out = []
    sin_res = {}
    for n in range(7):
        exact = math.comb(2 * n, n) / 4**n
        val = fiber_integrate_t(lambda t: math.sin(math.pi * t) ** (2 * n), quad)
        sin_res[f"n={n}"] = abs(val - exact) / exact
    out.append(_check("quadrature.sin_moments", "sine power moments", max(sin_res.values()) < tol, sin_res, cfg.nodes, tol))
    beta_res = {}
    for k in range(6):
        for l in range(6):
            exact = math.factorial(k) * math.factorial(l) / math.factorial(k + l + 1)
            val = fiber_integrate_t(lambda s: s**k * (1 - s) ** l, quad)
            beta_res[f"k={k},l={l}"] = abs(val - exact) / exact
    out.append(
        _check("quadrature.beta_moments", "beta integral moments", max(beta_res.values()) < tol, beta_res, cfg.nodes, tol)
    )
    return out


def stokes(cfg):
    """d CS(g_t) against Ch(g_1) - Ch(g_0) on the torus, at two grids."""
    n0 = cfg.base_grid(64)
    residuals = {}
    for n in (n0, _scaled(n0, 2)):
        chart = torus2(n)
        path = maps.random_analytic_path(chart, seed=cfg.seed)
        lhs = exterior_derivative(cs(path, cfg.series, cfg.quad))
        rhs = odd_chern(path.at(1.0), cfg.series) - odd_chern(path.at(0.0), cfg.series)
        residuals[f"grid={_grid_list(n)}"] = max_difference(lhs, rhs)
    coarse, fine = residuals.values()
    ratio = coarse / fine if fine else float("inf")
    residuals["ratio"] = ratio
    ok = RATIO_WINDOW[0] <= ratio <= RATIO_WINDOW[1]
    budget = cfg.tolerance(STOKES_BUDGET)
    return [
        _check("stokes.transgression_torus2", "transgression dCS = Ch(g1) - Ch(g0)", ok, residuals, _grid_list(n0), list(RATIO_WINDOW)),
        _check(
            "stokes.residual_budget",
            "transgression residual within the discretisation budget",
            coarse < budget,
            {f"grid={_grid_list(n0)}": coarse},
            _grid_list(n0),
            budget,
        ),
    ]


def _closedness(chart_a, chart_b, g_factory, factor, cfg):
    res = {}
    for chart in (chart_a, chart_b):
        res[f"grid={list(chart.shape)}"] = exterior_derivative(odd_chern(g_factory(chart), cfg.series)).max_abs()
    coarse, fine = res.values()
    res["order"] = refinement_order(coarse, fine, factor)
    return res, second_order(coarse, fine, factor)


def clifford_sphere(cfg):
    out = []
    n0 = cfg.base_grid(24)
    chart = sphere3_hopf(n0)
    g = maps.clifford_sphere_map(1, chart)
    ch = odd_chern(g, cfg.series)
    top = ch.component((0, 1, 2)).real
    jac = chart.jacobian_values()
    inner = jac > 1e-8 * jac.max()
    ratio = top[inner] / jac[inner]
    spread = float(np.ptp(ratio) / abs(ratio.mean()))
    tol_spread = cfg.tolerance(1e-6)
    out.append(
        _check(
            "clifford.volume_ratio_constant",
            "top Chern form of the Clifford map is a constant multiple of the volume form",
            spread < tol_spread,
            {"relative_spread": spread, "ratio": float(ratio.mean())},
            _grid_list(n0),
            tol_spread,
        )
    )
    period = integrate_top(ch).real
    sign = 1 if period > 0 else -1
    tol_p = cfg.tolerance(1e-3)
    out.append(
        _check(
            "clifford.period_sphere3",
            "Clifford map on S^3 has degree-3 period +-1",
            abs(abs(period) - 1) < tol_p,
            {"period": period, "deviation": abs(abs(period) - 1)},
            _grid_list(n0),
            tol_p,
            note=f"sign {sign:+d}",
        )
    )
    one_form = khat.periods(ch.degree_part(1))
    deg1 = ch.degree_part(1).max_abs()
    out.append(
        _check(
            "clifford.degree1_vanishes",
            "degree-1 part of the Clifford Chern form has zero periods",
            deg1 < tol_p,
            {"max_abs": deg1, **{k: v for k, v in one_form.items()}},
            _grid_list(n0),
            tol_p,
        )
    )
    c1 = sphere1()
    period1 = integrate_top(odd_chern(maps.clifford_sphere_map(0, c1), cfg.series)).real
    tol1 = cfg.tolerance(1e-6)
    out.append(
        _check(
            "clifford.period_sphere1",
            "Clifford map on S^1 has period +-1",
            abs(abs(period1) - 1) < tol1,
            {"period": period1},
            _grid_list(c1.shape[0]),
            tol1,
        )
    )
    coarse_n = _scaled(n0, 2 / 3)
    res, ok = _closedness(
        sphere3_hopf(coarse_n), sphere3_hopf(n0), lambda c: maps.clifford_sphere_map(1, c), n0 / coarse_n, cfg
    )
    out.append(
        _check(
            "clifford.closedness_sphere3",
            "d Ch(g) = 0 for the Clifford map",
            ok,
            res,
            [_grid_list(coarse_n), _grid_list(n0)],
            {"order_window": [math.log2(r) for r in RATIO_WINDOW], "roundoff_floor": ROUNDOFF_FLOOR},
        )
    )
    # mixed frequencies: with a single |frequency| per axis the central
    # differences of an analytic gradient commute exactly
    res, ok = _closedness(
        torus2(32), torus2(64), lambda c: maps.random_analytic_map(c, seed=cfg.seed, max_mode=2), 2.0, cfg
    )
    out.append(
        _check(
            "clifford.closedness_torus2_random",
            "d Ch(g) = 0 for a random map on the torus",
            ok,
            res,
            [[32, 32], [64, 64]],
            {"order_window": [math.log2(r) for r in RATIO_WINDOW], "roundoff_floor": ROUNDOFF_FLOOR},
        )
    )
    return out


def projection_cs(cfg):
    n0 = cfg.base_grid((64, 128))
    chart = sphere2(n0)
    bott = maps.bott_projection(chart)
    loop_cs = cs(maps.projection_loop(bott), cfg.series, cfg.quad)
    ch = even_chern_of_projection(bott, cfg.series)
    diff = max_difference(loop_cs, ch)
    tol = cfg.tolerance(1e-8)
    out = [
        _check(
            "projection_cs.pointwise",
            "CS of the projection loop equals the even Chern character",
            diff < tol,
            {"max_difference": diff},
            _grid_list(n0),
            tol,
        )
    ]
    period = integrate_top(loop_cs).real
    tol_p = cfg.tolerance(1e-5)
    out.append(
        _check(
            "projection_cs.period",
            "degree-2 period of CS(projection loop) is the first Chern number 1",
            abs(period - 1) < tol_p,
            {"period": period},
            _grid_list(n0),
            tol_p,
        )
    )
    witness = khat.cs_equivalent_witness(maps.projection_loop(bott), quad=cfg.quad, spec=cfg.series)
    out.append(
        _check(
            "projection_cs.not_exact",
            "the projection loop is not a witness of exactness",
            not witness,
            witness.residuals,
            _grid_list(n0),
            witness.tolerance,
        )
    )
    return out


SWAP_AMPLITUDE = 0.5


def _integrand_scale(path, x, t, n):
    """Size of ``|T| |A|^(2n)``: what the trace would be without cancellation."""
    g, dg, gt = path.jet(x, t)
    gi = mx.dagger(g)
    a = np.abs(gi[..., None, :, :] @ dg).max()
    return float(np.abs(gi @ gt).max() * max(a, 1.0) ** (2 * n))


def swap_cancel(cfg):
    """Pointwise vanishing of the CS integrand along the swap and cancellation paths."""
    rng = np.random.default_rng(cfg.seed)
    chart = torus(4, 3)
    x = rng.uniform(0.0, 1.0, size=(1000, 4))
    t = rng.uniform(0.0, 1.0, size=1000)
    tol = cfg.tolerance(1e-12)
    n_max = 2 if cfg.nmax is None else min(cfg.nmax, 2)
    out = []
    for amp, suffix in ((SWAP_AMPLITUDE, ""), (1.0, "_relative")):
        g = maps.random_analytic_map(chart, seed=cfg.seed, dim=2, amp=amp)
        h = maps.random_analytic_map(chart, seed=cfg.seed + 1, dim=2, amp=amp)
        for cid, ref, path in (
            ("swap_cancel.swap", "swap path has vanishing CS integrand", maps.swap_path(g, h)),
            ("swap_cancel.swap_equal", "swap path with g = h", maps.swap_path(g, g)),
            ("swap_cancel.cancel", "cancellation path has vanishing CS integrand", maps.cancellation_path(g)),
        ):
            traces = cs_integrand_traces(path, x, t, n_max)
            res = {f"n={n}": form.max_abs() for n, form in traces.items()}
            if suffix:
                res = {f"n={n}": v / _integrand_scale(path, x, t, n) for n, v in zip(traces, res.values())}
            out.append(
                _check(cid + suffix, ref, max(res.values()) < tol, res, "1000 random samples on a 4-torus", tol, f"amplitude {amp}")
            )
    g = maps.random_analytic_map(chart, seed=cfg.seed, dim=2)
    h = maps.random_analytic_map(chart, seed=cfg.seed + 1, dim=2)
    swap, cancel = maps.swap_path(g, h), maps.cancellation_path(g)
    exact = {
        "swap_start": mx.max_norm(swap(x, 0.0) - mx.block_sum(g(x), h(x))),
        "swap_end": mx.max_norm(swap(x, 1.0) - mx.block_sum(h(x), g(x))),
        "cancel_start": mx.max_norm(cancel(x, 0.0) - mx.block_sum(g(x), mx.dagger(g(x)))),
    }
    out.append(_check("swap_cancel.endpoints_exact", "swap endpoints and cancellation start", max(exact.values()) == 0.0, exact, "1000 samples", 0.0))
    # g g^-1 = 1 only up to rounding
    end = {"cancel_end": mx.max_norm(cancel(x, 1.0) - np.eye(4))}
    out.append(_check("swap_cancel.cancel_end", "cancellation path ends at the identity", end["cancel_end"] < 1e-14, end, "1000 samples", 1e-14))
    return out


def winding_suite(cfg):
    tol = cfg.tolerance(1e-10)
    pt = point()
    out = []
    for label, factory in (
        ("exp_loop", lambda k: maps.exp_loop(pt, k)),
        ("conjugated", lambda k: maps.conjugated_loop(pt, k, n=2, seed=cfg.seed)),
        ("conjugated_n3", lambda k: maps.conjugated_loop(pt, k, n=3, seed=cfg.seed + 1)),
    ):
        res = {}
        ok = True
        for k in range(-3, 4):
            w = winding(factory(k), cfg.quad)
            res[f"k={k}"] = abs(w.value - k)
            ok &= w.integer == k and w.residual < tol
        out.append(_check(f"winding.{label}", "winding numbers of unitary loops are integers", ok, res, "point", tol))
    return out


def chern_additivity(cfg):
    n0 = cfg.base_grid(64)
    chart = torus2(n0)
    tol = cfg.tolerance(1e-8)
    g = maps.random_analytic_map(chart, seed=cfg.seed, dim=2)
    h = maps.random_analytic_map(chart, seed=cfg.seed + 1, dim=3)
    a = maps.random_analytic_path(chart, seed=cfg.seed + 2, dim=2)
    b = maps.random_analytic_path(chart, seed=cfg.seed + 3, dim=2)
    sp, q = cfg.series, cfg.quad
    ch_g, ch_h = odd_chern(g, sp), odd_chern(h, sp)
    cs_a, cs_b = cs(a, sp, q), cs(b, sp, q)
    follow = maps.anchored_path(a.at(1.0), b)
    cs_follow = cs(follow, sp, q)
    checks = [
        ("additivity.chern_block_sum", "Ch(g+h) = Ch(g) + Ch(h)", max_difference(odd_chern(maps.block_sum_map(g, h), sp), ch_g + ch_h)),
        ("additivity.chern_inverse", "Ch(g^-1) = -Ch(g)", max_difference(odd_chern(maps.inverse_map(g), sp), -ch_g)),
        ("additivity.chern_g_plus_inverse", "Ch(g + g^-1) = 0", odd_chern(maps.block_sum_map(g, maps.inverse_map(g)), sp).max_abs()),
        ("additivity.cs_block_sum", "CS(a+b) = CS(a) + CS(b)", max_difference(cs(maps.block_sum_path(a, b), sp, q), cs_a + cs_b)),
        ("additivity.cs_inverse", "CS(a^-1) = -CS(a)", max_difference(cs(maps.inverse_path(a), sp, q), -cs_a)),
        (
            "additivity.cs_composition",
            "CS(a*b) = CS(a) + CS(b)",
            max_difference(cs(maps.compose_paths(a, follow), sp, q), cs_a + cs_follow),
        ),
        (
            "additivity.cs_reparametrization",
            "CS is unchanged by a monotone reparametrization",
            max_difference(cs(maps.reparametrize(a, lambda t: t**2, lambda t: 2 * np.asarray(t)), sp, q), cs_a),
        ),
        (
            "additivity.cs_compose_constant",
            "composing with a constant path leaves CS unchanged",
            max_difference(cs(maps.compose_paths(a, maps.constant_path(a.at(1.0))), sp, q), cs_a),
        ),
    ]
    return [_check(cid, ref, r < tol, {"max_difference": r}, _grid_list(n0), tol) for cid, ref, r in checks]


def truncated_loop(cfg):
    n0 = cfg.base_grid((64, 128))
    bott = maps.bott_projection(sphere2(n0))
    tol = cfg.tolerance(1e-8)
    out = []
    for label, s in (("1/3", 1 / 3), ("1/2", 0.5), ("1", 1.0)):
        rep = truncated_cs_check(bott, s, cfg.series, cfg.quad)
        res = {f"degree={k}": v for k, v in rep["differences"].items()}
        res.update({f"f_{k}": v for k, v in rep["coefficients"].items()})
        out.append(
            _check(
                f"truncated_loop.s={label}",
                "CS of the truncated projection loop is sum f_2n(s) Ch_2n",
                rep["max_difference"] < tol,
                res,
                _grid_list(n0),
                tol,
            )
        )
    closed = {
        "f0(1/2)-1/2": abs(truncated_loop_coefficient(0, 0.5, cfg.quad) - 0.5),
        "f2(1/3)-closed": abs(
            truncated_loop_coefficient(1, 1 / 3, cfg.quad) - (1 / 3 - math.sin(2 * math.pi / 3) / (2 * math.pi))
        ),
        **{f"f{2 * n}(1)-1": abs(truncated_loop_coefficient(n, 1.0, cfg.quad) - 1) for n in range(4)},
    }
    tol_c = cfg.tolerance(1e-12)
    out.append(_check("truncated_loop.coefficients", "f_2n closed forms", max(closed.values()) < tol_c, closed, None, tol_c))
    return out


def _torus_bump(x):
    return 0.5 * np.sin(2 * np.pi * x[..., 0]) * np.cos(2 * np.pi * x[..., 1])


def _torus_bump_grad(x):
    a, b = 2 * np.pi * x[..., 0], 2 * np.pi * x[..., 1]
    return np.stack([np.pi * np.cos(a) * np.cos(b), -np.pi * np.sin(a) * np.sin(b)], axis=-1)


H_NODES = 12


def h_form_suite(cfg):
    """dH = CS(g^1) - CS(g^0) for endpoint-fixed two-parameter families on the torus."""
    n0 = cfg.base_grid(48)
    quad = QuadratureSpec(min(cfg.nodes, H_NODES))
    sp = cfg.series
    res = {}
    for n in (n0, _scaled(n0, 2)):
        chart = torus2(n)
        fam = maps.bending_homotopy(
            maps.random_analytic_path(chart, seed=cfg.seed), maps.random_analytic_path(chart, seed=cfg.seed + 5)
        )
        dh = exterior_derivative(h_form(fam, sp, quad))
        rhs = cs(fam.path_at(1.0), sp, quad) - cs(fam.path_at(0.0), sp, quad)
        res[f"grid={_grid_list(n)}"] = max_difference(dh, rhs.degree_part(2))
        if n == n0:
            res["|CS(g^1) - CS(g^0)|"] = rhs.degree_part(2).max_abs()
    coarse, fine = res[f"grid={_grid_list(n0)}"], res[f"grid={_grid_list(_scaled(n0, 2))}"]
    ratio = coarse / fine if fine else float("inf")
    res["ratio"] = ratio
    out = [
        _check(
            "h_form.bending_homotopy",
            "dH = CS(g^1) - CS(g^0) for an endpoint-fixed homotopy",
            RATIO_WINDOW[0] <= ratio <= RATIO_WINDOW[1],
            res,
            [_grid_list(n0), _grid_list(_scaled(n0, 2))],
            list(RATIO_WINDOW),
            note=f"{quad.nodes} Gauss nodes in each of t and s",
        )
    ]
    chart = torus2(24)
    path = maps.random_analytic_path(chart, seed=cfg.seed)
    fam = maps.reparametrization_family(path, _torus_bump, _torus_bump_grad)
    h = h_form(fam, sp, quad)
    c1 = cs(fam.path_at(1.0), sp, quad)
    c0 = cs(fam.path_at(0.0), sp, quad)
    tol = cfg.tolerance(1e-10)
    rep = {"|H|": h.max_abs(), "|CS(g^1) - CS(g^0)|": max_difference(c1, c0)}
    out.append(
        _check(
            "h_form.reparametrization_family",
            "reparametrization families have H = 0 and equal CS forms",
            max(rep.values()) < tol,
            rep,
            [24, 24],
            tol,
        )
    )
    const = maps.bending_homotopy(path, maps.constant_path(maps.identity_map(chart, 2)))
    rep = {"|H|": h_form(const, sp, quad).max_abs()}
    out.append(_check("h_form.constant_in_s", "H vanishes for a family constant in s", rep["|H|"] < tol, rep, [24, 24], tol))
    return out


def point_det_suite(cfg):
    rng = np.random.default_rng(cfg.seed)
    pt = point()
    tol = cfg.tolerance(1e-10)
    out = []
    res = {}
    for trial in range(5):
        a = mx.random_unitary(3, rng)
        herm = mx.random_hermitian(3, rng, 2.0)
        path = maps.conjugation_path(pt, a, herm)
        res[f"conjugation#{trial}"] = abs(khat.point_cs(path, cfg.quad))
        g = maps.constant_map(pt, mx.random_unitary(2, rng))
        res[f"collapse#{trial}"] = abs(khat.point_cs(maps.cancellation_path(g), cfg.quad))
    out.append(_check("point.cs_vanishes", "conjugation and diagonal-collapse paths over a point have zero CS", max(res.values()) < tol, res, "point", tol))
    tol_det = cfg.tolerance(1e-12)
    res = {}
    for trial in range(10):
        a = khat.PointClass(mx.random_unitary(2, rng))
        b = khat.PointClass(mx.random_unitary(3, rng))
        res[f"seed_offset={trial}"] = abs(khat.point_det(a + b) - khat.point_det(a) * khat.point_det(b))
    out.append(_check("point.det_multiplicative", "det(A+B) = det(A) det(B)", max(res.values()) < tol_det, res, "point", tol_det))
    res = {}
    for trial in range(5):
        a = mx.random_unitary(3, rng)
        herm = mx.random_hermitian(3, rng, 2.0)
        path = maps.conjugation_path(pt, a, herm)
        x = pt.flat_points()
        end = khat.PointClass(path(x, 1.0)[0])
        res[f"conjugate#{trial}"] = abs(khat.point_det(end) - khat.point_det(khat.PointClass(a)))
    out.append(_check("point.det_conjugation_invariant", "det is constant along conjugation witnesses", max(res.values()) < tol_det, res, "point", tol_det))
    return out


def _torus_form(chart):
    """An even form on the torus and its exact exterior derivative."""
    pts = chart.points()
    x, y = pts[..., 0], pts[..., 1]
    f = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y) + 0.3 * np.cos(2 * np.pi * (x + y))
    fx = 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(4 * np.pi * y) - 0.6 * np.pi * np.sin(2 * np.pi * (x + y))
    fy = -4 * np.pi * np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y) - 0.6 * np.pi * np.sin(2 * np.pi * (x + y))
    top = np.cos(2 * np.pi * x) ** 2
    X = FormField(chart, {(): f, (0, 1): top}, real=True)
    dX = FormField(chart, {(0,): fx, (1,): fy}, real=True)
    return X, dX


def pair_model(cfg):
    out = []
    n0 = cfg.base_grid(32)
    res = {}
    for n in (n0, _scaled(n0, 2)):
        chart = torus2(n)
        X, dX = _torus_form(chart)
        res[f"grid={_grid_list(n)}"] = max_difference(khat.pair_S(khat.pair_b(X), cfg.series), dX)
    coarse, fine = list(res.values())
    ratio = coarse / fine
    res["ratio"] = ratio
    out.append(
        _check(
            "pair.S_of_b_is_d",
            "S(b(X)) = dX",
            RATIO_WINDOW[0] <= ratio <= RATIO_WINDOW[1],
            res,
            [_grid_list(n0), _grid_list(_scaled(n0, 2))],
            list(RATIO_WINDOW),
        )
    )
    chart = sphere2(cfg.base_grid((64, 128)) if cfg.grid else (64, 128))
    k = maps.projection_loop(maps.bott_projection(chart))
    g = maps.random_analytic_map(chart, seed=cfg.seed, dim=2)
    cs_k = cs(k, cfg.series, cfg.quad)
    a = khat.phi(g)
    b = khat.PairElement(maps.block_sum_map(g, k.at(1.0)), -cs_k)
    witness = maps.block_sum_path(maps.constant_path(g), maps.inverse_path(k))
    r = khat.pair_equivalent(a, b, witness, spec=cfg.series, quad=cfg.quad)
    out.append(_check("pair.loop_class_negative", "(g, 0) ~ (g + k_1, -CS(k))", bool(r), r.residuals, _grid_list(chart.shape), r.tolerance))
    b_pos = khat.PairElement(maps.block_sum_map(g, k.at(1.0)), cs_k)
    r = khat.pair_equivalent(a, b_pos, maps.block_sum_path(maps.constant_path(g), k), spec=cfg.series, quad=cfg.quad)
    out.append(_check("pair.loop_class_positive", "(g, 0) ~ (g + k_1, CS(k)) through g + k", bool(r), r.residuals, _grid_list(chart.shape), r.tolerance))
    one = maps.identity_map(chart, 1)
    r = khat.pair_equivalent(khat.phi(one), khat.phi(one), maps.constant_path(one), quad=cfg.quad)
    out.append(_check("pair.reflexive", "(1, 0) ~ (1, 0) through the constant path", bool(r), r.residuals, _grid_list(chart.shape), r.tolerance))
    r = khat.pair_equivalent(khat.phi(one), khat.pair_b(cs_k), k, spec=cfg.series, quad=cfg.quad)
    out.append(_check("pair.loop_witness", "(1, 0) ~ (1, CS(k)) through k", bool(r), r.residuals, _grid_list(chart.shape), r.tolerance))
    eps = chart.volume_form() * 0.1
    r = khat.pair_equivalent(khat.phi(one), khat.pair_b(eps), maps.constant_path(one), quad=cfg.quad)
    out.append(
        _check(
            "pair.area_form_not_equivalent",
            "(1, 0) and (1, 0.1 vol) are not related by the constant path",
            not r,
            r.residuals,
            _grid_list(chart.shape),
            r.tolerance,
        )
    )
    return out


def exact_surjectivity(cfg):
    n0 = cfg.base_grid(64)
    chart = torus2(n0)
    g = maps.exp_scalar_map("sin(2*pi*x)*cos(2*pi*y)", chart)
    ch = odd_chern(g, cfg.series)
    pts = chart.points()
    x, y = pts[..., 0], pts[..., 1]
    df = FormField(
        chart,
        {
            (0,): 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y),
            (1,): -2 * np.pi * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y),
        },
    )
    err = max_difference(ch, df)
    tol = cfg.tolerance(1e-8)
    return [_check("exact.ch_of_exp_is_df", "Ch(exp(2 pi i f)) = df", err < tol, {"max_difference": err}, _grid_list(n0), tol)]


SUITES = {
    "quadrature-identities": quadrature_identities,
    "stokes": stokes,
    "clifford-sphere": clifford_sphere,
    "projection-cs": projection_cs,
    "swap-cancel": swap_cancel,
    "winding": winding_suite,
    "chern-additivity": chern_additivity,
    "truncated-loop": truncated_loop,
    "h-form": h_form_suite,
    "point-det": point_det_suite,
    "pair-model": pair_model,
    "exact-surjectivity": exact_surjectivity,
}


def run_suite(name, cfg=None):
    """Run one suite; results are sorted by check id."""
    cfg = cfg or SuiteConfig()
    try:
        suite = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return sorted(suite(cfg), key=lambda r: r.check_id)
