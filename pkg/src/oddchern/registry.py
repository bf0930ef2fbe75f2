"""Named maps, paths and projections for the command line.

A spec is ``name`` or ``name:args`` where ``args`` is a comma separated
list of positional values and ``key=value`` pairs.  Arguments that are
themselves specs (``swap:g,h``) may be wrapped in parentheses; commas
inside parentheses never split.
"""
from fractions import Fraction

from . import maps
from .exterior import get_chart


class SpecError(ValueError):
    """A registry spec that cannot be parsed or does not fit the chart."""


def split_args(text):
    """Split on top-level commas, keeping parenthesised groups intact."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise SpecError(f"unbalanced parentheses in {text!r}")
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise SpecError(f"unbalanced parentheses in {text!r}")
    if cur or parts:
        parts.append("".join(cur).strip())
    return parts


def _encloses(text):
    """True when ``text`` is one parenthesised group."""
    if not (text.startswith("(") and text.endswith(")")):
        return False
    depth = 0
    for i, ch in enumerate(text):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0:
            return i == len(text) - 1
    return False


def _unwrap(text):
    text = text.strip()
    while _encloses(text):
        text = text[1:-1].strip()
    return text


def parse(spec):
    """``"name:a,b,k=v"`` -> ``(name, [a, b], {k: v})``."""
    spec = _unwrap(spec)
    name, _, rest = spec.partition(":")
    name = name.strip()
    if not name:
        raise SpecError(f"empty spec {spec!r}")
    args, kwargs = [], {}
    for part in split_args(rest) if rest else []:
        key, eq, value = part.partition("=")
        if eq and key.strip().isidentifier() and "(" not in key:
            kwargs[key.strip()] = value.strip()
        else:
            args.append(part)
    return name, args, kwargs


def _int(value, what):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise SpecError(f"{what} must be an integer, got {value!r}") from None


def _float(value, what):
    try:
        return float(Fraction(value))
    except (TypeError, ValueError, ZeroDivisionError):
        raise SpecError(f"{what} must be a number, got {value!r}") from None


def _arity(name, args, lo, hi=None):
    hi = lo if hi is None else hi
    if not lo <= len(args) <= hi:
        want = str(lo) if lo == hi else f"{lo}-{hi}"
        raise SpecError(f"{name} takes {want} positional arguments, got {len(args)}")


MAP_NAMES = ("clifford", "exp_scalar", "identity", "random", "inverse", "sum", "product")
PATH_NAMES = (
    "projection_loop",
    "exp_loop",
    "conjugated_loop",
    "swap",
    "cancel",
    "mult",
    "random_path",
    "constant",
    "inverse",
    "compose",
)
PROJECTION_NAMES = ("bott",)

_DEFAULT_CHARTS = {
    "clifford": lambda args, kw: "sphere1" if (args and args[0].strip() == "0") else "sphere3",
    "exp_scalar": lambda args, kw: "interval",
    "projection_loop": lambda args, kw: "sphere2",
    "bott": lambda args, kw: "sphere2",
    "exp_loop": lambda args, kw: "point",
    "conjugated_loop": lambda args, kw: "point",
}


def default_chart(spec):
    """Chart a spec lives on when none is requested."""
    name, args, kw = parse(spec)
    if name in ("swap", "cancel", "mult", "inverse", "constant", "sum", "product", "compose") and args:
        return default_chart(args[0])
    rule = _DEFAULT_CHARTS.get(name)
    return rule(args, kw) if rule else "torus2"


def _check_kwargs(name, kwargs, allowed):
    extra = set(kwargs) - set(allowed)
    if extra:
        raise SpecError(f"{name} does not accept {sorted(extra)}")


def build_map(spec, chart, seed=42):
    name, args, kw = parse(spec)
    if name == "clifford":
        _arity(name, args, 1)
        _check_kwargs(name, kw, ())
        n = _int(args[0], "clifford degree")
        if n not in (0, 1):
            raise SpecError(f"clifford:n supports n in {{0, 1}}, got {n}")
        want = "sphere1" if n == 0 else "sphere3"
        if chart.kind != want:
            raise SpecError(f"clifford:{n} lives on {want}, not {chart.name}")
        return maps.clifford_sphere_map(n, chart)
    if name == "exp_scalar":
        if not args:
            raise SpecError("exp_scalar needs an expression, e.g. exp_scalar:sin(2*pi*x)")
        try:
            return maps.exp_scalar_map(",".join(args), chart)
        except ValueError as exc:
            raise SpecError(str(exc)) from None
    if name == "identity":
        _arity(name, args, 0, 1)
        return maps.identity_map(chart, _int(args[0], "size") if args else 1)
    if name == "random":
        _arity(name, args, 0, 1)
        _check_kwargs(name, kw, ("seed", "dim", "modes"))
        s = _int(args[0] if args else kw.get("seed", seed), "seed")
        dim = _int(kw.get("dim", 2), "dim")
        if dim < 1:
            raise SpecError("dim must be positive")
        return maps.random_analytic_map(chart, seed=s, dim=dim, max_mode=_int(kw.get("modes", 1), "modes"))
    if name == "inverse":
        _arity(name, args, 1)
        return maps.inverse_map(build_map(args[0], chart, seed))
    if name == "sum":
        _arity(name, args, 2)
        return maps.block_sum_map(build_map(args[0], chart, seed), build_map(args[1], chart, seed))
    if name == "product":
        _arity(name, args, 2)
        return maps.product_map(build_map(args[0], chart, seed), build_map(args[1], chart, seed))
    raise SpecError(f"unknown map {name!r}; known maps: {', '.join(MAP_NAMES)}")


def build_projection(spec, chart):
    name, args, kw = parse(spec)
    if name == "bott":
        _check_kwargs(name, kw, ("sign",))
        if chart.kind != "sphere2":
            raise SpecError(f"the Bott projection lives on sphere2, not {chart.name}")
        sign = _int(kw.get("sign", maps.BOTT_SIGN), "sign")
        if sign not in (1, -1):
            raise SpecError("sign must be +1 or -1")
        return maps.bott_projection(chart, sign)
    raise SpecError(f"unknown projection {name!r}; known projections: {', '.join(PROJECTION_NAMES)}")


def build_path(spec, chart, seed=42):
    name, args, kw = parse(spec)
    if name == "projection_loop":
        _arity(name, args, 1)
        _check_kwargs(name, kw, ("s",))
        s = _float(kw.get("s", 1), "s")
        if not 0.0 < s <= 1.0:
            raise SpecError(f"s must lie in (0, 1], got {s}")
        return maps.projection_loop(build_projection(args[0], chart), s)
    if name == "exp_loop":
        _arity(name, args, 0, 1)
        _check_kwargs(name, kw, ("k",))
        return maps.exp_loop(chart, _int(args[0] if args else kw.get("k", 1), "k"))
    if name == "conjugated_loop":
        _arity(name, args, 0, 1)
        _check_kwargs(name, kw, ("k", "n", "seed"))
        k = _int(args[0] if args else kw.get("k", 1), "k")
        return maps.conjugated_loop(chart, k, _int(kw.get("n", 2), "n"), _int(kw.get("seed", seed), "seed"))
    if name == "swap":
        _arity(name, args, 2)
        return maps.swap_path(build_map(args[0], chart, seed), build_map(args[1], chart, seed))
    if name == "cancel":
        _arity(name, args, 1)
        return maps.cancellation_path(build_map(args[0], chart, seed))
    if name == "mult":
        _arity(name, args, 2)
        return maps.multiplication_path(build_map(args[0], chart, seed), build_map(args[1], chart, seed))
    if name == "random_path":
        _arity(name, args, 0, 1)
        _check_kwargs(name, kw, ("seed", "dim"))
        s = _int(args[0] if args else kw.get("seed", seed), "seed")
        return maps.random_analytic_path(chart, seed=s, dim=_int(kw.get("dim", 2), "dim"))
    if name == "constant":
        _arity(name, args, 1)
        return maps.constant_path(build_map(args[0], chart, seed))
    if name == "inverse":
        _arity(name, args, 1)
        return maps.inverse_path(build_path(args[0], chart, seed))
    if name == "compose":
        _arity(name, args, 2)
        try:
            return maps.compose_paths(build_path(args[0], chart, seed), build_path(args[1], chart, seed))
        except ValueError as exc:
            raise SpecError(str(exc)) from None
    raise SpecError(f"unknown path {name!r}; known paths: {', '.join(PATH_NAMES)}")


def resolve_chart(name, spec, grid=None):
    """The requested chart, or the spec's default one, with optional grid override."""
    name = name or default_chart(spec)
    try:
        return get_chart(name, grid)
    except KeyError as exc:
        raise SpecError(exc.args[0]) from None
    except ValueError as exc:
        raise SpecError(str(exc)) from None
