"""Command line front end.

    oddchern verify SUITE [options]
    oddchern chern --map SPEC [--chart NAME] [--out FILE.csv]
    oddchern cs --path SPEC [--chart NAME] [--out FILE.csv]
    oddchern winding --path SPEC [--chart NAME]
    oddchern report [--out FILE.jsonl]

Exit status: 0 when every check passes, 1 on a numerical failure, 2 on a
usage or configuration error.
"""
import argparse
import json
import sys
import time

import numpy as np

from . import __version__, khat, registry
from .chern import QuadratureSpec, SeriesSpec, cs, odd_chern, winding
from .exterior import write_csv
from .suites import SUITES, SuiteConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "chart": None,
    "map": None,
    "path": None,
    "grid": None,
    "nodes": 64,
    "nmax": None,
    "tol": None,
    "seed": 42,
    "out": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_grid(text):
    try:
        sizes = tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise UsageError(f"--grid expects N or N,N,..., got {text!r}") from None
    if not sizes or any(n < 3 for n in sizes):
        raise UsageError(f"grid sizes must be at least 3, got {text!r}")
    return sizes


def _convert(key, value):
    if value is None:
        return None
    try:
        if key == "grid":
            return _parse_grid(value)
        if key in ("nodes", "nmax", "seed"):
            return int(value)
        if key == "tol":
            return float(value)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {value!r}") from None
    return str(value)


def read_config(path):
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not eq or key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: expected one of {sorted(DEFAULTS)} as key = value")
        values[key] = value.strip()
    return values


def effective_config(args):
    """flags > config file > defaults."""
    cfg = dict(DEFAULTS)
    if args.config:
        for k, v in read_config(args.config).items():
            cfg[k] = _convert(k, v)
    for k in DEFAULTS:
        flag = getattr(args, k, None)
        if flag is not None:
            cfg[k] = _convert(k, flag)
    if cfg["nodes"] < 2:
        raise UsageError("--nodes must be at least 2")
    if cfg["nmax"] is not None and cfg["nmax"] < 0:
        raise UsageError("--nmax must be nonnegative")
    if cfg["tol"] is not None and not cfg["tol"] > 0:
        raise UsageError("--tol must be positive")
    return cfg


def build_parser():
    parser = _Parser(prog="oddchern", description="Odd Chern character and Chern-Simons form checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--chart")
        p.add_argument("--map")
        p.add_argument("--path")
        p.add_argument("--grid")
        p.add_argument("--nodes")
        p.add_argument("--nmax")
        p.add_argument("--tol")
        p.add_argument("--seed")
        p.add_argument("--out")
        p.add_argument("--config")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help=", ".join(sorted(SUITES)))
    common(v)
    for name, text in (
        ("chern", "odd Chern character of a map"),
        ("cs", "Chern-Simons form of a path"),
        ("winding", "winding number of a loop"),
        ("report", "run every suite"),
    ):
        common(sub.add_parser(name, help=text))
    return parser


def _suite_config(cfg):
    return SuiteConfig(grid=cfg["grid"], nodes=cfg["nodes"], nmax=cfg["nmax"], tol=cfg["tol"], seed=cfg["seed"])


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(obj):
    return json.dumps(obj, default=_json_default, sort_keys=False)


def _header(command, cfg, extra=None):
    head = {"type": "header", "tool": "oddchern", "version": __version__, "command": command, "config": cfg}
    head["seed"] = cfg["seed"]
    head.update(extra or {})
    return head


def _emit(lines, out):
    text = "\n".join(_dumps(line) for line in lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _run_suites(names, cfg, command):
    records, failed = [], []
    sc = _suite_config(cfg)
    for name in names:
        start = time.perf_counter()
        results = run_suite(name, sc)
        elapsed = time.perf_counter() - start
        for r in results:
            rec = {"type": "check", "suite": name, **r.to_dict(), "seconds": round(elapsed, 3)}
            records.append(rec)
            if not r.passed:
                failed.append(r.check_id)
    records.sort(key=lambda r: r["check_id"])
    summary = {"type": "summary", "checks": len(records), "failed": failed, "status": "fail" if failed else "pass"}
    _emit([_header(command, cfg, {"suites": list(names)})] + records + [summary], cfg["out"])
    if failed:
        print(f"failing checks: {', '.join(failed)}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args, cfg):
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}")
    return _run_suites([args.suite], cfg, "verify")


def cmd_report(args, cfg):
    return _run_suites(sorted(SUITES), cfg, "report")


def _field_summary(field):
    try:
        per = khat.periods(field, khat.cycles_for(field.chart))
    except ValueError:
        per = {}
    return {
        "periods": {k: complex(v).real for k, v in per.items()},
        "max_imag": field.max_imag(),
        "degree_support": field.degrees(),
        "grid": list(field.chart.shape),
        "chart": field.chart.name,
    }


def _require(cfg, key, command):
    if not cfg[key]:
        raise UsageError(f"{command} needs --{key}")
    return cfg[key]


def cmd_chern(args, cfg):
    spec = _require(cfg, "map", "chern")
    chart = registry.resolve_chart(cfg["chart"], spec, cfg["grid"])
    g = registry.build_map(spec, chart, cfg["seed"])
    field = odd_chern(g, SeriesSpec(cfg["nmax"]))
    return _field_output("chern", spec, field, cfg)


def cmd_cs(args, cfg):
    spec = _require(cfg, "path", "cs")
    chart = registry.resolve_chart(cfg["chart"], spec, cfg["grid"])
    path = registry.build_path(spec, chart, cfg["seed"])
    field = cs(path, SeriesSpec(cfg["nmax"]), QuadratureSpec(cfg["nodes"]))
    return _field_output("cs", spec, field, cfg)


def _field_output(command, spec, field, cfg):
    if cfg["out"]:
        write_csv(field, cfg["out"])
    summary = {"type": "summary", "spec": spec, **_field_summary(field)}
    if cfg["out"]:
        summary["csv"] = cfg["out"]
    sys.stdout.write(_dumps(_header(command, cfg)) + "\n" + _dumps(summary) + "\n")
    return EXIT_OK


def cmd_winding(args, cfg):
    spec = _require(cfg, "path", "winding")
    chart = registry.resolve_chart(cfg["chart"], spec, cfg["grid"])
    path = registry.build_path(spec, chart, cfg["seed"])
    tol = 1e-10 if cfg["tol"] is None else cfg["tol"]
    try:
        w = winding(path, QuadratureSpec(cfg["nodes"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    value = np.atleast_1d(w.value)
    residual = float(np.max(w.residual))
    integers = np.unique(np.rint(value).astype(int)).tolist()
    summary = {
        "type": "summary",
        "spec": spec,
        "winding": integers[0] if len(integers) == 1 else integers,
        "value": float(value.flat[0]) if value.size == 1 else [float(value.min()), float(value.max())],
        "residual": residual,
        "tolerance": tol,
        "status": "pass" if residual < tol else "fail",
    }
    sys.stdout.write(_dumps(_header("winding", cfg)) + "\n" + _dumps(summary) + "\n")
    return EXIT_OK if residual < tol else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "chern": cmd_chern, "cs": cmd_cs, "winding": cmd_winding, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        cfg = effective_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, registry.SpecError) as exc:
        print(f"oddchern: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
