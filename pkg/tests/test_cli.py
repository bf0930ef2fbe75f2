import json
import subprocess
import sys

import pytest

from oddchern import cli, registry
from oddchern import exterior as ex


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    records = [json.loads(line) for line in out.splitlines() if line.strip()]
    return code, records, err


def test_verify_quadrature_passes(capsys):
    code, recs, _ = run(capsys, "verify", "quadrature-identities")
    assert code == 0
    head, *checks, summary = recs
    assert head["type"] == "header" and head["seed"] == 42 and head["config"]["nodes"] == 64
    assert [c["check_id"] for c in checks] == sorted(c["check_id"] for c in checks)
    for c in checks:
        assert {"check_id", "lemma_ref", "status", "residuals", "grid", "tolerance"} <= set(c)
        assert c["status"] == "pass"
    assert summary == {"type": "summary", "checks": len(checks), "failed": [], "status": "pass"}


def test_verify_swap_cancel_passes(capsys):
    code, recs, _ = run(capsys, "verify", "swap-cancel")
    assert code == 0 and recs[-1]["status"] == "pass"


def test_verify_stokes_coarse_grid_fails(capsys):
    code, recs, err = run(capsys, "verify", "stokes", "--grid", "8")
    assert code == 1
    failed = recs[-1]["failed"]
    assert "stokes.residual_budget" in failed
    assert "stokes.residual_budget" in err


def test_unknown_suite_is_usage_error(capsys):
    code, recs, err = run(capsys, "verify", "nope")
    assert code == 2 and not recs and "unknown suite" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["chern", "--map", "nosuch"],
        ["chern"],
        ["cs", "--path", "swap:(random,random"],
        ["chern", "--map", "clifford:1", "--chart", "torus2"],
        ["chern", "--map", "random", "--chart", "klein"],
        ["verify", "stokes", "--grid", "2"],
        ["verify", "stokes", "--nodes", "x"],
        ["verify", "stokes", "--tol", "-1"],
        ["winding", "--path", "projection_loop:bott,s=1/2"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_chern_clifford_sphere3(capsys):
    code, recs, _ = run(capsys, "chern", "--map", "clifford:1", "--chart", "sphere3")
    assert code == 0
    summary = recs[-1]
    assert abs(abs(summary["periods"]["fundamental"]) - 1) < 1e-3
    assert summary["degree_support"] == [1, 3] or summary["degree_support"] == [3]
    assert summary["max_imag"] < 1e-9


def test_cs_projection_loop_writes_csv(capsys, tmp_path):
    out = tmp_path / "cs.csv"
    code, recs, _ = run(capsys, "cs", "--path", "projection_loop:bott", "--chart", "sphere2", "--out", str(out))
    assert code == 0
    summary = recs[-1]
    assert abs(summary["periods"]["fundamental"] - 1) < 1e-5
    assert summary["csv"] == str(out)
    field = ex.read_csv(out, ex.sphere2())
    assert field.degrees() == [0, 2]


def test_winding_exp_loop(capsys):
    code, recs, _ = run(capsys, "winding", "--path", "exp_loop:k=2")
    assert code == 0
    s = recs[-1]
    assert s["winding"] == 2 and s["residual"] < 1e-10 and s["status"] == "pass"


def test_winding_conjugated(capsys):
    code, recs, _ = run(capsys, "winding", "--path", "conjugated_loop:k=-3,n=3")
    assert code == 0 and recs[-1]["winding"] == -3


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nnodes = 16\nseed = 7\n")
    code, recs, _ = run(capsys, "verify", "quadrature-identities", "--config", str(cfg), "--seed", "9")
    head = recs[0]
    assert head["config"]["nodes"] == 16 and head["seed"] == 9


def test_bad_config_file(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(capsys, "verify", "quadrature-identities", "--config", str(cfg))
    assert code == 2 and "bad.cfg:1" in err
    code, _, _ = run(capsys, "verify", "quadrature-identities", "--config", str(tmp_path / "missing"))
    assert code == 2


def test_report_out_file_matches_stdout(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "SUITES", {"quadrature-identities": cli.SUITES["quadrature-identities"]})
    out = tmp_path / "r.jsonl"
    code, recs, _ = run(capsys, "report", "--out", str(out))
    assert code == 0
    assert [json.loads(line) for line in out.read_text().splitlines()] == recs


def test_reports_are_deterministic(capsys):
    a = run(capsys, "verify", "point-det")[1]
    b = run(capsys, "verify", "point-det")[1]
    strip = lambda rs: [{k: v for k, v in r.items() if k != "seconds"} for r in rs]  # noqa: E731
    assert strip(a) == strip(b)


def test_version_and_entry_point():
    proc = subprocess.run([sys.executable, "-m", "oddchern.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "oddchern" in proc.stdout


# --- registry ---


def test_parse_specs():
    assert registry.parse("exp_loop:k=2") == ("exp_loop", [], {"k": "2"})
    assert registry.parse("swap:(random:1),(random:2)") == ("swap", ["(random:1)", "(random:2)"], {})
    assert registry.parse("(clifford:1)") == ("clifford", ["1"], {})
    assert registry.split_args("a,(b,c),d") == ["a", "(b,c)", "d"]
    with pytest.raises(registry.SpecError):
        registry.split_args("a,(b")
    with pytest.raises(registry.SpecError):
        registry.parse(":x")


def test_default_charts():
    assert registry.default_chart("clifford:0") == "sphere1"
    assert registry.default_chart("clifford:1") == "sphere3"
    assert registry.default_chart("projection_loop:bott") == "sphere2"
    assert registry.default_chart("exp_loop:k=1") == "point"
    assert registry.default_chart("swap:random,random") == "torus2"
    assert registry.default_chart("inverse:clifford:0") == "sphere1"


def test_build_nested_specs():
    chart = ex.torus2(8)
    p = registry.build_path("compose:(constant:(random:1)),(constant:(random:1))", chart)
    assert p.dim == 2
    with pytest.raises(registry.SpecError):
        registry.build_path("compose:(random_path:1),(random_path:2)", chart)
    g = registry.build_map("sum:(random:dim=3),identity:2", chart)
    assert g.dim == 5
    assert registry.build_map("product:random,(inverse:random)", chart).dim == 2


@pytest.mark.parametrize(
    "spec",
    ["clifford:2", "random:1,2", "random:dim=0", "exp_scalar", "exp_scalar:q*x", "random:colour=1", "clifford:one"],
)
def test_bad_map_specs(spec):
    with pytest.raises(registry.SpecError):
        registry.build_map(spec, ex.torus2(8))


@pytest.mark.parametrize("spec", ["projection_loop:bott,s=0", "projection_loop:bott,sign=3", "loop", "projection_loop:bot"])
def test_bad_path_specs(spec):
    with pytest.raises(registry.SpecError):
        registry.build_path(spec, ex.sphere2((8, 8)))
