import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from conecalib.catalog import derive_params
from conecalib.certify import certify
from conecalib.cli import main
from conecalib.report import (CertReport, RunConfig, atomic_write, csv_text, fmt_num,
                              parse_betas, read_config, svg_line_chart, to_json)


def _run(tmp_path, *argv):
    return main(list(argv) + ["--outdir", str(tmp_path)])


def test_fmt_num():
    assert fmt_num(0.1) == "0.10000000000000001"
    assert fmt_num(math.inf) == "inf" and fmt_num(-math.inf) == "-inf"
    assert fmt_num(math.nan) == "nan" and fmt_num(3) == "3" and fmt_num(None) == ""


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_num_round_trips(x):
    assert float(fmt_num(x)) == x


def test_csv_text_uses_lf_and_header():
    text = csv_text(("a", "b"), [(1, 0.5), ("x", math.inf)])
    assert text == "a,b\n1,0.5\nx,inf\n"


def test_cert_report_round_trip():
    params = derive_params(1, r=2, s=6)
    rep = CertReport.from_verdict(certify(params, 1.0), params, wall_time=0.25)
    back = CertReport.from_json(rep.to_json())
    assert back == rep
    stable = json.loads(rep.to_json(stable=True))
    assert "wall_time" not in stable and stable["schema"] == 1
    assert set(stable["params"]) == {"l", "p", "q", "alpha", "theta0", "tau"}


def test_cert_report_with_infinite_sup_round_trips():
    params = derive_params(1, r=2, s=2)
    rep = CertReport.from_verdict(certify(params, 0.9), params)
    assert json.loads(rep.to_json())["sup_psi"] == "inf"
    assert CertReport.from_json(rep.to_json()) == rep


def test_cert_report_rejects_other_schema():
    with pytest.raises(ValueError):
        CertReport.from_json(json.dumps({"schema": 2}))


def test_run_config_validation_and_merge(tmp_path):
    cfg = RunConfig().merged({"tol": "1e-10", "betas": "1,1.2,1.5", "stable": "true"})
    assert cfg.tol == 1e-10 and cfg.betas == (1.0, 1.2, 1.5) and cfg.stable
    with pytest.raises(ValueError):
        RunConfig().merged({"tol": "-1"})
    with pytest.raises(ValueError):
        RunConfig().merged({"scan_points": 10})
    with pytest.raises(ValueError, match="unknown"):
        RunConfig().merged({"colour": "red"})
    path = tmp_path / "run.cfg"
    path.write_text("# comment\ntol = 1e-8\nplot-points = 5000  # trailing\n")
    assert read_config(str(path)) == {"tol": "1e-8", "plot_points": "5000"}
    path.write_text("garbage\n")
    with pytest.raises(ValueError):
        read_config(str(path))


def test_parse_betas():
    assert parse_betas("1, 1.2") == (1.0, 1.2)
    with pytest.raises(ValueError):
        parse_betas("1,x")


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "f.txt"
    target.write_text("old")
    atomic_write(str(target), "new\n")
    assert target.read_text() == "new\n"
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]


def test_svg_chart_structure():
    svg = svg_line_chart([0, 1, 2], [0.5, 1.5, 0.2], title="t")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "<polyline" in svg and "stroke-dasharray" in svg
    with pytest.raises(ValueError):
        svg_line_chart([0], [1])


def test_cli_catalog_json(tmp_path):
    assert _run(tmp_path, "catalog", "list", "--json", "--out", "cat.json") == 0
    rows = json.loads((tmp_path / "cat.json").read_text())["rows"]
    assert len(rows) == 13
    assert set(rows[0]) == {"row_id", "group", "link", "angle", "family", "exponents"}
    assert rows[9]["angle"] == "pi/3"


def test_cli_certify_expect_global(tmp_path, capsys):
    assert main(["certify", "--row", "1", "--r", "3", "--s", "5", "--beta", "1",
                 "--expect", "global"]) == 0
    assert "Global" in capsys.readouterr().out
    assert main(["certify", "--row", "1", "--r", "2", "--s", "2", "--expect", "global"]) == 2
    assert main(["certify", "--row", "1", "--r", "2", "--s", "6", "--expect", "global"]) == 2


def test_cli_certify_json(tmp_path):
    assert _run(tmp_path, "certify", "--row", "2", "--k", "9", "--beta", "1.2", "--json",
                "--out", "c.json") == 0
    d = json.loads((tmp_path / "c.json").read_text())
    assert d["verdict"] == "Global" and len(d["eta_roots"]) == 2 and "wall_time" in d


@pytest.mark.parametrize("argv", [
    ["certify", "--row", "14", "--beta", "1"],
    ["certify", "--row", "1", "--r", "1", "--s", "5"],
    ["certify", "--row", "5", "--k", "3"],
    ["sweep", "--row", "2"],
])
def test_cli_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_cli_unwritable_directory(tmp_path, capsys):
    missing = tmp_path / "nope" / "x.json"
    assert main(["catalog", "list", "--json", "--out", str(missing)]) == 1
    assert "not writable" in capsys.readouterr().err


def test_cli_sweep_csv(tmp_path):
    assert _run(tmp_path, "sweep", "--max", "5", "--csv", "--out", "s.csv") == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "s.csv").read_text())))
    table = {(int(r["r"]), int(r["s"])): r["verdict"] for r in rows}
    assert len(table) == 16
    assert table[(4, 4)] == "Global" and table[(3, 5)] == "Global"
    assert table[(2, 2)] == "NoCertificate"


def test_cli_plot_figure_1(tmp_path):
    assert _run(tmp_path, "plot", "psi", "--row", "1", "--r", "2", "--s", "6", "--beta", "1",
                "--svg", "fig1.svg", "--csv", "fig1.csv", "--samples", "20001") == 0
    rows = list(csv.reader(io.StringIO((tmp_path / "fig1.csv").read_text())))
    assert rows[0] == ["theta", "psi", "eta", "phi"]
    th = [float(r[0]) for r in rows[1:]]
    ps = [float(r[1]) for r in rows[1:]]
    i0 = min(range(len(th)), key=lambda i: abs(th[i] - 1.150262))
    assert ps[i0] == pytest.approx(1.0, abs=1e-6)
    assert all(p > 1 for t, p in zip(th, ps) if 1.17 < t < 1.3)
    assert (tmp_path / "fig1.svg").read_text().startswith("<svg")


def test_cli_deform(tmp_path):
    assert _run(tmp_path, "deform", "--row", "1", "--r", "3", "--s", "5", "--beta", "1",
                "--csv", "d.csv", "--report", "d.json") == 0
    rep = json.loads((tmp_path / "d.json").read_text())
    assert rep["max_comass_sq"] <= 1 + 1e-6 and rep["parity_c1"] is False
    header = (tmp_path / "d.csv").read_text().splitlines()[0]
    assert header == "theta,lambda,mu,deformed_comass_sq"


def test_cli_ode_with_glue(tmp_path):
    assert _run(tmp_path, "ode", "lambda1", "--glue", "--csv", "l.csv", "--report", "l.json") == 0
    rep = json.loads((tmp_path / "l.json").read_text())
    assert 1.15 < rep["theta1"] < 1.25 and rep["glue"]["max_comass_sq"] <= 1 + 1e-6
    rows = list(csv.reader(io.StringIO((tmp_path / "l.csv").read_text())))
    assert rows[0] == ["theta", "lambda1", "star_comass_sq"]
    assert all(abs(float(r[2]) - 1) <= 1e-8 for r in rows[1:])


def test_cli_phi0(tmp_path):
    assert _run(tmp_path, "phi0", "--row", "1", "--r", "4", "--s", "4", "--csv", "p.csv",
                "--report", "p.json") == 0
    rep = json.loads((tmp_path / "p.json").read_text())
    assert rep["value_at_theta0"] == pytest.approx(1.0, abs=1e-10)
    assert rep["residual_max"] <= 1e-9


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("tol = 1e-10\nbetas = 1\n")
    assert _run(tmp_path, "sweep", "--max", "4", "--config", str(cfg), "--out", "s.csv") == 0
    assert "Global" in (tmp_path / "s.csv").read_text()


def test_threads_env_runs_parallel_sweep(tmp_path):
    env = dict(os.environ, CONECALIB_THREADS="2")
    out = subprocess.run([sys.executable, "-m", "conecalib", "sweep", "--max", "4", "--csv"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.startswith("r,s,verdict")
    assert out.stdout.count("\n") == 10


def test_to_json_sorted_and_non_finite():
    assert to_json({"b": math.inf, "a": 1}) == '{\n  "a": 1,\n  "b": "inf"\n}\n'
