import csv
import json

import pytest

from gonodyn.cli import main
from gonodyn.core import GonosomalParams, SimplexPoint
from gonodyn.operators import apply_W

HALF = ["--a", "0.5", "--sigma1", "0.5"]
DOWN = ["--a", "0.3333333333333333", "--sigma1", "0.6666666666666666"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- exit codes -----------------------------------------------------------------

def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", *HALF)
    assert code == 0 and "case=Equal" in out


def test_invalid_parameter(capsys):
    code, _, err = run(capsys, "fixed-points", "--a", "1.2", "--sigma1", "0.5")
    assert code == 2 and "config error" in err


def test_excluded_initial_point(capsys):
    code, _, err = run(capsys, "iterate", *HALF, "--init", 0, 0, 0.5, 0.5)
    assert code == 3 and "domain error" in err


def test_non_convergence(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = run(capsys, "iterate", *HALF, "--max-iter", 3, "--init", 0.1, 0.2, 0.3, 0.4, "-o", out)
    assert code == 4
    assert out.exists()


def test_missing_params(capsys):
    code, _, _ = run(capsys, "iterate", "--init", 0.25, 0.25, 0.25, 0.25)
    assert code == 2


# -- iterate ------------------------------------------------------------------

def test_iterate_round_trip(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, stdout, _ = run(capsys, "iterate", *DOWN, "--init", 0.1, 0.3, 0.4, 0.2, "-o", out)
    assert code == 0
    assert "basin=" in stdout
    rows = read_rows(out)
    assert list(rows[0]) == ["m", "x", "y", "u", "v", "alpha", "beta", "xv_product"]
    p = GonosomalParams(float(DOWN[1]), float(DOWN[3]))
    checked = 0
    for r0, r1 in zip(rows, rows[1:]):
        if int(r1["m"]) != int(r0["m"]) + 1:
            continue
        s = SimplexPoint(tuple(float(r0[k]) for k in "xyuv"))
        image = apply_W(p, s)
        assert max(abs(a - float(r1[k])) for a, k in zip(image, "xyuv")) <= 1e-12
        checked += 1
    assert checked >= 50


def test_iterate_equal_case_limit(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, stdout, _ = run(capsys, "iterate", *HALF, "--init", 0.25, 0.25, 0.25, 0.25, "-o", out)
    assert code == 0 and "basin=T0" in stdout
    last = read_rows(out)[-1]
    assert [float(last[k]) for k in "xyuv"] == pytest.approx([0, 0.5, 0.5, 0], abs=1e-5)


def test_iterate_boundary_single_step(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, stdout, _ = run(capsys, "iterate", *HALF, "--init", 0, 0.5, 0.3, 0.2, "-o", out)
    assert code == 0 and "basin=T2" in stdout
    rows = read_rows(out)
    assert len(rows) == 2


def test_outputs_are_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert run(capsys, "iterate", *DOWN, "--init", 0.1, 0.3, 0.4, 0.2, "-o", path)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


# -- fixed points, eigen, classify --------------------------------------------

def test_fixed_points_descriptors(capsys):
    code, out, _ = run(capsys, "fixed-points", *HALF, "--samples", 3)
    assert code == 0
    doc = json.loads(out)
    assert len(doc) == 6
    assert {d["family"] for d in doc} == {"F11", "F12"}
    corner = [0.0, 0.5, 0.5, 0.0]
    assert {d["family"] for d in doc if d["point"] == corner} == {"F11", "F12"}


def test_fixed_points_single_sample(capsys):
    code, out, _ = run(capsys, "fixed-points", *HALF, "--samples", 1)
    assert code == 0 and len(json.loads(out)) == 2


def test_fixed_points_rational_strings(capsys):
    code, out, _ = run(capsys, "fixed-points", "--a", "1/2", "--sigma1", "1/3", "--backend", "rational")
    assert code == 0
    doc = json.loads(out)
    assert all(isinstance(c, (int, str)) for d in doc for c in d["point"])


def test_eigen(capsys):
    code, out, _ = run(capsys, "eigen", *HALF, "--point", 0, 0.5, 0.5, 0)
    assert code == 0
    doc = json.loads(out)
    assert "classification" in doc and len(doc["eigenvalues"]) >= 2


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", *HALF, "--init", 0.2, 0.3, 0.3, 0.2)
    assert code == 0
    assert json.loads(out)["basin"] == "T0"


# -- series -------------------------------------------------------------------

def test_series_case1(capsys):
    code, out, _ = run(capsys, "series", "--case", 1, "--branch", "B", "--theta", 1.5, "--order", 10)
    assert code == 0
    assert json.loads(out)["c"] == [1.5, -1] + [0] * 8


def test_series_case_mismatch(capsys):
    code, _, err = run(capsys, "series", *HALF, "--case", 2, "--c1", 0.5)
    assert code == 2 and "case mismatch" in err


def test_series_case2_forced_c2(capsys):
    code, out, err = run(capsys, "series", *DOWN, "--case", 2, "--c1", 0.5, "--c2", -0.1, "--order", 20)
    assert code == 0
    doc = json.loads(out)
    assert doc["residual"] <= 1e-8 or doc["warnings"]
    assert "forced" in err


def test_series_resonance(capsys):
    code, _, err = run(capsys, "series", *DOWN, "--case", 2, "--c1", 0.0)
    assert code == 3 and "k=2" in err


# -- curves, sweeps, plots ----------------------------------------------------

def test_trace_curve_and_plot(capsys, tmp_path):
    curves = []
    for theta in (0.6, 1.3):
        path = tmp_path / f"curve{theta}.csv"
        code, _, _ = run(capsys, "trace-curve", *HALF, "--seed", 0.5, 0.5 + 1 - theta, "--samples", 20, "-o", path)
        assert code == 0
        curves.append(path)
    svg_a, svg_b = tmp_path / "a.svg", tmp_path / "b.svg"
    for out in (svg_a, svg_b):
        assert run(capsys, "plot", "--kind", "curves", *curves, "-o", out)[0] == 0
    text = svg_a.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 2
    assert svg_a.read_bytes() == svg_b.read_bytes()


def test_sweep_and_plot(capsys, tmp_path):
    sweep = tmp_path / "sweep.csv"
    assert run(capsys, "sweep", *DOWN, "--grid", 5, "-o", sweep)[0] == 0
    assert len(read_rows(sweep)) == 25
    out = tmp_path / "sweep.svg"
    assert run(capsys, "plot", "--kind", "sweep", sweep, "-o", out)[0] == 0
    assert out.read_text().count("<rect") >= 25


def test_trace_curve_near_axis(capsys):
    code, _, _ = run(capsys, "trace-curve", *HALF, "--seed", 1e-9, 0.5)
    assert code == 3


@pytest.mark.parametrize(
    "content",
    ["", "alpha,gamma\n0.1,0.2\n", "alpha,beta\n", "alpha,beta\n0.1,zz\n", "alpha,beta\n0.1\n"],
)
def test_plot_bad_csv(capsys, tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _, err = run(capsys, "plot", "--kind", "curves", path)
    assert code == 5 and "I/O error" in err


def test_plot_missing_file(capsys, tmp_path):
    assert run(capsys, "plot", "--kind", "curves", tmp_path / "none.csv")[0] == 5


# -- configuration ------------------------------------------------------------

def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"a": "1.2", "sigma1": "0.5"}))
    assert run(capsys, "validate", "--config", cfg)[0] == 2
    code, out, _ = run(capsys, "validate", "--config", cfg, "--a", "0.5")
    assert code == 0 and "case=Equal" in out


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"a": "0.5", "sigma1": "0.5", "colour": "red"}))
    assert run(capsys, "validate", "--config", cfg)[0] == 2


def test_config_bad_json(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text("{nope")
    assert run(capsys, "validate", "--config", cfg)[0] == 5


def test_backend_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("GONODYN_BACKEND", "rational")
    code, out, _ = run(capsys, "fixed-points", "--a", "1/2", "--sigma1", "1/3", "--samples", 1)
    assert code == 0
    assert any(isinstance(c, str) for d in json.loads(out) for c in d["point"])
    monkeypatch.setenv("GONODYN_BACKEND", "quad")
    assert run(capsys, "validate", *HALF)[0] == 2


def test_tensor_and_params_conflict(capsys, tmp_path):
    path = tmp_path / "t.json"
    path.write_text("{}")
    assert run(capsys, "validate", *HALF, "--tensor", path)[0] == 2
