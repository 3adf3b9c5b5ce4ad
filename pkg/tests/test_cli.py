import json

import pytest

from tanlap import __version__
from tanlap.cli import main
from tanlap.maps import BoxDomain, gallery, sample_grid, write_grid


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    status = main([*argv, "--out", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    return status, doc, out


def test_residual_example(tmp_path, capsys):
    status, doc, _ = run(tmp_path, "residual", "--map", "gallery:embed3:k_family", "--op", "tangential",
                         "--box", "-0.3,0.3x-0.3,0.3", "--n", "41")
    assert status == 0
    assert doc["results"]["max_normalized"] <= 1e-10
    assert doc["results"]["evaluated"] == 39 * 39
    assert set(doc) == {"version", "command", "config", "results", "verdict"}
    assert doc["version"] == __version__ and doc["config"]["rel_tol"] == 1e-9
    assert capsys.readouterr().out.startswith("residual: pass;")


def test_flatness_negative_control(tmp_path, capsys):
    status, doc, _ = run(tmp_path, "flatness", "--map", "gallery:paraboloid", "--tol", "1e-8")
    assert status == 1 and doc["verdict"] == "fail"
    assert doc["results"]["verdict"] == "not-flat"
    assert "not-flat" in capsys.readouterr().out


def test_gallery_list(tmp_path):
    status, doc, _ = run(tmp_path, "gallery", "--list")
    assert status == 0 and doc["results"]["count"] == 7
    assert all("params" in e for e in doc["results"]["entries"])


@pytest.mark.parametrize("argv", [
    ["residual", "--map", "gallery:aronsson", "--op", "inf"],
    ["residual", "--map", "gallery:example2", "--op", "afield"],
    ["residual", "--map", "gallery:nu_of_f", "--op", "p", "--p", "2"],
    ["separated", "--map", "gallery:separated_pair"],
    ["variational", "--map", "gallery:embed3:harmonic", "--sub", "0.2,0.8x-0.3,0.3", "--trials", "3"],
])
def test_passing_commands(tmp_path, argv):
    status, doc, _ = run(tmp_path, *argv)
    assert status == 0 and doc["verdict"] == "pass"


def test_residual_skips_singular_cells(tmp_path):
    _, doc, _ = run(tmp_path, "residual", "--map", "gallery:aronsson", "--op", "inf", "--n", "41")
    assert doc["results"]["singular_skipped"] == 77


def test_non_solution_variational_fails(tmp_path):
    status, doc, _ = run(tmp_path, "variational", "--map", "gallery:paraboloid", "--trials", "2")
    assert status == 1 and doc["results"]["verdict"] == "non-solution-input"


@pytest.mark.parametrize("argv, message", [
    (["residual", "--map", "gallery:helicoid"], "unknown gallery id"),
    (["residual", "--map", "nowhere"], "map spec"),
    (["variational", "--map", "gallery:embed3", "--p", "1"], "p >= 2"),
    (["residual", "--map", "gallery:k_family", "--box", "-1,1x-1,1"], "leaves the domain"),
    (["separated", "--map", "gallery:separated_pair:nonsolution"], "degenerate"),
    (["residual", "--map", "csv:/nonexistent/grid.csv"], "cannot read"),
])
def test_input_errors_exit_2(tmp_path, capsys, argv, message):
    status, _, out = run(tmp_path, *argv)
    assert status == 2 and not out.exists()
    err = capsys.readouterr().err
    assert err.startswith("tanlap: error:") and message in err and err.count("\n") == 1


def test_malformed_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,u1\n0,0,1\n0,1,oops\n")
    status, _, _ = run(tmp_path, "residual", "--map", f"csv:{bad}")
    assert status == 2 and "row 3" in capsys.readouterr().err


def test_csv_grid_input(tmp_path):
    path = tmp_path / "grid.csv"
    write_grid(path, sample_grid(gallery("nu_of_f", f="linear"), BoxDomain((-1, -1), (1, 1), 21)))
    status, doc, _ = run(tmp_path, "flatness", "--map", f"csv:{path}")
    assert status == 0
    assert [c["rank"] for c in doc["results"]["components"]] == [1]


def test_csv_seam_is_blurred_by_differences(tmp_path):
    # central differences of sgn(x) x^4 at x = 0 give h^3, not 0, so the
    # rank-0 seam disappears and both rays fall into one bent component
    path = tmp_path / "grid.csv"
    write_grid(path, sample_grid(gallery("example2"), BoxDomain((-1, -1), (1, 1), 21)))
    status, doc, _ = run(tmp_path, "flatness", "--map", f"csv:{path}")
    assert status == 1
    assert [c["rank"] for c in doc["results"]["components"]] == [1]


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["residual"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["residual", "--map", "gallery:embed3", "--op", "decomposition", "--p", "4"],
    ["flatness", "--map", "gallery:example2"],
    ["variational", "--map", "gallery:embed3", "--sub", "-0.25,0x0.05,0.25", "--trials", "4", "--p", "inf"],
    ["separated", "--map", "gallery:separated_pair", "--samples", "10"],
])
def test_byte_identical_across_workers(tmp_path, argv):
    texts = []
    for workers in ("1", "4"):
        out = tmp_path / f"w{workers}.json"
        main([*argv, "--workers", workers, "--out", str(out)])
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    assert b"workers" not in texts[0]
