import csv
import io
import json

import numpy as np
import pytest
import yaml

from dpgm import cli
from dpgm.problems import example_poisson

FAST = {"eval_h": 0.25, "eval_points": 4}


def _write(tmp_path, cfg, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return path


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# dpgm schema=1")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_solve_writes_run_row_and_record(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "example1", "h": "2^-3", "dof": 40, "settings": FAST})
    assert cli.main(["solve", str(cfg), "--seed", "3", "--out-dir", str(tmp_path / "out")]) == 0
    rows = _read_csv(tmp_path / "out" / "runs.csv")
    assert len(rows) == 1
    row = rows[0]
    assert list(row)[:4] == ["fingerprint", "problem", "kind", "form"]
    assert row["seed"] == "3" and row["status"] == "ok" and row["h"] == "0.125"
    assert float(row["e_L2"]) < 1.0 and float(row["e_H1"]) >= float(row["e_L2"])
    rec = json.loads(next((tmp_path / "out" / "records").glob("*.json")).read_text())
    assert rec["fingerprint"] == row["fingerprint"] and rec["config"]["settings"]["h"] == 0.125
    assert rec["shape"] == [7 * 9 + 200, 40] and rec["timings"]["solve_wall"] > 0
    assert "e_L2=" in capsys.readouterr().out


def test_identical_config_gives_identical_csv(tmp_path):
    cfg = {"problem": "example1", "grid": {"h": [0.25, 0.125], "dof": [20, 30]}, "seeds": [0, 1],
           "settings": FAST}
    path = _write(tmp_path, cfg)
    outs = []
    for name in ("a", "b"):
        assert cli.main(["sweep", str(path), "--out-dir", str(tmp_path / name)]) == 0
        outs.append({f: (tmp_path / name / f).read_bytes()
                     for f in ("runs.csv", "summary.csv", "table_e_L2.csv", "table_e_H1.csv")})
    assert outs[0] == outs[1]


def test_parallel_sweep_matches_serial(tmp_path):
    cfg = {"problem": "example1", "grid": {"h": [0.5, 0.25], "dof": [10]}, "seeds": [0, 1], "settings": FAST}
    path = _write(tmp_path, cfg)
    cli.main(["sweep", str(path), "--out-dir", str(tmp_path / "s")])
    cli.main(["sweep", str(path), "--out-dir", str(tmp_path / "p"), "--threads", "2"])
    assert (tmp_path / "s" / "runs.csv").read_bytes() == (tmp_path / "p" / "runs.csv").read_bytes()


def test_table1_grid_summary_shape(tmp_path):
    cfg = {"problem": "example1", "grid": {"h": ["2^-2", "2^-3", "2^-4", "2^-5"], "dof": [50, 100, 200]},
           "settings": FAST}
    res = cli.run_sweep(cli.resolve_config(cfg, out_dir=tmp_path))
    assert len(res["summary"]) == 12
    assert all(r["n_ok"] == 1 for r in res["summary"])
    table = (tmp_path / "table_e_L2.csv").read_text().splitlines()
    assert table[1] == "row,dof=50,dof=100,dof=200"
    assert [ln.split(",")[0] for ln in table[2:]] == ["h=0.25", "h=0.125", "h=0.0625", "h=0.03125"]


def test_table5_grid_has_form_column(tmp_path):
    cfg = {"problem": "example1", "grid": {"form": [1, 2, 3, 4], "h": [0.5, 0.25, 0.125, 0.0625], "dof": 30},
           "settings": FAST}
    res = cli.run_sweep(cli.resolve_config(cfg, out_dir=tmp_path))
    rows = _read_csv(tmp_path / "summary.csv")
    assert len(rows) == 16
    assert sorted({r["form"] for r in rows}) == ["1", "2", "3", "4"]
    assert all(r["kind"] == "mixed" for r in rows)
    form4 = [r for r in res["records"] if r["config"]["form"] == 4]
    assert all(r["block_rows"]["dirichlet"] == 0 and r["block_rows"]["normal_trace"] == 0 for r in form4)
    first = (tmp_path / "table_e_L2.csv").read_text().splitlines()[2]
    assert first.startswith("h=0.5;form=1,")


def test_single_cell_sweep_gives_one_row(tmp_path):
    res = cli.run_sweep(cli.resolve_config({"h": 0.5, "dof": 5, "settings": FAST}, out_dir=tmp_path))
    assert len(_read_csv(tmp_path / "summary.csv")) == 1
    assert len(res["records"]) == 1


def test_dof_one_runs_with_large_error(tmp_path):
    res = cli.run_solve(cli.resolve_config({"h": 0.25, "dof": 1, "settings": FAST}, out_dir=tmp_path))
    rec = res["records"][0]
    assert rec["status"] == "ok" and rec["errors"]["e_L2"] > 0.1


def test_dump_grid_shape(tmp_path, capsys):
    cfg = _write(tmp_path, {"h": 0.125, "dof": 60, "settings": FAST})
    assert cli.main(["solve", str(cfg), "--out-dir", str(tmp_path)]) == 0
    record = next((tmp_path / "records").glob("*.json"))
    out = tmp_path / "grid.csv"
    assert cli.main(["dump-grid", str(record), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "x,y,u_rho,u,abs_diff"
    data = np.loadtxt(out, delimiter=",", skiprows=2)
    assert data.shape == (10201, 5)
    assert np.allclose(data[:, 4], np.abs(data[:, 2] - data[:, 3]), atol=1e-9)
    assert cli.main(["dump-grid", str(record), "--resolution", "11", "--out-dir", str(tmp_path / "g")]) == 0
    assert len(list((tmp_path / "g").glob("*_grid.csv"))) == 1


def test_grid_table_exact_probe():
    p = example_poisson()
    table = cli.grid_table(p.u_exact, p.u_exact, p.box, 101)
    assert table.shape == (10201, 5)
    assert np.max(table[:, 4]) <= 1e-13
    with pytest.raises(ValueError, match="resolution"):
        cli.grid_table(p.u_exact, p.u_exact, p.box, 1)


def test_stage_labelled_failure_and_exit_codes(tmp_path, capsys):
    bad_h = _write(tmp_path, {"h": 0.3, "dof": 5}, "bad_h.yaml")
    assert cli.main(["solve", str(bad_h), "--out-dir", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "[assemble]" in err and "axis 0" in err
    rows = _read_csv(tmp_path / "runs.csv")
    assert rows[0]["status"] == "failed:assemble"
    assert cli.main(["solve", str(_write(tmp_path, {"problem": "example9"}, "p.yaml"))]) == 2
    assert "[config]" in capsys.readouterr().err
    assert cli.main(["solve", str(tmp_path / "missing.yaml")]) == 2


def test_partial_failure_sweep_continues(tmp_path):
    cfg = {"grid": {"h": [0.5, 0.3], "dof": 5}, "settings": FAST}
    res = cli.run_sweep(cli.resolve_config(cfg, out_dir=tmp_path))
    assert [r["status"] for r in res["records"]] == ["ok", "failed:assemble"]
    summary = _read_csv(tmp_path / "summary.csv")
    assert summary[1]["n_ok"] == "0" and summary[1]["median_e_L2"] == "nan"


@pytest.mark.parametrize(
    "cfg, msg",
    [
        ({"colour": 1}, "unknown config keys"),
        ({"grid": {"width": [1]}}, "unknown grid axes"),
        ({"dof": [0]}, "positive integers"),
        ({"h": []}, "empty"),
        ({"h": "two"}, "cannot read"),
        ({"settings": {"dof": 5}}, "misplaced"),
        ({"zip": True, "grid": {"h": [0.5, 0.25], "dof": [5]}}, "zip"),
        ({"seeds": []}, "seeds"),
        ({"grid": {"h": 0.5}, "h": 0.25}, "twice"),
    ],
)
def test_config_errors(cfg, msg):
    with pytest.raises(cli.ConfigError, match=msg):
        cli.resolve_config(cfg)


def test_resolve_overrides_and_zip():
    r = cli.resolve_config({"zip": True, "grid": {"h": ["2^-2", "2^-3"], "dof": [10, 20]}, "seeds": [1, 2]},
                           seed=7, rcond=1e-10, fd_step=1e-5, out_dir="x")
    assert r["seeds"] == [7] and r["settings"] == {"rcond": 1e-10, "fd_step": 1e-5}
    cells = cli.expand_grid(r)
    assert [(c["h"], c["dof"]) for c in cells] == [(0.25, 10), (0.125, 20)]
    a, b = (cli.cell_config(r, c) for c in cells)
    assert cli.fingerprint(a) != cli.fingerprint(b)
    assert cli.fingerprint(a) == cli.fingerprint(json.loads(json.dumps(a)))


def test_solve_rejects_multi_cell(tmp_path):
    path = _write(tmp_path, {"grid": {"dof": [5, 6]}})
    assert cli.main(["solve", str(path)]) == 2


def test_json_config_accepted(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"problem": {"kind": "poisson", "dirichlet": ["x0", "x1", "y0", "y1"],
                                            "f": "2*pi^2*sin(pi*x)*sin(pi*y)", "g_d": "0",
                                            "u_exact": "sin(pi*x)*sin(pi*y)",
                                            "grad_exact": ["pi*cos(pi*x)*sin(pi*y)", "pi*sin(pi*x)*cos(pi*y)"]},
                                "h": 0.25, "dof": 30, "settings": FAST}))
    assert cli.main(["solve", str(path), "--out-dir", str(tmp_path)]) == 0
    assert _read_csv(tmp_path / "runs.csv")[0]["problem"] == "custom"


@pytest.mark.slow
def test_sweep_monotonic_sanity(tmp_path):
    cfg = {"grid": {"h": ["2^-2", "2^-4"], "dof": 200}, "seeds": [0, 1, 2]}
    res = cli.run_sweep(cli.resolve_config(cfg, out_dir=tmp_path))
    coarse, fine = res["summary"]
    assert fine["median_e_L2"] < coarse["median_e_L2"]
