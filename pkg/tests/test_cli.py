import json

import numpy as np
import pytest

import entdyn.cli as cli
from entdyn import __version__
from entdyn.errors import NumericalError
from entdyn.stats import read_sweep_csv, write_sweep_csv
from entdyn.stats import sweep as run_sweep

SWEEP_GRID = "30,10,4,2,1,0.5,0.2,0.1,0.04"


def sweep_args(outdir, extra=()):
    return [
        "sweep",
        "--protocol",
        "EB",
        "--N",
        "6",
        "--samples",
        "20",
        "--grid",
        SWEEP_GRID,
        "--out",
        str(outdir),
        *extra,
    ]


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_sweep_fit_report_chain(tmp_path):
    d = tmp_path / "run"
    assert cli.main(sweep_args(d)) == 0
    assert (d / "sweep.csv").exists()
    manifest = json.loads((d / "manifest_sweep.json").read_text())
    assert manifest["subcommand"] == "sweep"
    assert manifest["version"] == __version__
    assert manifest["config"]["n"] == 6
    assert manifest["outputs"] == ["sweep.csv"]

    assert cli.main(["fit", "--input", str(d / "sweep.csv"), "--out", str(d)]) == 0
    fit = json.loads((d / "fit.json").read_text())
    assert set(fit) == {"R1", "R2"}
    assert fit["R1"]["params"]["A"] > 0
    assert fit["R1"]["n_points"] == 9
    assert set(fit["R2"]["stderrs"]) == {"A", "b1", "b2", "d"}

    assert cli.main(["report", "--dir", str(d), "--out", str(d)]) == 0
    svg = (d / "growth.svg").read_text()
    assert svg.lstrip().startswith("<?xml")


def test_sweep_rerun_and_workers_byte_identical(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(sweep_args(a)) == 0
    assert cli.main(sweep_args(b)) == 0
    assert cli.main(sweep_args(c, ("--workers", "3"))) == 0
    ref = (a / "sweep.csv").read_bytes()
    assert (b / "sweep.csv").read_bytes() == ref
    assert (c / "sweep.csv").read_bytes() == ref


def test_manifest_replay(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(sweep_args(a)) == 0
    replay = [
        "sweep",
        "--from-manifest",
        str(a / "manifest_sweep.json"),
        "--out",
        str(b),
    ]
    assert cli.main(replay) == 0
    assert (b / "sweep.csv").read_bytes() == (a / "sweep.csv").read_bytes()
    # the replayed manifest must not have redirected output into a
    replayed = json.loads((b / "manifest_sweep.json").read_text())
    assert replayed["config"]["grid"] == [float(v) for v in SWEEP_GRID.split(",")]


def test_manifest_subcommand_mismatch(tmp_path):
    a = tmp_path / "a"
    assert cli.main(sweep_args(a)) == 0
    code = cli.main(["fit", "--from-manifest", str(a / "manifest_sweep.json")])
    assert code == 2


def test_config_errors_exit_2(tmp_path):
    d = str(tmp_path)
    assert cli.main(["sweep", "--grid", "1,2", "--gamma", "0", "--out", d]) == 2
    assert cli.main(["sweep", "--out", d]) == 2
    assert cli.main(["sweep", "--grid", "1,2", "--samples", "1", "--out", d]) == 2
    assert cli.main(["sweep", "--grid", "1,2", "--seed", "-1", "--out", d]) == 2
    assert cli.main(["sample", "--mu", "-3", "--samples", "5", "--out", d]) == 2
    assert cli.main(["fit", "--input", str(tmp_path / "nope.csv"), "--out", d]) == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["report", "--dir", str(empty), "--out", d]) == 2
    assert (
        cli.main(
            [
                "dyson",
                "--N",
                "3",
                "--paths",
                "2",
                "--y-start",
                "0.5",
                "--checkpoints",
                "0.2",
                "--out",
                d,
            ]
        )
        == 2
    )


def test_failed_run_removes_partial_outputs(tmp_path, monkeypatch):
    def broken(args, out):
        out.path("samples.csv").write_text("partial")
        raise NumericalError("injected failure", sample_id=3)

    monkeypatch.setitem(cli._RUNNERS, "sample", broken)
    d = tmp_path / "x"
    assert cli.main(["sample", "--out", str(d)]) == 3
    assert not (d / "samples.csv").exists()
    assert not (d / "manifest_sample.json").exists()


def test_outdir_collision_exits_4(tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("")
    assert cli.main(["sample", "--samples", "5", "--out", str(blocker)]) == 4


def test_sample_profile_and_stationary(tmp_path):
    d = tmp_path / "prof"
    args = ["sample", "--N", "4", "--samples", "6", "--out", str(d)]
    assert cli.main(args) == 0
    lines = (d / "samples.csv").read_text().strip().splitlines()
    assert lines[0] == "R1,R2,Rinf,R0,S2,S3"
    assert len(lines) == 7

    s = tmp_path / "stat"
    args = ["sample", "--N", "4", "--samples", "6", "--stationary", "--out", str(s)]
    assert cli.main(args) == 0
    assert (s / "samples.csv").exists()
    assert (s / "samples.csv").read_bytes() != (d / "samples.csv").read_bytes()


def test_langevin_smoke(tmp_path):
    d = tmp_path / "lv"
    args = [
        "langevin",
        "--N",
        "3",
        "--paths",
        "5",
        "--checkpoints",
        "0.2,0.1",
        "--out",
        str(d),
    ]
    assert cli.main(args) == 0
    lines = (d / "langevin_trajectories.csv").read_text().strip().splitlines()
    assert lines[0] == "path_id,Y,S2,S3,R1,R2"
    assert len(lines) == 1 + 5 * 2
    ys = [float(line.split(",")[1]) for line in lines[1:3]]
    assert ys == [0.1, 0.2]


def test_dyson_smoke(tmp_path):
    d = tmp_path / "dy"
    args = [
        "dyson",
        "--N",
        "3",
        "--paths",
        "4",
        "--y-start",
        "0.1",
        "--checkpoints",
        "0.2,0.15",
        "--base-dt",
        "1e-3",
        "--out",
        str(d),
    ]
    assert cli.main(args) == 0
    lines = (d / "dyson_trajectories.csv").read_text().strip().splitlines()
    # includes the y-start row for every path
    assert len(lines) == 1 + 4 * 3
    first = lines[1].split(",")
    assert float(first[1]) == 0.1


def test_conditional_smoke(tmp_path):
    d = tmp_path / "cond"
    args = [
        "conditional",
        "--N",
        "6",
        "--samples",
        "12000",
        "--bins",
        "9",
        "--out",
        str(d),
    ]
    assert cli.main(args) == 0
    lines = (d / "conditional.csv").read_text().strip().splitlines()
    assert len(lines) == 10
    summary = json.loads((d / "conditional_summary.json").read_text())
    assert summary["n_total"] == 12000
    assert summary["g_slope_r1"] > 0
    assert summary["g_slope_r2"] < 0
    assert cli.main(["report", "--dir", str(d), "--out", str(d)]) == 0
    assert (d / "conditional.svg").exists()


def test_scaling_smoke(tmp_path):
    d = tmp_path / "sc"
    args = [
        "scaling",
        "--measure",
        "invS2",
        "--n-grid",
        "4,6,8,10",
        "--samples",
        "30",
        "--out",
        str(d),
    ]
    assert cli.main(args) == 0
    lines = (d / "scaling.csv").read_text().strip().splitlines()
    assert lines[0] == "measure,N,value,se,ratio"
    assert len(lines) == 5
    assert cli.main(["report", "--dir", str(d), "--out", str(d)]) == 0
    assert (d / "scaling.svg").exists()


def test_fit_requires_single_ensemble(tmp_path):
    eb = run_sweep("EB", [{"mu": m} for m in (2.0, 1.0, 0.5)], n=4, n_samples=10)
    ep = run_sweep(
        "EP", [{"a": v, "b": v} for v in (2.0, 1.0, 0.5)], n=4, n_samples=10
    )
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, [eb, ep])
    assert cli.main(["fit", "--input", str(path), "--out", str(tmp_path)]) == 2
    # too few points even after the filter resolves the ambiguity
    code = cli.main(
        ["fit", "--input", str(path), "--protocol", "EB", "--out", str(tmp_path)]
    )
    assert code == 2


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_VAR, str(tmp_path))
    assert cli.main(["sample", "--N", "4", "--samples", "5"]) == 0
    assert (tmp_path / "sample" / "samples.csv").exists()
    assert (tmp_path / "sample" / "manifest_sample.json").exists()


def test_sweep_csv_parses_back(tmp_path):
    d = tmp_path / "run"
    assert cli.main(sweep_args(d)) == 0
    rows = read_sweep_csv(d / "sweep.csv")
    assert len(rows) == 9
    ys = [r["Y"] for r in rows]
    assert ys == sorted(ys)
    assert all(r["protocol"] == "EB" for r in rows)
    assert {r["n"] for r in rows} == {20}
