import json
import subprocess
import sys

import numpy as np
import pytest

from uldplab.cli import main
from uldplab.pathspace import DiscretePath, TimeGrid, line_path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_rate_of_the_unit_line_prints_half(tmp_path, capsys):
    f = tmp_path / "line.csv"
    line_path(TimeGrid(1.0, 64), 0.0, 1.0).save_csv(str(f))
    code, out, _ = run_cli(
        capsys, "rate", "--model", "translated-bm", "--x", "0", "--path", str(f)
    )
    assert code == 0
    assert out.strip() == "0.5"


def test_rate_reports_inf_on_start_mismatch(tmp_path, capsys):
    f = tmp_path / "line.csv"
    line_path(TimeGrid(1.0, 64), 1.0, 1.0).save_csv(str(f))
    code, out, _ = run_cli(
        capsys, "rate", "--model", "translated-bm", "--x", "0", "--path", str(f)
    )
    assert code == 0
    assert out.strip() == "inf"


def test_simulate_single_sample_csv_feeds_rate(tmp_path, capsys):
    f = tmp_path / "path.csv"
    code, _, _ = run_cli(
        capsys,
        "simulate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps", "0.1",
        "--samples", "1",
        "--seed", "5",
        "--format", "csv",
        "--out", str(f),
    )
    assert code == 0
    path = DiscretePath.from_csv(str(f))
    assert path.grid == TimeGrid(1.0, 64)
    code, out, _ = run_cli(
        capsys, "rate", "--model", "translated-bm", "--x", "0", "--path", str(f)
    )
    assert code == 0
    assert float(out) > 0.0


def test_simulate_multi_sample_csv_has_labeled_columns(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps", "0.1",
        "--samples", "3",
        "--format", "csv",
    )
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header == ["t", "p0_x0", "p1_x0", "p2_x0"]
    assert len(out.splitlines()) == 66


def test_simulate_json_document_shape(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate",
        "--model", "perturbed-bm",
        "--x", "1.5",
        "--eps", "0.2",
        "--samples", "2",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "perturbed-bm"
    assert len(doc["paths"]) == 2
    # start leak: paths open at (1 + eps) x
    assert doc["paths"][0][0][0] == pytest.approx(1.8)


def test_estimate_csv_and_json_agree(tmp_path, capsys):
    args = [
        "estimate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps", "0.1",
        "--eps", "0.05",
        "--delta", "0.5",
        "--samples", "2000",
        "--seed", "3",
    ]
    code, out_json, _ = run_cli(capsys, *args)
    assert code == 0
    rows = json.loads(out_json)
    assert [r["eps"] for r in rows] == [0.1, 0.05]
    code, out_csv, _ = run_cli(capsys, *args, "--format", "csv")
    assert code == 0
    lines = out_csv.splitlines()
    assert lines[0] == "eps,x,phat,ci_lo,ci_hi,log_value,zero_hit,ess,n,seed"
    assert float(lines[1].split(",")[2]) == rows[0]["p_hat"]


def test_estimate_requires_delta(capsys):
    code, _, err = run_cli(
        capsys,
        "estimate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps", "0.1",
    )
    assert code == 2
    assert "delta" in err


def test_eps_grid_parsing(capsys):
    code, out, _ = run_cli(
        capsys,
        "estimate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps-grid", "0.05:0.2:3",
        "--delta", "0.5",
        "--samples", "500",
    )
    assert code == 0
    eps = [r["eps"] for r in json.loads(out)]
    assert eps[0] == pytest.approx(0.2)
    assert eps[-1] == pytest.approx(0.05)
    assert len(eps) == 3
    code, _, err = run_cli(
        capsys,
        "estimate",
        "--model", "translated-bm",
        "--x", "0",
        "--eps-grid", "0.2:0.05:3",
        "--delta", "0.5",
    )
    assert code == 2
    assert "config error" in err


def test_level_set_export_and_summary(tmp_path, capsys):
    out_dir = tmp_path / "ls"
    code, out, _ = run_cli(
        capsys,
        "level-set",
        "--model", "translated-bm",
        "--x", "0",
        "--s0", "1.0",
        "--samples", "5",
        "--out", str(out_dir),
    )
    assert code == 0
    manifest = json.loads(open(out.strip()).read())
    assert manifest["count"] == 5
    code, out, _ = run_cli(
        capsys,
        "level-set",
        "--model", "translated-bm",
        "--x", "0",
        "--s0", "1.0",
        "--samples", "5",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["energies"][0] == 0.0
    assert max(doc["energies"]) <= 1.0 + 1e-12


def test_check_fwuldp_small_budget(capsys):
    code, out, err = run_cli(
        capsys,
        "check",
        "--model", "translated-bm",
        "--definition", "fwuldp",
        "--x", "0",
        "--eps", "0.2",
        "--eps", "0.1",
        "--s0", "0.25",
        "--delta", "0.4",
        "--samples", "400",
        "--seed", "1",
    )
    assert code == 0
    reports = json.loads(out)
    assert [r["definition"] for r in reports] == ["fwuldp-lower", "fwuldp-upper"]
    assert "fwuldp-lower:" in err


def test_check_luldp_needs_eta(capsys):
    code, _, err = run_cli(
        capsys,
        "check",
        "--model", "translated-bm",
        "--definition", "luldp",
        "--x", "0",
        "--eps", "0.1",
        "--delta", "0.4",
        "--samples", "200",
    )
    assert code == 2
    assert "eta" in err


def test_check_ulp_points_to_scenarios(capsys):
    code, _, err = run_cli(
        capsys,
        "check",
        "--model", "translated-bm",
        "--definition", "ulp",
        "--x", "0",
        "--eps", "0.1",
    )
    assert code == 2
    assert "scenario" in err


def test_missing_required_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--x", "0", "--eps", "0.1"])
    assert exc.value.code == 2


def test_unknown_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def _run_subprocess(*argv):
    return subprocess.run(
        [sys.executable, "-m", "uldplab.cli", *argv],
        capture_output=True,
        text=True,
        check=False,
    )


def test_outputs_are_byte_identical_across_runs_and_threads():
    base = [
        "converge",
        "--model", "translated-bm",
        "--x", "0",
        "--x", "1",
        "--eps", "0.1",
        "--eps", "0.05",
        "--delta", "0.3",
        "--controls", "5",
        "--samples", "40",
        "--seed", "7",
        "--format", "csv",
    ]
    first = _run_subprocess(*base, "--threads", "1")
    second = _run_subprocess(*base, "--threads", "1")
    third = _run_subprocess(*base, "--threads", "3")
    assert first.returncode == 0
    assert first.stdout == second.stdout
    assert first.stdout == third.stdout
    assert first.stdout.splitlines()[0] == "eps,sup_prob,median_err,q90_err"


def test_estimate_byte_identical_across_runs():
    args = [
        "estimate",
        "--model", "swapped-bm",
        "--x", "0",
        "--eps", "0.1",
        "--delta", "0.4",
        "--samples", "3000",
        "--seed", "11",
        "--format", "csv",
    ]
    a = _run_subprocess(*args)
    b = _run_subprocess(*args)
    assert a.returncode == 0
    assert a.stdout == b.stdout


def test_scenario_subcommand_writes_result_and_exits_clean(tmp_path, capsys):
    out = tmp_path / "res.json"
    code, stdout, _ = run_cli(capsys, "scenario", "ulp-counter", "--out", str(out))
    assert code == 0
    assert "scenario ulp-counter: PASS" in stdout
    assert all(
        line.startswith("[PASS]") for line in stdout.splitlines() if line.startswith("[")
    )
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
