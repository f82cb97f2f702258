import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from sddpde import cli
from sddpde.config import PROBE_NAMES, RunConfig

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

NICHOLSON_SMOKE = """
[delay]
r = 1.0
[birth]
preset = nicholson
p = 2.0
[solver]
dt = 0.05
t_end = 5.0
d = 0.1
dt_list = 0.05, 0.025, 0.0125
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_zero_birth(tmp_path):
    code = cli.main(["run", "--config", str(CONFIGS / "zero_birth.ini"), "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert len(rows) == 11
    norms = [float(r["l2_norm"]) for r in rows]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert list(rows[0]) == ["t", "l2_norm", "c_norm", "cdelta_0.25", "fp_iters"]


def test_run_rejects_dt_not_dividing_r(tmp_path, capsys):
    text = (CONFIGS / "zero_birth.ini").read_text().replace("dt = 0.1", "dt = 0.3")
    code = cli.main(["run", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    assert "solver.dt" in capsys.readouterr().err


def test_config_errors_are_listed_together(tmp_path, capsys):
    text = "[solver]\ndt = 0.1\n[birth]\npreset = nicholson\n[bogus]\nx = 1\n"
    code = cli.main(["run", "--config", str(write(tmp_path, text))])
    err = capsys.readouterr().err
    assert code == cli.EXIT_CONFIG
    for needle in ("delay.r is required", "solver.t_end is required", "solver.d is required",
                   "unknown section [bogus]"):
        assert needle in err


def test_physical_parameters_have_no_defaults(tmp_path, capsys):
    text = NICHOLSON_SMOKE.replace("p = 2.0\n", "")
    assert cli.main(["run", "--config", str(write(tmp_path, text))]) == cli.EXIT_CONFIG
    assert "birth.p is required" in capsys.readouterr().err


def test_run_nicholson_smoke(tmp_path):
    code = cli.main(["run", "--config", str(write(tmp_path, NICHOLSON_SMOKE)), "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert math.isfinite(summary["final_l2_norm"]) and math.isfinite(summary["final_c_norm"])
    assert summary["max_fp_iters"] <= summary["fp_max_iter"]
    for key in ("L_Fc", "M_Vg", "absorbing_radius"):
        assert math.isfinite(summary["constants"][key])
    assert len(read_csv(tmp_path / "trajectory.csv")) == 101


def test_run_step_failure_exit_code(tmp_path):
    text = NICHOLSON_SMOKE.replace("d = 0.1", "d = 0.1\nfp_tol = 1e-300\nfp_max_iter = 2")
    code = cli.main(["run", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)])
    assert code == cli.EXIT_STEP
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "step_failure" and summary["time"] == pytest.approx(0.05)


def test_verify_gronwall_linear_problem(tmp_path):
    code = cli.main(["verify", "--config", str(CONFIGS / "zero_birth.ini"), "--out", str(tmp_path),
                     "--probes", "gronwall"])
    assert code == 0
    assert json.loads((tmp_path / "probe_gronwall.json").read_text())["passed"]


def test_verify_unknown_probe(tmp_path, capsys):
    code = cli.main(["verify", "--config", str(CONFIGS / "zero_birth.ini"), "--out", str(tmp_path),
                     "--probes", "gronwall,nonsense"])
    err = capsys.readouterr().err
    assert code != 0
    assert "nonsense" in err and all(name in err for name in PROBE_NAMES)


def test_verify_jump_demo_always_exits_zero(tmp_path):
    code = cli.main(["verify", "--config", str(CONFIGS / "zero_birth.ini"), "--out", str(tmp_path),
                     "--probes", "remark1"])
    assert code == 0 and (tmp_path / "probe_remark1.csv").exists()


def test_verify_all_default_config(tmp_path):
    code = cli.main(["verify", "--config", str(CONFIGS / "nicholson.ini"), "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    for name in PROBE_NAMES:
        assert (tmp_path / f"probe_{name}.json").exists()
        assert (tmp_path / f"probe_{name}.csv").exists()
    assert summary["all_passed"] == all(summary["probes"].values())
    assert code == (0 if summary["all_passed"] else 1)
    assert summary["all_passed"]
    assert summary["constants"]["L_Fc"] > 0


@pytest.mark.parametrize("name", ["zero_birth.ini", "constant_load.ini"])
def test_converge_exact_cases(name, tmp_path):
    code = cli.main(["converge", "--config", str(CONFIGS / name), "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "order_table.csv")
    diffs = [float(r["diff_to_next"]) for r in rows[:-1]]
    assert max(diffs) < 1e-12


def test_converge_nicholson(tmp_path):
    code = cli.main(["converge", "--config", str(CONFIGS / "nicholson.ini"), "--out", str(tmp_path)])
    assert code == 0
    order = float(read_csv(tmp_path / "order_table.csv")[0]["order"])
    assert 0.9 <= order <= 1.5


def test_converge_invalid_dt_list(tmp_path):
    text = (CONFIGS / "zero_birth.ini").read_text() + "dt_list = 0.1, 0.2, 0.05\n"
    code = cli.main(["converge", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)])
    assert code != 0


def test_config_echo_round_trip(tmp_path):
    cli.main(["run", "--config", str(CONFIGS / "nicholson.ini"), "--out", str(tmp_path), "--seed", "11"])
    echo = (tmp_path / "config_echo.ini").read_text()
    cfg = RunConfig.from_text(echo)
    assert cfg.to_ini() == echo
    assert cfg.run.seed == 11 and cfg.run.out == str(tmp_path)


def test_outputs_are_deterministic(tmp_path):
    cfg = str(CONFIGS / "nicholson.ini")
    for sub in ("a", "b"):
        cli.main(["run", "--config", cfg, "--out", str(tmp_path / sub)])
        cli.main(["verify", "--config", cfg, "--out", str(tmp_path / sub), "--probes",
                  "lipschitz,gronwall,fd_continuity"])
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert "trajectory.csv" in csvs and len(csvs) == 4
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sddpde", "run", "--config", str(CONFIGS / "zero_birth.ini"),
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "trajectory.csv").exists()
